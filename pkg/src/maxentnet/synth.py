"""Synthetic trade-like network generator.

Links are drawn from the fitness link law; weights on realized links are one
plus a geometric draw whose conditional mean is a gravity-style power of the
fitness product, so the geometric parameter is derived from fitness products
and stays below one by construction. The output is heterogeneous and sparse
like a trade network and is consumable by the whole pipeline (fit, expect,
sample, compare).
"""

from __future__ import annotations

import csv

import numpy as np
from scipy.optimize import brentq

from .graph import NodeAttributes, WeightedGraph
from .statistics import fitness_probability


def _solve_z_for_density(f, density, d=None, gamma=None):
    n = len(f)
    npairs = n * (n - 1) / 2
    target = density * npairs

    def h(z):
        p = fitness_probability(z, f[:, None], f[None, :], d, gamma)
        np.fill_diagonal(p, 0.0)
        return p.sum() / 2.0 - target

    hi = 1.0
    while h(hi) < 0:
        hi *= 2.0
        if hi > 1e300:
            raise ValueError("cannot reach requested density")
    return brentq(h, 0.0, hi, xtol=1e-300, rtol=8.9e-16)


def generate(
    n,
    seed,
    z=None,
    density=None,
    fitness_min=0.05,
    fitness_max=20.0,
    gamma=None,
    weight_scale=8.0,
    weight_exponent=1.4,
):
    """Generate (WeightedGraph, NodeAttributes) with a fixed seed.

    Exactly one of `z` and `density` must be given. With `gamma`, node
    positions are drawn uniformly on the sphere and the link law includes the
    exponential distance suppression. Conditional on a link, the weight is
    1 + Geometric(y_ij) with mean max(weight_scale * (f_i f_j)^weight_exponent, 1),
    which makes strengths span several orders of magnitude like trade volumes.
    """
    if (z is None) == (density is None):
        raise ValueError("specify exactly one of z and density")
    if n < 2:
        raise ValueError("n must be >= 2")
    if weight_scale <= 0:
        raise ValueError("weight_scale must be positive")
    if weight_exponent <= 0:
        raise ValueError("weight_exponent must be positive")

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fitness = np.logspace(np.log10(fitness_min), np.log10(fitness_max), n)
    labels = tuple(f"N{i:04d}" for i in range(n))

    positions = None
    d = None
    if gamma is not None:
        lat = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, n)))
        lon = rng.uniform(-180.0, 180.0, n)
        positions = np.column_stack([lat, lon])

    attrs = NodeAttributes(labels=labels, fitness=fitness, positions=positions)
    if gamma is not None:
        d = attrs.distance_matrix()

    if z is None:
        z = _solve_z_for_density(fitness, density, d, gamma)
    if z < 0:
        raise ValueError("z must be non-negative")

    p = fitness_probability(z, fitness[:, None], fitness[None, :], d, gamma)
    np.fill_diagonal(p, 0.0)

    # Pair-level geometric parameter: mean conditional weight follows a
    # gravity-style power of the fitness product, floored at 1, so
    # y_ij = 1 - 1/mean is always strictly below one.
    mean_w = np.maximum(weight_scale * np.outer(fitness, fitness) ** weight_exponent, 1.0)
    yy = 1.0 - 1.0 / mean_w

    iu = np.triu_indices(n, k=1)
    link = rng.random(len(iu[0])) < p[iu]
    u = rng.random(len(iu[0]))
    yv = yy[iu]
    with np.errstate(divide="ignore"):
        extra = np.where(yv > 0, np.floor(np.log(u) / np.log(yv)), 0.0)
    w = np.where(link, 1.0 + extra, 0.0)

    mat = np.zeros((n, n), dtype=np.int64)
    mat[iu] = w.astype(np.int64)
    mat += mat.T
    return WeightedGraph(labels, mat), attrs, float(z)


def write_edges_csv(g: WeightedGraph, path):
    iu = np.triu_indices(g.n, k=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "weight"])
        for i, j in zip(*iu):
            w = int(g.weights[i, j])
            if w > 0:
                writer.writerow([g.labels[i], g.labels[j], w])


def write_attributes_csv(attrs: NodeAttributes, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if attrs.positions is not None:
            writer.writerow(["node", "fitness", "lat", "lon"])
            for lab, f, (lat, lon) in zip(attrs.labels, attrs.fitness, attrs.positions):
                writer.writerow([lab, repr(float(f)), repr(float(lat)), repr(float(lon))])
        else:
            writer.writerow(["node", "fitness"])
            for lab, f in zip(attrs.labels, attrs.fitness):
                writer.writerow([lab, repr(float(f))])
