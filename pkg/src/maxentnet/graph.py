"""Graph data model, CSV ingestion, and observed structural metrics.

Graphs are undirected and simple, with non-negative integer edge weights.
Real-valued flows are quantized on load with a user-supplied unit. Per-node
metrics that are undefined for low-degree nodes (average nearest-neighbour
quantities, clustering) are carried as NaN rather than silent zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

EARTH_RADIUS_KM = 6371.0


class GraphInputError(ValueError):
    """Raised for malformed edge lists, attributes, or distance matrices."""


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected simple graph with integer weights, immutable after load."""

    labels: tuple
    weights: np.ndarray  # (n, n) int64, symmetric, zero diagonal

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.int64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise GraphInputError("weight matrix must be square")
        if w.shape[0] != len(self.labels):
            raise GraphInputError("label count does not match matrix size")
        if (w < 0).any():
            raise GraphInputError("negative weights are not allowed")
        if np.diagonal(w).any():
            raise GraphInputError("self-loops are not allowed")
        if not (w == w.T).all():
            raise GraphInputError("weight matrix must be symmetric")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def n(self):
        return len(self.labels)

    def adjacency(self):
        """Binary projection: a_ij = 1 iff w_ij > 0."""
        return (self.weights > 0).astype(np.float64)

    def link_count(self):
        return int((self.weights > 0).sum() // 2)

    def total_weight(self):
        return int(self.weights.sum() // 2)

    def binarized(self):
        """Graph with every positive weight replaced by 1."""
        return WeightedGraph(self.labels, (self.weights > 0).astype(np.int64))


def load_graph(source, unit=1.0, isolated=()):
    """Build a WeightedGraph from (label_a, label_b, weight) rows.

    `source` is a path to a CSV with header ``src,dst,weight`` or an iterable
    of row triples. Weights are quantized as round(weight/unit) with
    round-half-up; rows quantizing to zero are dropped; duplicate pairs are
    summed. `isolated` declares extra nodes that carry no edges.
    """
    if unit <= 0:
        raise GraphInputError("quantization unit must be positive")
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header[:3]] != ["src", "dst", "weight"]:
                raise GraphInputError("edge list must have header src,dst,weight")
            rows = [tuple(r) for r in reader if r]
    else:
        rows = list(source)

    edges = {}
    order = []
    seen = set()

    def note(label):
        if label not in seen:
            seen.add(label)
            order.append(label)

    for idx, row in enumerate(rows, start=1):
        a, b, w = str(row[0]), str(row[1]), float(row[2])
        if w < 0:
            raise GraphInputError(f"row {idx}: negative weight {w}")
        if a == b:
            raise GraphInputError(f"row {idx}: self-loop on node {a!r}")
        note(a)
        note(b)
        q = math.floor(w / unit + 0.5)
        if q == 0:
            continue
        key = (a, b) if a < b else (b, a)
        edges[key] = edges.get(key, 0) + q

    for label in isolated:
        note(str(label))

    labels = tuple(order)
    index = {lab: i for i, lab in enumerate(labels)}
    mat = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for (a, b), q in edges.items():
        mat[index[a], index[b]] = q
        mat[index[b], index[a]] = q
    return WeightedGraph(labels, mat)


@dataclass
class NodeAttributes:
    """Exogenous node data: GDP-like fitness and geography."""

    labels: tuple
    fitness: np.ndarray
    positions: np.ndarray | None = None  # (n, 2) latitude, longitude in degrees
    distances: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.labels = tuple(str(x) for x in self.labels)
        self.fitness = np.asarray(self.fitness, dtype=np.float64)
        if self.fitness.shape != (len(self.labels),):
            raise GraphInputError("fitness length must match label count")
        if (self.fitness <= 0).any():
            raise GraphInputError("fitness values must be strictly positive")
        if self.positions is not None:
            self.positions = np.asarray(self.positions, dtype=np.float64)
            if self.positions.shape != (len(self.labels), 2):
                raise GraphInputError("positions must be (n, 2) lat/lon degrees")
        if self.distances is not None:
            d = np.asarray(self.distances, dtype=np.float64)
            if d.shape != (len(self.labels),) * 2:
                raise GraphInputError("distance matrix must be n x n")
            if (d < 0).any() or np.diagonal(d).any() or not np.allclose(d, d.T):
                raise GraphInputError("distances must be symmetric, non-negative, zero diagonal")
            self.distances = d

    @property
    def n(self):
        return len(self.labels)

    def distance_matrix(self):
        """Explicit matrix if present, else great-circle distances from positions."""
        if self.distances is not None:
            return self.distances
        if self.positions is None:
            raise GraphInputError("no distances and no positions available")
        lat = np.radians(self.positions[:, 0])
        lon = np.radians(self.positions[:, 1])
        dlat = lat[:, None] - lat[None, :]
        dlon = lon[:, None] - lon[None, :]
        h = np.sin(dlat / 2) ** 2 + np.cos(lat)[:, None] * np.cos(lat)[None, :] * np.sin(dlon / 2) ** 2
        d = 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))
        np.fill_diagonal(d, 0.0)
        return d

    def reindex(self, labels):
        """Reorder to a graph's label order; every label must be present."""
        index = {lab: i for i, lab in enumerate(self.labels)}
        try:
            perm = np.array([index[str(lab)] for lab in labels], dtype=np.intp)
        except KeyError as exc:
            raise GraphInputError(f"attributes missing node {exc.args[0]!r}") from exc
        return NodeAttributes(
            labels=tuple(str(x) for x in labels),
            fitness=self.fitness[perm],
            positions=None if self.positions is None else self.positions[perm],
            distances=None if self.distances is None else self.distances[np.ix_(perm, perm)],
        )


def load_attributes(path):
    """Read node attributes from CSV with header ``node,fitness[,lat,lon]``."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise GraphInputError("empty attributes file")
        cols = [h.strip().lower() for h in header]
        if cols[:2] != ["node", "fitness"]:
            raise GraphInputError("attributes must have header node,fitness[,lat,lon]")
        has_pos = cols[2:4] == ["lat", "lon"]
        labels, fitness, positions = [], [], []
        for row in reader:
            if not row:
                continue
            labels.append(row[0])
            fitness.append(float(row[1]))
            if has_pos:
                positions.append((float(row[2]), float(row[3])))
    return NodeAttributes(
        labels=tuple(labels),
        fitness=np.array(fitness),
        positions=np.array(positions) if has_pos else None,
    )


def load_distance_matrix(path):
    """Read a labeled symmetric distance matrix CSV; returns (labels, matrix)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise GraphInputError("empty distance matrix file")
        labels = tuple(h.strip() for h in header[1:])
        rows = []
        for row in reader:
            if not row:
                continue
            if row[0].strip() != labels[len(rows)]:
                raise GraphInputError("distance matrix row labels must match column labels")
            rows.append([float(x) for x in row[1:]])
    mat = np.array(rows, dtype=np.float64)
    if mat.shape != (len(labels), len(labels)):
        raise GraphInputError("distance matrix must be square")
    return labels, mat


# ---------------------------------------------------------------------------
# Observed metrics. All route through the shared backend kernel so that the
# observed and ensemble-expected values use identical formulas.

def _all_metrics(g: WeightedGraph):
    adj = g.adjacency()
    wts = g.weights.astype(np.float64)
    wtot = g.total_weight()
    if wtot > 0:
        return _kernels.node_metrics(adj, wts, float(wtot))
    # Empty weighted graph: binary metrics are still defined; cw is not.
    k, s, knn, snn, c, _ = _kernels.node_metrics(adj, wts, 1.0)
    return k, s, knn, snn, c, None


def degree(g):
    return _all_metrics(g)[0]


def strength(g):
    return _all_metrics(g)[1]


def avg_nn_degree(g):
    """k^nn_i = sum_j a_ij k_j / k_i; NaN for isolated nodes."""
    return _all_metrics(g)[2]


def avg_nn_strength(g):
    """s^nn_i = sum_j a_ij s_j / k_i; NaN for isolated nodes."""
    return _all_metrics(g)[3]


def clustering(g):
    """Fraction of linked pairs among each node's partners; NaN for k <= 1."""
    return _all_metrics(g)[4]


def weighted_clustering(g):
    """Geometric-mean triple clustering on weights rescaled by total weight."""
    cw = _all_metrics(g)[5]
    if cw is None:
        raise ValueError("empty weighted graph")
    return cw


def density(g):
    if g.n < 2:
        raise ValueError("density requires at least two nodes")
    return g.link_count() / (g.n * (g.n - 1) / 2)
