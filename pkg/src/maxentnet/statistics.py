"""Closed-form per-pair statistics for the ensemble families.

Each family assigns every unordered node pair an independent integer weight
law. Binary families (Erdos-Renyi, degree-constrained, fitness) are Bernoulli
per pair; the strength-constrained family is geometric; the bounded family is
a truncated geometric; the degree-and-strength family mixes a Bernoulli link
step with a geometric weight step.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

FAMILIES = ("er", "bcm", "wcm", "bounded", "mixed", "fitness", "fitness-dist")

# Relative window around y = 1 where the removable singularity of the
# bounded-family formulas is evaluated by its limit/series instead.
_NEAR_ONE = 1e-12


class DomainError(ValueError):
    """Input outside the mathematical domain of a statistic."""


class DivergenceError(ValueError):
    """Bosonic condensation: expected weight infinite (y_i * y_j >= 1)."""


class ModelValidationError(ValueError):
    """ModelSpec parameters violate a family invariant."""


def fd_probability(xi, xj):
    """Fermi-Dirac link probability x_i x_j / (1 + x_i x_j)."""
    xi = np.asarray(xi, dtype=np.float64)
    xj = np.asarray(xj, dtype=np.float64)
    if (xi < 0).any() or (xj < 0).any():
        raise DomainError("multipliers must be non-negative")
    t = xi * xj
    with np.errstate(invalid="ignore"):
        p = np.where(np.isinf(t), 1.0, t / (1.0 + t))
    return p if p.ndim else float(p)


def be_stats(yi, yj):
    """Bose-Einstein per-pair law: (p, expected weight) for y_i y_j < 1."""
    yi = np.asarray(yi, dtype=np.float64)
    yj = np.asarray(yj, dtype=np.float64)
    if (yi < 0).any() or (yj < 0).any():
        raise DomainError("multipliers must be non-negative")
    t = yi * yj
    if (t >= 1.0).any():
        raise DivergenceError("bosonic condensation: expected weight infinite")
    ew = t / (1.0 - t)
    if t.ndim:
        return t, ew
    return float(t), float(ew)


def _log_or_ninf(y):
    with np.errstate(divide="ignore"):
        return np.log(y)


def bounded_nonzero_probability(yij, w_max):
    """P(w > 0) for the bounded family: y(1 - y^m) / (1 - y^(m+1)).

    Defined for all y >= 0 (finite support keeps everything normalizable);
    the removable singularity at y = 1 takes the value m / (m + 1).
    """
    m = int(w_max)
    if m < 1:
        raise DomainError("w_max must be a positive integer")
    scalar = np.isscalar(yij) or np.ndim(yij) == 0
    y = np.atleast_1d(np.asarray(yij, dtype=np.float64))
    if (y < 0).any():
        raise DomainError("y must be non-negative")
    if m == 1:
        # y(1 - y)/(1 - y^2) simplifies to y/(1 + y); evaluating the
        # simplified form keeps the unit-cap case bit-identical to the
        # saturating Bernoulli link law.
        out = y / (1.0 + y)
        return float(out[0]) if scalar else out
    t = _log_or_ninf(y)
    out = np.empty_like(y)
    near = np.abs(t) * (m + 1) < _NEAR_ONE
    lo = (y < 1.0) & ~near
    hi = (y > 1.0) & ~near
    out[near] = m / (m + 1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        # y < 1: both expm1 terms are in (-1, 0).
        out[lo] = y[lo] * np.expm1(m * t[lo]) / np.expm1((m + 1) * t[lo])
        # y > 1: rescale by y^-(m+1) to avoid overflow.
        out[hi] = np.expm1(-m * t[hi]) / np.expm1(-(m + 1) * t[hi])
    out[y == 0.0] = 0.0
    return float(out[0]) if scalar else out


def bounded_pmf(yij, w_max, w):
    """q(w) = y^w (1 - y) / (1 - y^(m+1)) on support 0..m; uniform at y = 1."""
    m = int(w_max)
    if m < 1:
        raise DomainError("w_max must be a positive integer")
    scalar = (np.isscalar(yij) or np.ndim(yij) == 0) and np.ndim(w) == 0
    w = np.asarray(w)
    if (w < 0).any() or (w > m).any() or not np.issubdtype(w.dtype, np.integer):
        raise DomainError(f"weight must be an integer in [0, {m}]")
    y = np.asarray(yij, dtype=np.float64)
    if (y < 0).any():
        raise DomainError("y must be non-negative")
    y, w = np.broadcast_arrays(np.atleast_1d(y), np.atleast_1d(w))
    t = _log_or_ninf(y)
    out = np.empty(y.shape, dtype=np.float64)
    near = np.abs(t) * (m + 1) < _NEAR_ONE
    lo = (y < 1.0) & ~near
    hi = (y > 1.0) & ~near
    out[near] = 1.0 / (m + 1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        out[lo] = np.exp(w[lo] * t[lo]) * np.expm1(t[lo]) / np.expm1((m + 1) * t[lo])
        out[hi] = (
            np.exp((w[hi] - m - 1) * t[hi])
            * np.expm1(t[hi])
            / -np.expm1(-(m + 1) * t[hi])
        )
    zero = y == 0.0
    out[zero] = (w[zero] == 0).astype(np.float64)
    return float(out[0]) if scalar else out


def _g_mean(u):
    """u / (1 - exp(-u)), the smooth helper behind the truncated-geometric mean."""
    u = np.asarray(u, dtype=np.float64)
    small = np.abs(u) < 1e-8
    out = np.empty_like(u)
    out[small] = 1.0 + u[small] / 2.0 + u[small] ** 2 / 12.0
    with np.errstate(over="ignore", invalid="ignore"):
        out[~small] = u[~small] / -np.expm1(-u[~small])
    # u -> -inf: denominator overflows, limit is 0.
    out[np.isneginf(u) | np.isnan(out)] = 0.0
    return out


def bounded_mean(yij, w_max):
    """Expected weight of the bounded family, sum_w w q(w) in closed form."""
    m = int(w_max)
    if m < 1:
        raise DomainError("w_max must be a positive integer")
    scalar = np.isscalar(yij) or np.ndim(yij) == 0
    y = np.atleast_1d(np.asarray(yij, dtype=np.float64))
    if (y < 0).any():
        raise DomainError("y must be non-negative")
    t = _log_or_ninf(y)
    out = np.empty_like(y)
    near = np.abs(t) * (m + 1) < _NEAR_ONE
    out[near] = m / 2.0 + t[near] * m * (m + 2) / 12.0
    rest = ~near
    out[rest] = (_g_mean((m + 1) * t[rest]) - _g_mean(t[rest])) / t[rest]
    out[y == 0.0] = 0.0
    return float(out[0]) if scalar else out


def mixed_stats(xi, xj, yi, yj):
    """Expected (link, weight) under simultaneous degree+strength constraints."""
    xi, xj, yi, yj = (np.asarray(v, dtype=np.float64) for v in (xi, xj, yi, yj))
    if (xi < 0).any() or (xj < 0).any() or (yi < 0).any() or (yj < 0).any():
        raise DomainError("multipliers must be non-negative")
    X = xi * xj
    Y = yi * yj
    if (Y >= 1.0).any():
        raise DivergenceError("bosonic condensation: expected weight infinite")
    d = 1.0 - Y + X * Y
    a = X * Y / d
    ew = a / (1.0 - Y)
    if a.ndim:
        return a, ew
    return float(a), float(ew)


def mixed_pmf(xi, xj, yi, yj, w):
    """q(0) = (1-Y)/(1-Y+XY); q(w>=1) = X Y^w (1-Y)/(1-Y+XY)."""
    xi, xj, yi, yj = (np.asarray(v, dtype=np.float64) for v in (xi, xj, yi, yj))
    w = np.asarray(w)
    if (w < 0).any() or not np.issubdtype(w.dtype, np.integer):
        raise DomainError("weight must be a non-negative integer")
    X = xi * xj
    Y = yi * yj
    if (Y >= 1.0).any():
        raise DivergenceError("bosonic condensation: expected weight infinite")
    d = 1.0 - Y + X * Y
    base = (1.0 - Y) / d
    out = np.where(w == 0, base, X * Y ** np.maximum(w, 1) * base)
    return out if out.ndim else float(out)


def fitness_probability(z, fi, fj, dij=None, gamma=None, kernel=None):
    """Link probability z f_i f_j e^(-gamma f(d)) / (1 + same).

    Without distance terms the exponential factor is 1. The default distance
    kernel is the identity.
    """
    fi = np.asarray(fi, dtype=np.float64)
    fj = np.asarray(fj, dtype=np.float64)
    if z < 0:
        raise DomainError("z must be non-negative")
    if (fi <= 0).any() or (fj <= 0).any():
        raise DomainError("fitness values must be strictly positive")
    t = z * fi * fj
    if dij is not None and gamma is not None:
        d = np.asarray(dij, dtype=np.float64)
        if kernel is not None:
            d = kernel(d)
        with np.errstate(over="ignore", under="ignore"):
            t = t * np.exp(-gamma * d)
    with np.errstate(invalid="ignore"):
        p = np.where(np.isinf(t), 1.0, t / (1.0 + t))
    return p if p.ndim else float(p)


def er_graph_probability(p, g):
    """Log-probability of a binary graph under the homogeneous random model."""
    npairs = g.n * (g.n - 1) // 2
    nlinks = g.link_count()
    if p < 0 or p > 1:
        raise DomainError("p must be in [0, 1]")
    if p == 0.0:
        return 0.0 if nlinks == 0 else float("-inf")
    if p == 1.0:
        return 0.0 if nlinks == npairs else float("-inf")
    return nlinks * np.log(p) + (npairs - nlinks) * np.log1p(-p)


@dataclass
class ModelSpec:
    """Ensemble family identifier plus its parameter vectors."""

    family: str
    p: float | None = None
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z: float | None = None
    gamma: float | None = None
    w_max: int | None = None
    n: int | None = field(default=None)  # only needed by the homogeneous family

    def __post_init__(self):
        if self.x is not None:
            self.x = np.asarray(self.x, dtype=np.float64)
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=np.float64)
        self.validate()

    def validate(self):
        fam = self.family
        if fam not in FAMILIES:
            raise ModelValidationError(f"unknown family {fam!r}")
        if fam == "er":
            if self.p is None or not 0.0 <= self.p <= 1.0:
                raise ModelValidationError("er requires p in [0, 1]")
        elif fam == "bcm":
            if self.x is None or (self.x < 0).any():
                raise ModelValidationError("bcm requires x_i >= 0")
        elif fam in ("wcm", "bounded", "mixed"):
            if self.y is None or (self.y < 0).any():
                raise ModelValidationError(f"{fam} requires y_i >= 0")
            yy = np.outer(self.y, self.y)
            np.fill_diagonal(yy, 0.0)
            if fam in ("wcm", "mixed") and (yy >= 1.0).any():
                raise ModelValidationError(
                    f"{fam} requires y_i y_j < 1 for all pairs (infinite expected weight)"
                )
            if fam == "mixed":
                if self.x is None or (self.x < 0).any():
                    raise ModelValidationError("mixed requires x_i >= 0")
                if self.x.shape != self.y.shape:
                    raise ModelValidationError("mixed requires matching x and y lengths")
                # Degree constraints without strength constraints (all y -> 1)
                # leave the weights unnormalizable; reject outright.
                if (self.y == 1.0).all():
                    raise ModelValidationError(
                        "degenerate mixed model: unit y vector drops the strength "
                        "constraints and leaves expected weights infinite"
                    )
            if fam == "bounded" and (self.w_max is None or int(self.w_max) < 1):
                raise ModelValidationError("bounded requires integer w_max >= 1")
        elif fam in ("fitness", "fitness-dist"):
            if self.z is None or self.z < 0:
                raise ModelValidationError(f"{fam} requires z >= 0")
            if fam == "fitness-dist" and (self.gamma is None or not np.isfinite(self.gamma)):
                raise ModelValidationError("fitness-dist requires finite gamma")

    def size(self, attrs=None):
        for v in (self.x, self.y):
            if v is not None:
                return len(v)
        if attrs is not None:
            return attrs.n
        if self.n is not None:
            return self.n
        raise ModelValidationError("model size is undetermined (supply n or attributes)")

    def to_dict(self):
        out = {"family": self.family}
        for key in ("p", "z", "gamma", "w_max", "n"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        for key in ("x", "y"):
            val = getattr(self, key)
            if val is not None:
                out[key] = [float(v) for v in val]
        return out

    @classmethod
    def from_dict(cls, d):
        return cls(
            family=d["family"],
            p=d.get("p"),
            x=None if d.get("x") is None else np.array(d["x"], dtype=np.float64),
            y=None if d.get("y") is None else np.array(d["y"], dtype=np.float64),
            z=d.get("z"),
            gamma=d.get("gamma"),
            w_max=d.get("w_max"),
            n=d.get("n"),
        )


@dataclass(frozen=True)
class PairStatistics:
    """Materialized per-pair connection probabilities and expected weights."""

    p: np.ndarray
    ew: np.ndarray


def _fitness_matrix(spec, attrs):
    if attrs is None:
        raise ModelValidationError(f"{spec.family} requires node attributes")
    f = attrs.fitness
    if spec.family == "fitness-dist":
        d = attrs.distance_matrix()
        p = fitness_probability(spec.z, f[:, None], f[None, :], d, spec.gamma)
    else:
        p = fitness_probability(spec.z, f[:, None], f[None, :])
    return p


def pair_statistics(spec: ModelSpec, attrs=None) -> PairStatistics:
    """Materialize the n x n probability and expected-weight matrices."""
    fam = spec.family
    if fam == "er":
        n = spec.size(attrs)
        p = np.full((n, n), float(spec.p))
        ew = p.copy()
    elif fam == "bcm":
        p = fd_probability(spec.x[:, None], spec.x[None, :])
        ew = p.copy()
    elif fam == "wcm":
        # The diagonal is never a pair; mask it before the divergence check
        # (y_i^2 >= 1 is legal as long as every off-diagonal product is < 1).
        yy = np.outer(spec.y, spec.y)
        np.fill_diagonal(yy, 0.0)
        if (yy >= 1.0).any():
            raise DivergenceError("bosonic condensation: expected weight infinite")
        p = yy
        ew = yy / (1.0 - yy)
    elif fam == "bounded":
        yy = np.outer(spec.y, spec.y)
        np.fill_diagonal(yy, 0.0)
        p = bounded_nonzero_probability(yy, spec.w_max)
        ew = bounded_mean(yy, spec.w_max)
    elif fam == "mixed":
        xx = np.outer(spec.x, spec.x)
        yy = np.outer(spec.y, spec.y)
        np.fill_diagonal(xx, 0.0)
        np.fill_diagonal(yy, 0.0)
        if (yy >= 1.0).any():
            raise DivergenceError("bosonic condensation: expected weight infinite")
        p = xx * yy / (1.0 - yy + xx * yy)
        ew = p / (1.0 - yy)
    else:
        p = _fitness_matrix(spec, attrs)
        ew = p.copy()
    np.fill_diagonal(p, 0.0)
    np.fill_diagonal(ew, 0.0)
    return PairStatistics(p=p, ew=ew)


def _bernoulli_loglik(p, a, labels):
    iu = np.triu_indices(p.shape[0], k=1)
    pv, av = p[iu], a[iu]
    bad_on = (av > 0) & (pv == 0.0)
    bad_off = (av == 0) & (pv == 1.0)
    if bad_on.any() or bad_off.any():
        idx = int(np.flatnonzero(bad_on | bad_off)[0])
        i, j = iu[0][idx], iu[1][idx]
        warnings.warn(
            f"zero-probability configuration realized at pair ({labels[i]}, {labels[j]})",
            RuntimeWarning,
            stacklevel=3,
        )
        return float("-inf")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(av > 0, np.log(pv), np.log1p(-pv))
    return float(terms.sum())


def log_likelihood(spec: ModelSpec, g, attrs=None):
    """Sum over pairs i<j of the log pmf of the realized weight (or link)."""
    if spec.family != "er" and spec.size(attrs) != g.n:
        raise ModelValidationError("model size does not match graph size")
    w = g.weights
    iu = np.triu_indices(g.n, k=1)
    if spec.family == "er":
        return float(er_graph_probability(spec.p, g))
    if spec.family in ("bcm", "fitness", "fitness-dist"):
        p = pair_statistics(spec, attrs).p
        return _bernoulli_loglik(p, (w > 0).astype(np.int64), g.labels)
    if spec.family == "wcm":
        yy = np.outer(spec.y, spec.y)[iu]
        wv = w[iu]
        bad = (wv > 0) & (yy == 0.0)
        if bad.any():
            idx = int(np.flatnonzero(bad)[0])
            i, j = iu[0][idx], iu[1][idx]
            warnings.warn(
                f"zero-probability weight realized at pair ({g.labels[i]}, {g.labels[j]})",
                RuntimeWarning,
                stacklevel=2,
            )
            return float("-inf")
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(wv > 0, wv * np.log(yy), 0.0) + np.log1p(-yy)
        return float(terms.sum())
    if spec.family == "bounded":
        yy = np.outer(spec.y, spec.y)[iu]
        wv = w[iu]
        if (wv > spec.w_max).any():
            idx = int(np.flatnonzero(wv > spec.w_max)[0])
            i, j = iu[0][idx], iu[1][idx]
            warnings.warn(
                f"weight above w_max realized at pair ({g.labels[i]}, {g.labels[j]})",
                RuntimeWarning,
                stacklevel=2,
            )
            return float("-inf")
        q = bounded_pmf(yy, spec.w_max, wv)
        return _pmf_loglik(q, iu, g.labels)
    if spec.family == "mixed":
        xi = spec.x[iu[0]]
        xj = spec.x[iu[1]]
        yi = spec.y[iu[0]]
        yj = spec.y[iu[1]]
        q = mixed_pmf(xi, xj, yi, yj, w[iu])
        return _pmf_loglik(q, iu, g.labels)
    raise ModelValidationError(f"unknown family {spec.family!r}")


def _pmf_loglik(q, iu, labels):
    q = np.asarray(q, dtype=np.float64)
    if (q == 0.0).any():
        idx = int(np.flatnonzero(q == 0.0)[0])
        i, j = iu[0][idx], iu[1][idx]
        warnings.warn(
            f"zero-probability weight realized at pair ({labels[i]}, {labels[j]})",
            RuntimeWarning,
            stacklevel=3,
        )
        return float("-inf")
    return float(np.log(q).sum())
