"""Parameter fitting: Lagrange multipliers and scalar fitness parameters.

Constraint-matching ensembles (degrees, strengths, or both) are solved with a
damped fixed-point iteration on the multipliers. Nodes sharing identical
constraint values share one unknown, which both shrinks the system and makes
the equal-multiplier property exact. Scalar fits (z, and gamma for the
distance variant) use bracketing root finders on monotone maps.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, root

from .statistics import ModelSpec, ModelValidationError, fitness_probability, pair_statistics

log = logging.getLogger(__name__)

_MIN_DAMPING = 1.0 / 1024.0


class InfeasibleConstraintsError(ValueError):
    """Observed constraints cannot be matched by any finite parameters."""


@dataclass
class SolverConfig:
    tolerance: float = 1e-10
    max_iterations: int = 100_000
    damping: float = 1.0
    initializer: str = "proportional"

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


@dataclass
class FittedModel:
    spec: ModelSpec
    residuals: np.ndarray
    iterations: int
    converged: bool
    tolerance: float
    diagnosis: str | None = field(default=None)

    def max_residual(self):
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0

    def to_dict(self):
        d = self.spec.to_dict()
        family = d.pop("family")
        out = {
            "family": family,
            "parameters": d,
            "residuals": [float(r) for r in self.residuals],
            "iterations": self.iterations,
            "converged": self.converged,
            "tolerance": self.tolerance,
        }
        if self.diagnosis:
            out["diagnosis"] = self.diagnosis
        return out

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d):
        spec = ModelSpec.from_dict({"family": d["family"], **d.get("parameters", {})})
        return cls(
            spec=spec,
            residuals=np.array(d.get("residuals", []), dtype=np.float64),
            iterations=int(d.get("iterations", 0)),
            converged=bool(d.get("converged", False)),
            tolerance=float(d.get("tolerance", 0.0)),
            diagnosis=d.get("diagnosis"),
        )

    @classmethod
    def from_json(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _relative(expected, observed):
    observed = np.asarray(observed, dtype=np.float64)
    return np.abs(expected - observed) / np.maximum(observed, 1.0)


def solve_er(g, cfg=None):
    """Homogeneous baseline: p = L / (n(n-1)/2), exact in one step."""
    npairs = g.n * (g.n - 1) / 2
    p = g.link_count() / npairs
    spec = ModelSpec(family="er", p=p, n=g.n)
    resid = np.array([abs(p * npairs - g.link_count()) / max(g.link_count(), 1)])
    return FittedModel(spec, resid, iterations=1, converged=True, tolerance=0.0)


def _iterate(values, counts, state0, update, expected, cfg, fixed_zero):
    """Shared damped fixed-point driver over constraint classes.

    `state0` is the initial per-class parameter array (tuple of arrays for the
    two-parameter family). `update` maps state -> candidate state; `expected`
    maps state -> per-class expected constraint values; `fixed_zero` marks
    classes whose parameters are pinned at zero.
    """
    state = state0
    damping = cfg.damping
    prev = np.inf
    for it in range(1, cfg.max_iterations + 1):
        resid = np.max(_relative(expected(state), values)) if values.size else 0.0
        if resid <= cfg.tolerance:
            return state, it, True
        if resid > prev:
            damping = max(damping / 2.0, _MIN_DAMPING)
        prev = resid
        candidate = update(state)
        # 0 * inf can appear transiently when a parameter diverges.
        with np.errstate(invalid="ignore"):
            if isinstance(state, tuple):
                state = tuple(
                    np.where(fixed_zero, 0.0, (1 - damping) * s + damping * c)
                    for s, c in zip(state, candidate)
                )
            else:
                state = np.where(
                    fixed_zero, 0.0, (1 - damping) * state + damping * candidate
                )
    return state, cfg.max_iterations, False


def _newton_polish(u0, fvec):
    """Newton accelerator on log-parameters for stubborn fixed points.

    Convergence is judged afterwards by the caller's own residual criterion,
    not by the optimizer's flag (its xtol is deliberately tighter than float
    resolution, which makes it report failure even at machine precision).
    """
    sol = root(fvec, u0, method="hybr", options={"xtol": 1e-14})
    return sol.x, int(sol.nfev)


# Fixed-point iterations past this point rarely help; hand over to Newton.
_FP_STAGE_LIMIT = 2000


def _stage_cfg(cfg):
    return replace(cfg, max_iterations=min(cfg.max_iterations, _FP_STAGE_LIMIT))


def _signed_relative(expected, observed):
    return (expected - observed) / np.maximum(observed, 1.0)


def solve_bcm(k, cfg=None):
    """Fit multipliers x so every expected degree matches its observed value."""
    cfg = cfg or SolverConfig()
    k = np.asarray(k, dtype=np.float64)
    n = len(k)
    if (k < 0).any() or (k > n - 1).any():
        raise InfeasibleConstraintsError("degrees must lie in [0, n-1]")
    diagnosis = None
    if (k == n - 1).any() and (k == 0).any():
        diagnosis = (
            "infeasible: a node with degree n-1 coexists with an isolated node; "
            "no finite multipliers can satisfy both constraints"
        )

    vals, inv, counts = np.unique(k, return_inverse=True, return_counts=True)
    zero = vals == 0.0
    if zero.all():
        spec = ModelSpec(family="bcm", x=np.zeros(n))
        return FittedModel(spec, np.zeros(n), 1, True, cfg.tolerance)

    two_l = k.sum()
    xc0 = np.where(zero, 0.0, vals / np.sqrt(max(two_l, 1.0)))

    def expected(xc):
        # Diverging multipliers (infeasible constraints) produce inf * 0 on
        # the zero-degree rows; the saturated limit there is p = 1.
        with np.errstate(invalid="ignore", over="ignore"):
            xx = np.outer(xc, xc)
            p = np.where(np.isinf(xx) | np.isnan(xx), 1.0, xx / (1.0 + xx))
        return p @ counts - np.diagonal(p)

    def update(xc):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            frac = xc[None, :] / (1.0 + np.outer(xc, xc))
            frac = np.nan_to_num(frac, nan=0.0, posinf=0.0)
            denom = frac @ counts - xc / (1.0 + xc * xc)
            new = vals / denom
        return np.where(zero | ~(denom > 0.0), xc, new)

    xc, iters, ok = _iterate(vals, counts, xc0, update, expected, _stage_cfg(cfg), zero)
    if not ok and diagnosis is None:
        nz = ~zero

        def fvec(u):
            v = np.zeros_like(xc)
            v[nz] = np.exp(u)
            return _signed_relative(expected(v), vals)[nz]

        u, nfev = _newton_polish(np.log(np.maximum(xc[nz], 1e-300)), fvec)
        cand = np.zeros_like(xc)
        cand[nz] = np.exp(u)
        if np.max(_relative(expected(cand), vals)) <= np.max(_relative(expected(xc), vals)):
            xc = cand
        iters += nfev
        ok = bool(np.max(_relative(expected(xc), vals)) <= cfg.tolerance)
    x = xc[inv]
    resid = _relative(expected(xc), vals)[inv]
    if diagnosis is not None:
        ok = False
    return FittedModel(ModelSpec(family="bcm", x=x), resid, iters, ok, cfg.tolerance, diagnosis)


# Largest pair product the iterations may occupy. Strength-concentrated
# inputs pin the solution very close to the y_i y_j = 1 boundary, so the
# guard must not push iterates far back from it.
_BOUNDARY = 1.0 - 1e-9


def _pair_products(yc, counts):
    """Outer product with intra-class handling: a single-member class has no
    pair with itself, so its diagonal entry is masked to zero."""
    with np.errstate(over="ignore"):
        yy = np.outer(yc, yc)
    if counts is not None:
        np.fill_diagonal(yy, np.where(counts > 1, np.diagonal(yy), 0.0))
    return yy


def _bosonic_guard(yc, counts):
    """Rescale the whole multiplier vector back inside y_i y_j < 1."""
    top = _pair_products(yc, counts).max()
    if top >= _BOUNDARY:
        yc = yc * np.sqrt(_BOUNDARY / top)
    return yc


def _wcm_expected(yc, counts):
    """Per-class expected strengths; safe when some pair products exceed 1
    transiently (those states are rejected by guards or penalties)."""
    yy = _pair_products(yc, counts)
    with np.errstate(divide="ignore", invalid="ignore"):
        ew = yy / (1.0 - yy)
    return ew @ counts - np.diagonal(ew)


def solve_wcm(s, cfg=None):
    """Fit multipliers y so every expected strength matches its observed value."""
    cfg = cfg or SolverConfig()
    s = np.asarray(s, dtype=np.float64)
    n = len(s)
    if (s < 0).any():
        raise InfeasibleConstraintsError("strengths must be non-negative")

    vals, inv, counts = np.unique(s, return_inverse=True, return_counts=True)
    zero = vals == 0.0
    if zero.all():
        spec = ModelSpec(family="wcm", y=np.zeros(n))
        return FittedModel(spec, np.zeros(n), 1, True, cfg.tolerance)

    two_w = s.sum()
    yc0 = np.where(zero, 0.0, vals / np.sqrt(two_w))
    yc0 = _bosonic_guard(yc0, counts)

    def expected(yc):
        return _wcm_expected(yc, counts)

    def update(yc):
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = yc[None, :] / (1.0 - np.outer(yc, yc))
            denom = frac @ counts - yc / (1.0 - yc * yc)
            new = vals / denom
        new = np.where(zero | ~np.isfinite(new) | (denom <= 0.0), yc, new)
        return _bosonic_guard(new, counts)

    def maxres(yc):
        return np.max(_relative(expected(yc), vals))

    yc, iters, ok = _iterate(vals, counts, yc0, update, expected, _stage_cfg(cfg), zero)
    if not ok:
        cand, nfev = _hybr_wcm(yc, vals, counts, zero)
        iters += nfev
        if maxres(cand) <= maxres(yc):
            yc = cand
        ok = bool(maxres(yc) <= cfg.tolerance)
    if not ok:
        # Robust path for strength-concentrated inputs whose solution sits
        # within rounding distance of the y_i y_j = 1 boundary.
        yc2, sweeps = _wcm_sweeps(yc, vals, counts, zero, cfg.tolerance)
        iters += sweeps
        if maxres(yc2) <= maxres(yc):
            yc = yc2
        cand, nfev = _hybr_wcm(yc, vals, counts, zero)
        iters += nfev
        if maxres(cand) <= maxres(yc):
            yc = cand
        ok = bool(maxres(yc) <= cfg.tolerance)
    y = yc[inv]
    resid = _relative(expected(yc), vals)[inv]
    return FittedModel(ModelSpec(family="wcm", y=y), resid, iters, ok, cfg.tolerance)


def _hybr_wcm(yc, vals, counts, zero):
    """Newton polish for the strength-only system, with a smooth penalty that
    steers iterates back inside the feasible region instead of a flat wall."""
    nz = ~zero

    def fvec(u):
        v = np.zeros_like(yc)
        v[nz] = np.exp(np.clip(u, -700.0, 700.0))
        top = _pair_products(v, counts).max()
        pen = 0.0
        if top >= _BOUNDARY:
            v = v * np.sqrt(_BOUNDARY / top)
            pen = np.log(top / _BOUNDARY)
        return _signed_relative(_wcm_expected(v, counts), vals)[nz] + pen

    u, nfev = _newton_polish(np.log(np.maximum(yc[nz], 1e-300)), fvec)
    cand = np.zeros_like(yc)
    cand[nz] = np.exp(np.clip(u, -700.0, 700.0))
    return _bosonic_guard(cand, counts), nfev


def _wcm_sweeps(yc, vals, counts, zero, tol, max_sweeps=400):
    """Cyclic per-class exact updates: each class parameter is re-solved by a
    bracketing root finder with every other class held fixed. Monotonicity of
    the expected strength in the class's own parameter makes every scalar
    solve well posed, at the cost of linear overall convergence."""
    yc = yc.copy()
    order = np.argsort(-vals)
    for sweep in range(1, max_sweeps + 1):
        for ci in order:
            if zero[ci]:
                continue
            others = np.delete(yc, ci) if counts[ci] == 1 else yc
            top_other = others.max() if others.size else 0.0
            hi = 1e12 if top_other <= 0 else _BOUNDARY / top_other
            if counts[ci] > 1:
                hi = min(hi, np.sqrt(_BOUNDARY))

            def h(yv, ci=ci):
                prod = yv * yc
                prod[ci] = yv * yv if counts[ci] > 1 else 0.0
                with np.errstate(divide="ignore", invalid="ignore"):
                    ew = prod / (1.0 - prod)
                cnt = counts.astype(np.float64)
                total = ew @ cnt - ew[ci]  # intra-class pairs use count - 1
                return total - vals[ci]

            if h(hi) < 0:
                yc[ci] = hi  # strength unreachable this sweep; park at the edge
                continue
            yc[ci] = brentq(h, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
        if np.max(_relative(_wcm_expected(yc, counts), vals)) <= tol:
            return yc, sweep
    return yc, max_sweeps


def solve_bounded(s, w_max, cfg=None):
    """Strength-constrained fit with per-pair weights capped at w_max.

    Finite support keeps the law normalizable for any y >= 0, so a
    multiplicative update on y is used instead of the bosonic guard.
    """
    from .statistics import bounded_mean

    cfg = cfg or SolverConfig()
    s = np.asarray(s, dtype=np.float64)
    n = len(s)
    m = int(w_max)
    if (s < 0).any():
        raise InfeasibleConstraintsError("strengths must be non-negative")
    if (s > m * (n - 1)).any():
        raise InfeasibleConstraintsError("strength exceeds w_max * (n-1): unreachable on average")

    vals, inv, counts = np.unique(s, return_inverse=True, return_counts=True)
    zero = vals == 0.0
    if zero.all():
        spec = ModelSpec(family="bounded", y=np.zeros(n), w_max=m)
        return FittedModel(spec, np.zeros(n), 1, True, cfg.tolerance)

    yc0 = np.where(zero, 0.0, vals / np.sqrt(s.sum()))

    def expected(yc):
        ew = bounded_mean(np.outer(yc, yc), m)
        return ew @ counts - np.diagonal(ew)

    def update(yc):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = vals / expected(yc)
        ratio = np.where(zero | ~np.isfinite(ratio), 1.0, ratio)
        return yc * np.sqrt(ratio)

    yc, iters, ok = _iterate(vals, counts, yc0, update, expected, _stage_cfg(cfg), zero)
    if not ok:
        nz = ~zero

        def fvec(u):
            v = np.zeros_like(yc)
            v[nz] = np.exp(u)
            return _signed_relative(expected(v), vals)[nz]

        u, nfev = _newton_polish(np.log(np.maximum(yc[nz], 1e-300)), fvec)
        cand = np.zeros_like(yc)
        cand[nz] = np.exp(u)
        if np.max(_relative(expected(cand), vals)) <= np.max(_relative(expected(yc), vals)):
            yc = cand
        iters += nfev
        ok = bool(np.max(_relative(expected(yc), vals)) <= cfg.tolerance)
    y = yc[inv]
    resid = _relative(expected(yc), vals)[inv]
    return FittedModel(ModelSpec(family="bounded", y=y, w_max=m), resid, iters, ok, cfg.tolerance)


def solve_mixed(k, s, cfg=None):
    """Fit (x, y) so expected degrees and strengths match simultaneously."""
    cfg = cfg or SolverConfig()
    k = np.asarray(k, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    n = len(k)
    if len(s) != n:
        raise ModelValidationError("degree and strength vectors must have equal length")
    if ((k >= 1) != (s >= 1)).any():
        raise InfeasibleConstraintsError("a node has links iff it has positive strength")
    if (s < k).any():
        raise InfeasibleConstraintsError("strengths must satisfy s_i >= k_i (integer weights >= 1)")

    pairs = np.column_stack([k, s])
    vals, inv, counts = np.unique(pairs, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    kc, sc = vals[:, 0], vals[:, 1]
    zero = kc == 0.0
    if zero.all():
        spec = ModelSpec(family="mixed", x=np.zeros(n), y=np.zeros(n))
        return FittedModel(spec, np.zeros(2 * n), 1, True, cfg.tolerance)

    # Warm start from the single-constraint fits: their multipliers already
    # carry the right orders of magnitude per class.
    warm_cfg = SolverConfig(
        tolerance=max(cfg.tolerance, 1e-8), max_iterations=cfg.max_iterations
    )
    first = np.unique(inv, return_index=True)[1]
    xc0 = np.where(zero, 0.0, np.maximum(solve_bcm(k, warm_cfg).spec.x[first], 1e-12))
    yc0 = np.where(zero, 0.0, np.maximum(solve_wcm(s, warm_cfg).spec.y[first], 1e-12))
    yc0 = _bosonic_guard(yc0, counts)

    def expected(state):
        ek, es = _mixed_expected(state[0], state[1], counts)
        return np.concatenate([ek, es])

    targets = np.concatenate([kc, sc])

    def update(state):
        xc, yc = state
        with np.errstate(over="ignore"):
            X = np.outer(xc, xc)
        Y = _pair_products(yc, counts)
        np.fill_diagonal(X, np.where(counts > 1, np.diagonal(X), 0.0))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            D = 1.0 - Y + X * Y
            fx = xc[None, :] * Y / D
            dx = fx @ counts - np.diagonal(fx)
            xnew = kc / dx
            fy = X * yc[None, :] / (D * (1.0 - Y))
            dy = fy @ counts - np.diagonal(fy)
            ynew = sc / dy
        xnew = np.where(zero | ~np.isfinite(xnew), xc, xnew)
        ynew = np.where(zero | ~np.isfinite(ynew), yc, ynew)
        return xnew, _bosonic_guard(ynew, counts)

    def maxres(state):
        return np.max(_relative(expected(state), targets))

    state, iters, ok = _iterate(
        targets, counts, (xc0, yc0), update, expected, _stage_cfg(cfg), zero
    )
    if not ok:
        cand, nfev = _hybr_mixed(state, kc, sc, counts, zero)
        iters += nfev
        if maxres(cand) <= maxres(state):
            state = cand
        ok = bool(maxres(state) <= cfg.tolerance)
    if not ok:
        # Robust path: short rounds of exact per-class updates, each followed
        # by a Newton attempt, so the polish can finish as soon as the sweeps
        # bring the state into its basin of attraction.
        best, best_r = state, maxres(state)
        for _ in range(16):
            state, sweeps = _mixed_sweeps(
                state, kc, sc, counts, zero, cfg.tolerance, max_sweeps=25
            )
            iters += sweeps
            if maxres(state) <= best_r:
                best, best_r = state, maxres(state)
            cand, nfev = _hybr_mixed(state, kc, sc, counts, zero)
            iters += nfev
            if maxres(cand) <= best_r:
                best, best_r = cand, maxres(cand)
            if best_r <= cfg.tolerance:
                break
        state = best
        ok = bool(best_r <= cfg.tolerance)
    xc, yc = state
    e = expected(state)
    resid = np.concatenate(
        [_relative(e[: len(kc)], kc)[inv], _relative(e[len(kc):], sc)[inv]]
    )
    spec = ModelSpec(family="mixed", x=xc[inv], y=yc[inv])
    return FittedModel(spec, resid, iters, ok, cfg.tolerance)


def _mixed_expected(xc, yc, counts):
    """Per-class expected (degree, strength) with intra-class diagonals masked
    for single-member classes."""
    with np.errstate(over="ignore"):
        X = np.outer(xc, xc)
    Y = _pair_products(yc, counts)
    np.fill_diagonal(X, np.where(counts > 1, np.diagonal(X), 0.0))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        A = X * Y / (1.0 - Y + X * Y)
        EW = A / (1.0 - Y)
    ek = A @ counts - np.diagonal(A)
    es = EW @ counts - np.diagonal(EW)
    return ek, es


def _hybr_mixed(state, kc, sc, counts, zero):
    xc, yc = state
    nz = ~zero
    c = int(nz.sum())

    def unpack(u):
        xv = np.zeros_like(xc)
        yv = np.zeros_like(yc)
        xv[nz] = np.exp(np.clip(u[:c], -700.0, 700.0))
        yv[nz] = np.exp(np.clip(u[c:], -700.0, 700.0))
        return xv, yv

    def fvec(u):
        xv, yv = unpack(u)
        top = _pair_products(yv, counts).max()
        pen = 0.0
        if top >= _BOUNDARY:
            yv = yv * np.sqrt(_BOUNDARY / top)
            pen = np.log(top / _BOUNDARY)
        ek, es = _mixed_expected(xv, yv, counts)
        return np.concatenate(
            [_signed_relative(ek, kc)[nz], _signed_relative(es, sc)[nz]]
        ) + pen

    u0 = np.concatenate(
        [np.log(np.maximum(xc[nz], 1e-300)), np.log(np.maximum(yc[nz], 1e-300))]
    )
    u, nfev = _newton_polish(u0, fvec)
    xv, yv = unpack(u)
    return (xv, _bosonic_guard(yv, counts)), nfev


def _mixed_sweeps(state, kc, sc, counts, zero, tol, max_sweeps=400):
    """Cyclic per-class exact updates for the two-constraint system: with all
    other classes fixed, x_c is re-solved against the degree constraint and
    y_c against the strength constraint, each by a bracketing root finder."""
    xc, yc = (v.copy() for v in state)
    cnt = counts.astype(np.float64)
    order = np.argsort(-sc)

    def row_ek(ci, xv, yv):
        X = xv * xc
        Y = yv * yc
        if counts[ci] > 1:
            X[ci], Y[ci] = xv * xv, yv * yv
        else:
            X[ci] = Y[ci] = 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            a = X * Y / (1.0 - Y + X * Y)
        a = np.where(np.isfinite(a), a, 0.0)
        return float(a @ cnt - a[ci]), a, Y

    def row_es(ci, xv, yv):
        ek, a, Y = row_ek(ci, xv, yv)
        with np.errstate(divide="ignore", invalid="ignore"):
            ew = a / (1.0 - Y)
        ew = np.where(np.isfinite(ew), ew, 0.0)
        return float(ew @ cnt - ew[ci])

    for sweep in range(1, max_sweeps + 1):
        for ci in order:
            if zero[ci]:
                continue
            # Degree constraint in x_c, bracket by doubling.
            hx = max(xc[ci], 1e-6)
            for _ in range(200):
                if row_ek(ci, hx, yc[ci])[0] > kc[ci] or hx > 1e150:
                    break
                hx *= 2.0
            if row_ek(ci, hx, yc[ci])[0] > kc[ci]:
                xc[ci] = brentq(
                    lambda xv: row_ek(ci, xv, yc[ci])[0] - kc[ci],
                    0.0, hx, xtol=1e-300, rtol=8.9e-16, maxiter=200,
                )
            else:
                xc[ci] = hx
            # Strength constraint in y_c, bracket limited by feasibility.
            others = np.delete(yc, ci) if counts[ci] == 1 else yc
            top_other = others.max() if others.size else 0.0
            hy = 1e12 if top_other <= 0 else _BOUNDARY / top_other
            if counts[ci] > 1:
                hy = min(hy, np.sqrt(_BOUNDARY))
            if row_es(ci, xc[ci], hy) < sc[ci]:
                yc[ci] = hy
                continue
            yc[ci] = brentq(
                lambda yv: row_es(ci, xc[ci], yv) - sc[ci],
                0.0, hy, xtol=1e-300, rtol=8.9e-16, maxiter=200,
            )
        ek, es = _mixed_expected(xc, yc, counts)
        r = max(np.max(_relative(ek, kc)), np.max(_relative(es, sc)))
        if r <= tol:
            return (xc, yc), sweep
    return (xc, yc), max_sweeps


def _expected_links_filling(z, f, d=None, gamma=None):
    p = fitness_probability(z, f[:, None], f[None, :], d, gamma)
    np.fill_diagonal(p, 0.0)
    el = p.sum() / 2.0
    if d is None:
        return el, None
    return el, (p * d).sum() / 2.0


def fit_fitness(g, attrs, with_distance=False, cfg=None, target_links=None, target_filling=None):
    """Fit z (and gamma, with distances) by matching expected link count
    (and expected filling) to the observed values, or to explicit targets.

    `target_links` / `target_filling` replace the graph-derived constraint
    values; they allow fitting to analytically prescribed constraints, e.g.
    recovering parameters from another model's expectations."""
    cfg = cfg or SolverConfig()
    if attrs is None:
        raise ModelValidationError("fitness models require node attributes")
    if attrs.n != g.n:
        raise ModelValidationError("attributes size does not match graph size")
    f = attrs.fitness
    L = g.link_count() if target_links is None else float(target_links)
    npairs = g.n * (g.n - 1) / 2

    if L == 0:
        family = "fitness-dist" if with_distance else "fitness"
        spec = ModelSpec(family=family, z=0.0, gamma=0.0 if with_distance else None, n=g.n)
        nres = 2 if with_distance else 1
        return FittedModel(spec, np.zeros(nres), 1, True, cfg.tolerance)
    if L >= npairs:
        raise InfeasibleConstraintsError(
            "link count at or above the pair count: no finite z matches it"
        )

    def solve_z(gamma=None, d=None):
        def h(z):
            return _expected_links_filling(z, f, d, gamma)[0] - L

        hi = 1.0
        for _ in range(200):
            if h(hi) > 0:
                break
            hi *= 2.0
        else:
            raise InfeasibleConstraintsError("could not bracket z")
        return brentq(h, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)

    if not with_distance:
        z = solve_z()
        el, _ = _expected_links_filling(z, f)
        resid = np.array([abs(el - L) / max(L, 1.0)])
        spec = ModelSpec(family="fitness", z=z, n=g.n)
        return FittedModel(spec, resid, 1, bool(resid[0] <= max(cfg.tolerance, 1e-9)), cfg.tolerance)

    d = attrs.distance_matrix()
    if target_filling is None:
        filling = (g.adjacency() * d).sum() / 2.0
    else:
        filling = float(target_filling)

    def h_gamma(gamma):
        z = solve_z(gamma, d)
        return _expected_links_filling(z, f, d, gamma)[1] - filling

    scale = 1.0 / max(d[np.triu_indices(g.n, k=1)].mean(), 1e-12)
    lo_g, hi_g = -scale, scale
    for _ in range(80):
        if h_gamma(lo_g) * h_gamma(hi_g) < 0:
            break
        lo_g *= 2.0
        hi_g *= 2.0
    else:
        spec = ModelSpec(family="fitness-dist", z=solve_z(0.0, d), gamma=0.0, n=g.n)
        return FittedModel(
            spec,
            np.array([np.inf, np.inf]),
            1,
            False,
            cfg.tolerance,
            diagnosis="could not bracket gamma for the filling constraint",
        )
    gamma = brentq(h_gamma, lo_g, hi_g, xtol=1e-14, rtol=8.9e-16, maxiter=300)
    z = solve_z(gamma, d)
    el, ef = _expected_links_filling(z, f, d, gamma)
    resid = np.array([abs(el - L) / max(L, 1.0), abs(ef - filling) / max(filling, 1.0)])
    spec = ModelSpec(family="fitness-dist", z=z, gamma=gamma, n=g.n)
    ok = bool(resid.max() <= max(cfg.tolerance, 1e-9))
    return FittedModel(spec, resid, 1, ok, cfg.tolerance)


def constraint_residuals(fm: FittedModel, g, attrs=None):
    """Recompute |expected - observed| / max(observed, 1) for each constraint."""
    spec = fm.spec
    if spec.family != "er" and spec.size(attrs) != g.n:
        raise ModelValidationError("model size does not match graph size")
    stats = pair_statistics(spec, attrs)
    adj = g.adjacency()
    if spec.family == "bcm":
        return _relative(stats.p.sum(axis=1), adj.sum(axis=1))
    if spec.family in ("wcm", "bounded"):
        return _relative(stats.ew.sum(axis=1), g.weights.sum(axis=1))
    if spec.family == "mixed":
        return np.concatenate(
            [
                _relative(stats.p.sum(axis=1), adj.sum(axis=1)),
                _relative(stats.ew.sum(axis=1), g.weights.sum(axis=1)),
            ]
        )
    if spec.family in ("er", "fitness"):
        return _relative(np.array([stats.p.sum() / 2.0]), np.array([g.link_count()]))
    if spec.family == "fitness-dist":
        d = attrs.distance_matrix()
        return np.concatenate(
            [
                _relative(np.array([stats.p.sum() / 2.0]), np.array([g.link_count()])),
                _relative(
                    np.array([(stats.p * d).sum() / 2.0]),
                    np.array([(adj * d).sum() / 2.0]),
                ),
            ]
        )
    raise ModelValidationError(f"unknown family {spec.family!r}")
