"""Gravity baseline: log-linear regression of nonzero flows on fitness
products and distances, plus the complete-topology prediction it implies."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .statistics import PairStatistics


class GravityFitError(ValueError):
    """Raised when the regression design is unusable."""


@dataclass
class GravityFit:
    lnK: float
    alpha: float
    beta: float
    gamma: float
    r_squared: float
    n_obs: int
    n_excluded: int = 0

    def to_dict(self):
        return {
            "lnK": self.lnK,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "r_squared": self.r_squared,
            "n_obs": self.n_obs,
            "n_excluded": self.n_excluded,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), sort_keys=True, indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("lnK", "alpha", "beta", "gamma", "r_squared", "n_obs")},
                   n_excluded=d.get("n_excluded", 0))


def fit_gravity(g, attrs):
    """OLS of ln w_ij on (1, ln f_i + ln f_j, -ln d_ij) over pairs with w > 0.

    The symmetric (undirected) design ties alpha = beta by construction.
    Zero-weight pairs are excluded and counted in n_excluded.
    """
    if attrs.n != g.n:
        raise GravityFitError("attributes size does not match graph size")
    f = attrs.fitness
    d = attrs.distance_matrix()
    iu = np.triu_indices(g.n, k=1)
    w = g.weights[iu].astype(np.float64)
    nz = w > 0
    n_obs = int(nz.sum())
    n_excluded = int((~nz).sum())
    if n_obs < 4:
        raise GravityFitError("need at least 4 nonzero flows to fit the gravity model")
    dv = d[iu][nz]
    if (dv <= 0).any():
        raise GravityFitError("zero or negative distance between distinct nodes with nonzero flow")

    lf = np.log(f)
    design = np.column_stack(
        [np.ones(n_obs), lf[iu[0]][nz] + lf[iu[1]][nz], -np.log(dv)]
    )
    target = np.log(w[nz])
    gram = design.T @ design
    if np.linalg.matrix_rank(gram) < 3:
        raise GravityFitError(
            "rank-deficient design: fitness products or distances carry no "
            "independent variation across observed flows"
        )
    coef = np.linalg.solve(gram, design.T @ target)
    resid = target - design @ coef
    sst = float(((target - target.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / sst if sst > 0 else 1.0
    return GravityFit(
        lnK=float(coef[0]),
        alpha=float(coef[1]),
        beta=float(coef[1]),
        gamma=float(coef[2]),
        r_squared=r2,
        n_obs=n_obs,
        n_excluded=n_excluded,
    )


def predict_gravity(fit: GravityFit, attrs) -> PairStatistics:
    """Predicted flows for all pairs; the link probability is 1 everywhere.

    The complete-graph topology is the point: the baseline cannot produce
    missing links, and reports surface that through the unit probabilities.
    """
    f = attrs.fitness
    d = attrs.distance_matrix()
    with np.errstate(divide="ignore"):
        ew = np.exp(
            fit.lnK
            + fit.alpha * np.log(f)[:, None]
            + fit.beta * np.log(f)[None, :]
            - fit.gamma * np.where(d > 0, np.log(d), 0.0)
        )
    p = np.ones_like(ew)
    np.fill_diagonal(p, 0.0)
    np.fill_diagonal(ew, 0.0)
    return PairStatistics(p=p, ew=ew)


def canonical_fit(attrs, g, lnK=None):
    """Gravity fit with the canonical exponents alpha = beta = gamma = 1.

    Only lnK is estimated (OLS intercept on the same log design with slopes
    pinned), so predicted-flow curves can be drawn either with fitted or
    canonical exponents.
    """
    f = attrs.fitness
    d = attrs.distance_matrix()
    iu = np.triu_indices(g.n, k=1)
    w = g.weights[iu].astype(np.float64)
    nz = w > 0
    if lnK is None:
        if not nz.any():
            raise GravityFitError("no nonzero flows to calibrate lnK")
        lf = np.log(f)
        offset = lf[iu[0]][nz] + lf[iu[1]][nz] - np.log(d[iu][nz])
        lnK = float((np.log(w[nz]) - offset).mean())
    return GravityFit(
        lnK=lnK, alpha=1.0, beta=1.0, gamma=1.0, r_squared=float("nan"),
        n_obs=int(nz.sum()), n_excluded=int((~nz).sum()),
    )
