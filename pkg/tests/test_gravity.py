import numpy as np
import pytest

from maxentnet.graph import NodeAttributes, WeightedGraph, load_graph
from maxentnet.gravity import (
    GravityFit,
    GravityFitError,
    canonical_fit,
    fit_gravity,
    predict_gravity,
)


def _planted_instance(n=30, seed=5, lnK=np.log(2.5), expo=0.8, gamma=1.3):
    rng = np.random.default_rng(seed)
    fitness = rng.lognormal(0.0, 0.6, n)
    pos = np.column_stack([rng.uniform(-60, 60, n), rng.uniform(-170, 170, n)])
    labels = tuple(f"n{i}" for i in range(n))
    attrs = NodeAttributes(labels, fitness, positions=pos)
    d = attrs.distance_matrix()
    lf = np.log(fitness)
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            w = np.exp(lnK + expo * (lf[i] + lf[j]) - gamma * np.log(d[i, j]))
            rows.append((labels[i], labels[j], w))
    flows = np.array([r[2] for r in rows])
    unit = flows.min() * 1e-8
    g = load_graph(rows, unit=unit)
    attrs = attrs.reindex(g.labels)
    return g, attrs, unit


def test_planted_parameters_recovered():
    lnK, expo, gamma = np.log(2.5), 0.8, 1.3
    g, attrs, unit = _planted_instance(lnK=lnK, expo=expo, gamma=gamma)
    fit = fit_gravity(g, attrs)
    # Weights are stored in quantization units, which shifts the intercept
    # by ln(unit) and leaves the slopes untouched.
    assert abs(fit.lnK + np.log(unit) - lnK) < 1e-6
    assert abs(fit.alpha - expo) < 1e-6
    assert fit.beta == fit.alpha
    assert abs(fit.gamma - gamma) < 1e-6
    assert fit.r_squared > 1.0 - 1e-12
    assert fit.n_obs == g.n * (g.n - 1) // 2
    assert fit.n_excluded == 0


def test_prediction_has_complete_topology():
    g, attrs, unit = _planted_instance(n=12)
    fit = fit_gravity(g, attrs)
    stats = predict_gravity(fit, attrs)
    offdiag = ~np.eye(g.n, dtype=bool)
    assert (stats.p[offdiag] == 1.0).all()
    assert (np.diagonal(stats.p) == 0.0).all()
    # Noiseless planted flows are reproduced (in quantization units).
    np.testing.assert_allclose(
        stats.ew[offdiag], g.weights[offdiag].astype(float), rtol=1e-6
    )


def test_too_few_flows():
    w = np.zeros((5, 5), dtype=np.int64)
    w[0, 1] = w[1, 0] = 3
    w[2, 3] = w[3, 2] = 4
    g = WeightedGraph(tuple("abcde"), w)
    attrs = NodeAttributes(
        g.labels, np.arange(1.0, 6.0),
        distances=np.abs(np.subtract.outer(np.arange(5.0), np.arange(5.0))),
    )
    with pytest.raises(GravityFitError, match="at least 4"):
        fit_gravity(g, attrs)


def test_rank_deficient_design():
    # Identical fitness and identical distances leave only the intercept.
    n = 5
    w = np.ones((n, n), dtype=np.int64) * 2
    np.fill_diagonal(w, 0)
    g = WeightedGraph(tuple(f"n{i}" for i in range(n)), w)
    d = np.ones((n, n)) * 7.0
    np.fill_diagonal(d, 0.0)
    attrs = NodeAttributes(g.labels, np.full(n, 3.0), distances=d)
    with pytest.raises(GravityFitError, match="rank-deficient"):
        fit_gravity(g, attrs)


def test_zero_flows_excluded():
    g, attrs, unit = _planted_instance(n=10)
    w = np.array(g.weights)
    w[0, 1] = w[1, 0] = 0
    g2 = WeightedGraph(g.labels, w)
    fit = fit_gravity(g2, attrs)
    assert fit.n_excluded == 1
    assert fit.n_obs == g.n * (g.n - 1) // 2 - 1


def test_size_mismatch():
    g, attrs, unit = _planted_instance(n=10)
    bad = NodeAttributes(("a", "b"), np.array([1.0, 2.0]))
    with pytest.raises(GravityFitError, match="size"):
        fit_gravity(g, bad)


def test_gravity_fit_round_trip():
    fit = GravityFit(lnK=0.5, alpha=0.8, beta=0.8, gamma=1.3,
                     r_squared=0.99, n_obs=45, n_excluded=2)
    back = GravityFit.from_dict(fit.to_dict())
    assert back == fit


def test_canonical_fit_pins_exponents():
    g, attrs, unit = _planted_instance(n=15, lnK=np.log(4.0), expo=1.0, gamma=1.0)
    fit = canonical_fit(attrs, g)
    assert fit.alpha == fit.beta == fit.gamma == 1.0
    assert abs(fit.lnK + np.log(unit) - np.log(4.0)) < 1e-6
    fixed = canonical_fit(attrs, g, lnK=0.25)
    assert fixed.lnK == 0.25
