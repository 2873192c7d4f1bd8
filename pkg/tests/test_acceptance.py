"""End-to-end acceptance checks for the whole pipeline.

Each test pins a documented behaviour at a stated tolerance, including wall
clock budgets, so regressions in accuracy or speed both fail loudly.
"""

import time

import numpy as np
import pytest

from maxentnet import cli
from maxentnet.analytics import compare, expected_metrics, sample
from maxentnet.graph import (
    NodeAttributes,
    WeightedGraph,
    degree,
    density,
    load_attributes,
    load_graph,
    strength,
)
from maxentnet.gravity import fit_gravity, predict_gravity
from maxentnet.solver import (
    fit_fitness,
    solve_bcm,
    solve_er,
    solve_mixed,
    solve_wcm,
    _expected_links_filling,
)
from maxentnet.statistics import (
    be_stats,
    bounded_nonzero_probability,
    fd_probability,
    mixed_pmf,
    mixed_stats,
)


@pytest.fixture(scope="module")
def synth_net(tmp_path_factory):
    """n=162 synthetic trade-like network produced through the CLI."""
    out = tmp_path_factory.mktemp("synth162")
    rc = cli.main(["synth", "--n", "162", "--seed", "7", "--out", str(out)])
    assert rc == 0
    attrs = load_attributes(str(out / "attrs.csv"))
    g = load_graph(str(out / "edges.csv"), isolated=attrs.labels)
    return g, attrs.reindex(g.labels)


@pytest.fixture(scope="module")
def synth_fits(synth_net):
    """Per-family fits of the synthetic network, with solve wall times."""
    g, attrs = synth_net
    k = degree(g)
    s = strength(g)
    fits, times = {}, {}
    for name, solve in [
        ("er", lambda: solve_er(g)),
        ("bcm", lambda: solve_bcm(k)),
        ("wcm", lambda: solve_wcm(s)),
        ("mixed", lambda: solve_mixed(k, s)),
        ("fitness", lambda: fit_fitness(g, attrs)),
    ]:
        t0 = time.perf_counter()
        fits[name] = solve()
        times[name] = time.perf_counter() - t0
    return fits, times


def test_01_bounded_statistics_identities():
    t0 = time.perf_counter()
    y = np.linspace(0.0, 1.5, 200)
    for m in (1, 2, 3, 10, 100):
        p = bounded_nonzero_probability(y, m)
        assert np.isfinite(p).all() and (p >= 0).all() and (p <= 1).all()
    # Unit cap collapses to the Bernoulli (saturating) link law.
    np.testing.assert_array_equal(
        bounded_nonzero_probability(y, 1), fd_probability(y, np.ones_like(y))
    )
    # Succession values m/(m+1) at y = 1.
    for m, val in [(1, 1 / 2), (2, 2 / 3), (3, 3 / 4)]:
        assert bounded_nonzero_probability(1.0, m) == pytest.approx(val, abs=1e-12)
    # Huge cap converges to the unbounded geometric law p = y.
    ylow = y[y <= 0.99]
    assert np.max(np.abs(bounded_nonzero_probability(ylow, 10**6) - ylow)) < 1e-6
    assert time.perf_counter() - t0 < 1.0


def test_02_mixed_reduction_and_normalization():
    t0 = time.perf_counter()
    ys = np.linspace(0.0, 0.999999, 1000)
    a, ew = mixed_stats(1.0, 1.0, np.sqrt(ys), np.sqrt(ys))
    p_ref, ew_ref = be_stats(np.sqrt(ys), np.sqrt(ys))
    np.testing.assert_allclose(a, p_ref, rtol=1e-15)
    np.testing.assert_allclose(ew, ew_ref, rtol=1e-15)
    # Normalization via the closed-form geometric tail.
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.uniform(0.0, 10.0)
        yv = rng.uniform(0.0, 0.99)
        w_top = 500
        w = np.arange(w_top + 1)
        q = mixed_pmf(np.sqrt(x), np.sqrt(x), np.sqrt(yv), np.sqrt(yv), w)
        tail = x * yv ** (w_top + 1) / (1.0 - yv + x * yv)
        assert abs(q.sum() + tail - 1.0) < 1e-12
    assert time.perf_counter() - t0 < 1.0


def test_03_solver_exactness_on_toy_instances():
    from maxentnet.statistics import pair_statistics

    t0 = time.perf_counter()
    fm = solve_bcm(np.full(4, 2.0))
    assert abs(pair_statistics(fm.spec).p[0, 1] - 2.0 / 3.0) < 1e-10
    assert time.perf_counter() - t0 < 0.1

    t0 = time.perf_counter()
    fm = solve_wcm(np.full(4, 3.0))
    assert abs(pair_statistics(fm.spec).ew[0, 1] - 1.0) < 1e-10
    assert time.perf_counter() - t0 < 0.1

    t0 = time.perf_counter()
    fm = solve_mixed(np.full(4, 2.0), np.full(4, 4.0))
    assert fm.max_residual() < 1e-10
    assert time.perf_counter() - t0 < 0.1


def test_04_desk_scale_solves(synth_net, synth_fits):
    g, _ = synth_net
    assert g.n == 162
    assert 0.5 <= density(g) <= 0.6
    fits, times = synth_fits
    for name in ("bcm", "wcm", "mixed"):
        fm = fits[name]
        assert fm.converged, f"{name} did not converge"
        assert fm.max_residual() < 1e-8, f"{name} residual {fm.max_residual():.2e}"
        assert times[name] < 10.0, f"{name} took {times[name]:.1f}s"


def test_05_structure_reproduction(synth_net, synth_fits):
    t0 = time.perf_counter()
    g, _ = synth_net
    fits, _ = synth_fits

    # Degree-constrained fit reproduces the binary structure.
    rep = compare(g, fits["bcm"])
    assert rep.summary["correlations"]["knn"] >= 0.9
    assert rep.summary["correlations"]["c"] >= 0.9

    # Strength-only fit flattens the neighbour strength: expected values are
    # nearly constant at 2/n while the observed ones vary broadly.
    em = expected_metrics(fits["wcm"])
    snn_norm = em.snn / em.expected_total_weight
    snn_norm = snn_norm[np.isfinite(snn_norm)]
    cv_exp = snn_norm.std() / snn_norm.mean()
    assert cv_exp < 0.1
    assert abs(snn_norm.mean() - 2.0 / g.n) / (2.0 / g.n) < 0.15
    from maxentnet.graph import avg_nn_strength

    obs = avg_nn_strength(g) / g.total_weight()
    obs = obs[np.isfinite(obs)]
    assert obs.std() / obs.mean() > 0.3

    # The joint fit reproduces binary and weighted structure simultaneously.
    rep = compare(g, fits["mixed"])
    for name in ("knn", "c", "snn", "cw"):
        assert rep.summary["correlations"][name] >= 0.9, name
    assert time.perf_counter() - t0 < 60.0


def test_06_sampling_consistency(synth_net, synth_fits):
    t0 = time.perf_counter()
    g, attrs = synth_net
    fits, _ = synth_fits
    m = 10_000
    for name, fm in fits.items():
        a = attrs if name in ("fitness", "fitness-dist") else None
        metrics = ("k", "s") if name != "bcm" else ("k", "s", "knn", "c")
        ss = sample(fm, m, seed=123, attrs=a, metrics=metrics)
        em = expected_metrics(fm, a)
        analytic = {"k": em.k, "s": em.s}
        for which in ("k", "s"):
            dev = np.abs(ss.means[which] - analytic[which])
            ok = dev <= 4.0 * ss.sems[which] + 1e-12
            frac = ok.mean()
            assert frac >= 0.95, f"{name}/{which}: only {frac:.2%} within 4 SE"
        el = em.k.sum() / 2.0
        assert abs(ss.l_mean - el) <= 4.0 * ss.l_sem + 1e-12, name
        if name == "bcm":
            # Plug-in neighbourhood metrics track the true ensemble means.
            for which in ("knn", "c"):
                mc = ss.means[which]
                plug = getattr(em, which)
                both = np.isfinite(mc) & np.isfinite(plug)
                rel = np.abs(plug[both] - mc[both]) / np.abs(mc[both])
                assert rel.max() < 0.05, f"bcm/{which}: max dev {rel.max():.3%}"
    assert time.perf_counter() - t0 < 120.0


def test_07_gravity_planted_recovery_and_topology_flag():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    n = 30
    lnK, expo, gamma = np.log(2.5), 0.8, 1.3
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
    unit = min(r[2] for r in rows) * 1e-8
    g = load_graph(rows, unit=unit)
    attrs = attrs.reindex(g.labels)

    fit = fit_gravity(g, attrs)
    assert abs(fit.lnK + np.log(unit) - lnK) < 1e-6
    assert abs(fit.alpha - expo) < 1e-6
    assert abs(fit.beta - expo) < 1e-6
    assert abs(fit.gamma - gamma) < 1e-6

    stats = predict_gravity(fit, attrs)
    off = ~np.eye(n, dtype=bool)
    assert float(stats.p.sum() / (n * (n - 1))) == 1.0
    assert (stats.p[off] == 1.0).all()

    report = compare(g, solve_er(g), grav=fit, attrs=attrs)
    assert report.summary["gravity_expected_density"] == 1.0
    assert report.summary["gravity_complete_topology"] is True
    assert time.perf_counter() - t0 < 1.0


def test_08_fitness_constraint_matching_and_planted_recovery(synth_net):
    t0 = time.perf_counter()
    g, attrs = synth_net
    fm = fit_fitness(g, attrs)
    from maxentnet.statistics import pair_statistics

    el = pair_statistics(fm.spec, attrs).p.sum() / 2.0
    L = g.link_count()
    assert abs(el - L) < 1e-6 * L

    # Planted parameter recovery in the distance-suppressed model.
    rng = np.random.default_rng(21)
    n = 100
    fitness = rng.lognormal(0.0, 0.5, n)
    pos = np.column_stack([rng.uniform(-60, 60, n), rng.uniform(-180, 180, n)])
    pattrs = NodeAttributes(tuple(f"p{i}" for i in range(n)), fitness, positions=pos)
    d = pattrs.distance_matrix()
    z_true, g_true = 0.07, 3e-4
    el_t, ef_t = _expected_links_filling(z_true, fitness, d, g_true)
    dummy = np.zeros((n, n), dtype=np.int64)
    dummy[0, 1] = dummy[1, 0] = 1
    pg = WeightedGraph(pattrs.labels, dummy)
    fit = fit_fitness(pg, pattrs, with_distance=True,
                      target_links=el_t, target_filling=ef_t)
    assert fit.converged
    assert abs(fit.spec.z - z_true) < 1e-6 * z_true
    assert abs(fit.spec.gamma - g_true) < 1e-6 * g_true
    assert time.perf_counter() - t0 < 5.0
