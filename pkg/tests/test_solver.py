import numpy as np
import pytest

from maxentnet.graph import NodeAttributes, WeightedGraph, degree, strength
from maxentnet.solver import (
    FittedModel,
    InfeasibleConstraintsError,
    SolverConfig,
    constraint_residuals,
    fit_fitness,
    solve_bcm,
    solve_bounded,
    solve_er,
    solve_mixed,
    solve_wcm,
)
from maxentnet.statistics import ModelValidationError, pair_statistics


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tolerance=0.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=0.0)
    with pytest.raises(ValueError):
        SolverConfig(damping=1.5)


def test_solve_er_exact(square_graph):
    fm = solve_er(square_graph)
    assert fm.converged
    assert fm.spec.p == pytest.approx(4.0 / 6.0)
    assert fm.max_residual() == 0.0


def test_solve_bcm_regular_graph_oracle():
    # Uniform degree k on n nodes: p = k / (n - 1), so x = sqrt(p / (1 - p)).
    fm = solve_bcm(np.full(4, 2.0))
    assert fm.converged
    np.testing.assert_allclose(fm.spec.x, np.sqrt(2.0), rtol=1e-9)
    p = pair_statistics(fm.spec).p
    assert abs(p[0, 1] - 2.0 / 3.0) < 1e-10


def test_solve_bcm_equal_constraints_share_multipliers():
    fm = solve_bcm(np.array([2.0, 1.0, 2.0, 1.0, 3.0]))
    assert fm.spec.x[0] == fm.spec.x[2]
    assert fm.spec.x[1] == fm.spec.x[3]
    assert fm.spec.x[4] > fm.spec.x[0] > fm.spec.x[1]


def test_solve_bcm_zero_degrees_pin_multipliers():
    fm = solve_bcm(np.array([0.0, 2.0, 1.0, 1.0]))
    assert fm.converged
    assert fm.spec.x[0] == 0.0
    assert pair_statistics(fm.spec).p[0].sum() == 0.0


def test_solve_bcm_infeasibility():
    with pytest.raises(InfeasibleConstraintsError):
        solve_bcm(np.array([5.0, 1.0, 1.0, 1.0]))
    fm = solve_bcm(np.array([3.0, 0.0, 1.0, 1.0]))
    assert not fm.converged
    assert "isolated" in fm.diagnosis


def test_solve_wcm_uniform_oracle():
    # Uniform strength 3 on 4 nodes: each pair carries expected weight 1,
    # so y_i y_j = 1/2 and y = sqrt(1/2).
    fm = solve_wcm(np.full(4, 3.0))
    assert fm.converged
    np.testing.assert_allclose(fm.spec.y, np.sqrt(0.5), rtol=1e-10)
    ew = pair_statistics(fm.spec).ew
    assert abs(ew[0, 1] - 1.0) < 1e-10


def test_solve_wcm_two_nodes_oracle():
    # Single pair with expected weight 5: Y / (1 - Y) = 5 gives Y = 5/6.
    fm = solve_wcm(np.array([5.0, 5.0]))
    assert fm.converged
    np.testing.assert_allclose(fm.spec.y[0] * fm.spec.y[1], 5.0 / 6.0, rtol=1e-10)


def test_solve_wcm_edge_cases():
    fm = solve_wcm(np.zeros(3))
    assert fm.converged and (fm.spec.y == 0.0).all()
    with pytest.raises(InfeasibleConstraintsError):
        solve_wcm(np.array([-1.0, 1.0]))


def test_solve_bounded_matches_bernoulli_at_unit_cap():
    # w_max = 1 collapses the law to Bernoulli with p = y^2 / (1 + y^2);
    # strength 0.5 per node on a pair means p = 1/2, so y = 1.
    fm = solve_bounded(np.array([0.5, 0.5]), w_max=1)
    assert fm.converged
    np.testing.assert_allclose(fm.spec.y, 1.0, rtol=1e-8)


def test_solve_bounded_constraints_met():
    s = np.array([3.0, 5.0, 2.0, 4.0])
    fm = solve_bounded(s, w_max=4)
    assert fm.converged
    ew = pair_statistics(fm.spec).ew
    np.testing.assert_allclose(ew.sum(axis=1), s, rtol=1e-8)


def test_solve_bounded_infeasible():
    with pytest.raises(InfeasibleConstraintsError):
        solve_bounded(np.array([10.0, 1.0, 1.0]), w_max=2)


def test_solve_mixed_uniform_oracle():
    # k = 2, s = 4 on 4 nodes: 1/(1 - Y) = s/k = 2 so Y = 1/2, and the
    # degree equation 3 X Y / (1 - Y + X Y) = 2 then gives X = 2.
    fm = solve_mixed(np.full(4, 2.0), np.full(4, 4.0))
    assert fm.converged
    np.testing.assert_allclose(fm.spec.x, np.sqrt(2.0), rtol=1e-9)
    np.testing.assert_allclose(fm.spec.y, np.sqrt(0.5), rtol=1e-9)
    assert fm.max_residual() < 1e-10


def test_solve_mixed_heterogeneous_meets_constraints():
    k = np.array([1.0, 2.0, 3.0, 2.0, 2.0])
    s = np.array([2.0, 5.0, 9.0, 4.0, 6.0])
    fm = solve_mixed(k, s)
    assert fm.converged
    stats = pair_statistics(fm.spec)
    np.testing.assert_allclose(stats.p.sum(axis=1), k, rtol=1e-8)
    np.testing.assert_allclose(stats.ew.sum(axis=1), s, rtol=1e-8)


def test_solve_mixed_validation():
    with pytest.raises(ModelValidationError):
        solve_mixed(np.ones(3), np.ones(2))
    with pytest.raises(InfeasibleConstraintsError, match="iff"):
        solve_mixed(np.array([1.0, 0.0]), np.array([1.0, 2.0]))
    with pytest.raises(InfeasibleConstraintsError, match="s_i >= k_i"):
        solve_mixed(np.array([2.0, 2.0]), np.array([1.0, 3.0]))
    fm = solve_mixed(np.zeros(3), np.zeros(3))
    assert fm.converged and (fm.spec.x == 0.0).all()


def test_fitted_model_json_round_trip(tmp_path):
    fm = solve_mixed(np.full(4, 2.0), np.full(4, 4.0))
    path = tmp_path / "model.json"
    fm.to_json(str(path))
    back = FittedModel.from_json(str(path))
    assert back.spec.family == "mixed"
    assert back.converged == fm.converged
    assert back.iterations == fm.iterations
    np.testing.assert_allclose(back.spec.x, fm.spec.x)
    np.testing.assert_allclose(back.residuals, fm.residuals)


def test_constraint_residuals_consistent(small_weighted_graph):
    g = small_weighted_graph
    k = degree(g)
    s = strength(g)
    tol = 1e-10
    for fm, nres in [
        (solve_er(g), 1),
        (solve_bcm(k), g.n),
        (solve_wcm(s), g.n),
        (solve_mixed(k, s), 2 * g.n),
    ]:
        r = constraint_residuals(fm, g)
        assert len(r) == nres
        if fm.converged:
            assert r.max() <= 10 * max(tol, fm.tolerance)


def test_constraint_residuals_size_mismatch(square_graph):
    fm = solve_bcm(np.array([1.0, 1.0]))
    with pytest.raises(ModelValidationError):
        constraint_residuals(fm, square_graph)


def test_fit_fitness_matches_link_count(square_graph):
    attrs = NodeAttributes(
        square_graph.labels, np.array([1.0, 2.0, 3.0, 4.0])
    )
    fm = fit_fitness(square_graph, attrs)
    assert fm.converged
    p = pair_statistics(fm.spec, attrs).p
    assert abs(p.sum() / 2.0 - 4.0) < 1e-8


def test_fit_fitness_rejects_complete_graph():
    w = np.ones((3, 3), dtype=np.int64) - np.eye(3, dtype=np.int64)
    g = WeightedGraph(("a", "b", "c"), w)
    attrs = NodeAttributes(g.labels, np.array([1.0, 2.0, 3.0]))
    with pytest.raises(InfeasibleConstraintsError):
        fit_fitness(g, attrs)


def test_fit_fitness_empty_graph_gives_zero():
    g = WeightedGraph(("a", "b", "c"), np.zeros((3, 3), dtype=np.int64))
    attrs = NodeAttributes(g.labels, np.array([1.0, 2.0, 3.0]))
    fm = fit_fitness(g, attrs)
    assert fm.converged and fm.spec.z == 0.0


def test_fit_fitness_recovers_planted_distance_parameters():
    rng = np.random.default_rng(11)
    n = 40
    fitness = rng.lognormal(0.0, 0.5, n)
    pos = np.column_stack([rng.uniform(-60, 60, n), rng.uniform(-180, 180, n)])
    attrs = NodeAttributes(tuple(f"n{i}" for i in range(n)), fitness, positions=pos)
    d = attrs.distance_matrix()
    z_true, g_true = 0.05, 2e-4

    from maxentnet.solver import _expected_links_filling

    el, ef = _expected_links_filling(z_true, fitness, d, g_true)
    dummy = np.zeros((n, n), dtype=np.int64)
    dummy[0, 1] = dummy[1, 0] = 1
    g = WeightedGraph(attrs.labels, dummy)
    fm = fit_fitness(g, attrs, with_distance=True, target_links=el, target_filling=ef)
    assert fm.converged
    assert abs(fm.spec.z - z_true) < 1e-8 * z_true
    assert abs(fm.spec.gamma - g_true) < 1e-8 * g_true
