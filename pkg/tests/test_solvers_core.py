"""Convex kernel and enumeration-oracle tests."""

import numpy as np
import pytest

from ngma_opt.numerics import Rng
from ngma_opt.problems import (
    IrsSumRate,
    NomaSumRate,
    OfdmaPowerMin,
    ProblemInstance,
    VarBlock,
    build_problem,
)
from ngma_opt.solvers import (
    ConvexProblem,
    SolverOptions,
    solve_convex,
    solve_exhaustive,
    waterfill,
)
from ngma_opt.solvers.bnb import ofdma_leaf


def _rng(tag):
    return Rng(515).split("solvers-core", tag)


# ----------------------------------------------------------- convex kernel


def test_single_rate_floor_power_min():
    # min p subject to log2(1 + p) >= 1: optimum exactly p = 1
    def rate_floor(x):
        if x[0] <= -1.0:
            return np.inf, np.zeros(1)
        return (1.0 - np.log2(1.0 + x[0]),
                -1.0 / (np.log(2.0) * (1.0 + x[0])) * np.ones(1))

    prob = ConvexProblem(
        objective=lambda x: (float(x[0]), np.ones(1)),
        constraints=[rate_floor],
        lower=np.zeros(1))
    sol = solve_convex(prob, np.array([2.0]))
    assert sol.status == "optimal"
    assert sol.x["x"][0] == pytest.approx(1.0, abs=1e-4)
    assert sol.gap <= 1e-6 * 2


def test_unconstrained_quadratic_newton_count():
    a = np.array([[3.0, 1.0], [1.0, 2.0]])
    c = np.array([1.5, -0.5])

    def quad(x):
        d = x - c
        return float(d @ a @ d), 2.0 * a @ d

    sol = solve_convex(ConvexProblem(objective=quad), np.array([8.0, -3.0]))
    assert sol.status == "optimal"
    assert np.allclose(sol.x["x"], c, atol=1e-6)
    assert sol.iterations <= 3


def test_two_user_power_min_matches_linear_solve_and_grid():
    rng = _rng("sinr-lp")
    solved = 0
    for trial in range(12):
        h = rng.complex_normal((2, 4))
        beams = rng.complex_normal((4, 2))
        beams /= np.linalg.norm(beams, axis=0)
        cross = np.abs(h @ beams) ** 2              # [user, beam]
        targets = rng.uniform(0.5, 2.0, 2)
        noise = rng.uniform(0.5, 1.5, 2)

        # SINR floors are linear in the two beam powers
        def make_con(k):
            row = np.array([cross[k, r] * (-1.0 if r == k else targets[k])
                            for r in range(2)])
            rhs = targets[k] * noise[k]

            def con(q, row=row, rhs=rhs):
                return float(row @ q + rhs), row
            return con

        prob = ConvexProblem(
            objective=lambda q: (float(q.sum()), np.ones(2)),
            constraints=[make_con(0), make_con(1)],
            lower=np.zeros(2))

        mat = np.array([[cross[0, 0], -targets[0] * cross[0, 1]],
                        [-targets[1] * cross[1, 0], cross[1, 1]]])
        exact = np.linalg.solve(mat, targets * noise)
        if np.any(exact <= 0):
            continue          # this draw has no feasible power pair
        solved += 1

        sol = solve_convex(prob, exact + 1.0,
                           SolverOptions(tol_gap=1e-9))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(exact.sum(), rel=1e-6)

        # grid sandwich: every feasible grid point costs at least the
        # reported optimum (grid minima overshoot binding constraints, so
        # only this direction is sharp)
        axis = np.linspace(0.0, float(exact.sum()) * 2, 1000)
        q1, q2 = np.meshgrid(axis, axis, indexing="ij")
        ok = (cross[0, 0] * q1 >= targets[0] * (noise[0]
                                                + cross[0, 1] * q2))
        ok &= (cross[1, 1] * q2 >= targets[1] * (noise[1]
                                                 + cross[1, 0] * q1))
        total = np.where(ok, q1 + q2, np.inf)
        assert sol.objective <= total.min() * (1 + 1e-9)
    assert solved >= 3


def test_phase_one_reports_infeasible():
    prob = ConvexProblem(
        objective=lambda x: (float(x[0]), np.ones(1)),
        constraints=[lambda x: (float(x[0]) + 1.0, np.ones(1))],
        lower=np.zeros(1))
    sol = solve_convex(prob, np.array([0.5]))
    assert sol.status == "infeasible"


def test_iteration_counts_and_runtime_proxy_are_deterministic():
    prob = ConvexProblem(
        objective=lambda x: (float(x @ x), 2.0 * x),
        constraints=[lambda x: (float(x.sum()) - 5.0,
                                np.ones(x.size))])
    a = solve_convex(prob, np.array([1.0, 1.0]))
    b = solve_convex(prob, np.array([1.0, 1.0]))
    assert a.iterations == b.iterations
    assert a.runtime_ms == b.runtime_ms
    assert np.array_equal(a.x["x"], b.x["x"])


# --------------------------------------------------------------- waterfill


def test_waterfill_matches_grid_oracle():
    rng = _rng("waterfill")
    for trial in range(20):
        gains = rng.uniform(0.1, 4.0, 3)
        total = rng.uniform(0.5, 8.0)
        alloc = waterfill(gains, total)
        assert alloc.sum() == pytest.approx(total, rel=1e-12)
        assert np.all(alloc >= 0)

        axis = np.linspace(0, total, 120)
        p1, p2 = np.meshgrid(axis, axis, indexing="ij")
        p3 = total - p1 - p2
        rate = np.where(
            p3 >= 0,
            np.log2(1 + gains[0] * p1) + np.log2(1 + gains[1] * p2)
            + np.log2(1 + gains[2] * np.maximum(p3, 0)),
            -np.inf)
        ours = np.log2(1 + gains * alloc).sum()
        assert ours >= rate.max() - 1e-3


def test_waterfill_water_level_is_flat_across_active_channels():
    gains = np.array([2.0, 1.0, 0.25, 3.0])
    alloc = waterfill(gains, 2.0)
    active = alloc > 0
    levels = alloc[active] + 1.0 / gains[active]
    assert np.ptp(levels) <= 1e-12
    # inactive channels must sit at or above the water level
    assert np.all(1.0 / gains[~active] >= levels.max() - 1e-12)


def test_waterfill_edges():
    assert np.array_equal(waterfill(np.array([1.0, 2.0]), 0.0),
                          np.zeros(2))
    with pytest.raises(ValueError):
        waterfill(np.array([1.0, -1.0]), 1.0)


# ------------------------------------------------------- enumeration oracle


def _payoff_instance(sense, payoff):
    layout = [VarBlock("b", (2,), "binary")]

    def objective(data, x):
        bits = np.asarray(x["b"]) > 0.5
        return float(payoff[int(bits[0]) * 2 + int(bits[1])])

    return ProblemInstance(
        kind="Payoff", sense=sense, data=None, layout=layout,
        constraint_names=[], objective_fn=objective,
        residual_fn=lambda data, x: [], has_binaries=True)


def test_exhaustive_payoff_table_argmax():
    payoff = np.array([3.0, -1.0, 7.0, 2.0])
    best_max = solve_exhaustive(_payoff_instance("max", payoff))
    assert best_max.objective == 7.0
    assert np.array_equal(best_max.x["b"], np.array([1.0, 0.0]))
    assert best_max.status == "optimal" and best_max.gap == 0.0
    assert best_max.iterations == 4

    best_min = solve_exhaustive(_payoff_instance("min", payoff))
    assert best_min.objective == -1.0
    assert np.array_equal(best_min.x["b"], np.array([0.0, 1.0]))


def test_exhaustive_budget_refusals():
    rng = _rng("refuse")
    # 21 binaries
    wide = build_problem(NomaSumRate(
        subcarrier_gains=rng.uniform(0.5, 2.0, (21, 1)),
        noise_vars=np.ones(1), power_budget=5.0, min_rates=np.zeros(1)))
    with pytest.raises(ValueError, match="binaries"):
        solve_exhaustive(wide)
    # 4 continuous dims without a leaf solver
    fat = build_problem(NomaSumRate(
        subcarrier_gains=rng.uniform(0.5, 2.0, (1, 4)),
        noise_vars=np.ones(4), power_budget=5.0, min_rates=np.zeros(4)))
    with pytest.raises(ValueError, match="continuous"):
        solve_exhaustive(fat)
    # complex blocks cannot be gridded
    surf = build_problem(IrsSumRate(
        h_direct=rng.complex_normal((1, 2)), bs_irs=rng.complex_normal((2, 3)),
        irs_user=rng.complex_normal((1, 3)), noise_vars=np.ones(1),
        power_budget=1.0))
    with pytest.raises(ValueError, match="leaf_solver"):
        solve_exhaustive(surf)


def test_exhaustive_with_leaf_picks_better_subcarrier():
    # gains (1, 4): the second subcarrier meets 1 bit/s/Hz with p = 0.25
    inst = build_problem(OfdmaPowerMin(
        subcarrier_gains=np.array([[1.0, 4.0]]), noise_var=1.0,
        power_budgets=np.array([10.0]), min_rates=np.array([1.0])))
    sol = solve_exhaustive(inst, leaf_solver=ofdma_leaf)
    assert sol.status == "optimal" and sol.gap == 0.0
    assert sol.objective == pytest.approx(0.25, rel=1e-12)
    assert np.array_equal(sol.x["schedule"], np.array([[0.0], [1.0]]))


def test_exhaustive_grid_mode_reports_spacing():
    inst = build_problem(NomaSumRate(
        subcarrier_gains=np.array([[2.0]]), noise_vars=np.array([1.0]),
        power_budget=3.0, min_rates=np.zeros(1)))
    axis = np.linspace(0.0, 3.0, 7)
    sol = solve_exhaustive(inst, grids={"powers": axis})
    assert sol.status == "feasible"
    assert sol.gap == pytest.approx(0.5)
    assert sol.objective == pytest.approx(np.log2(1 + 2.0 * 3.0), rel=1e-12)
    assert sol.x["powers"][0] == pytest.approx(3.0)


def test_exhaustive_infeasible_when_rate_floor_unreachable():
    inst = build_problem(OfdmaPowerMin(
        subcarrier_gains=np.array([[0.01, 0.02]]), noise_var=1.0,
        power_budgets=np.array([0.1]), min_rates=np.array([5.0])))
    sol = solve_exhaustive(inst, leaf_solver=ofdma_leaf)
    assert sol.status == "infeasible"
