"""SCA, block-coordinate, and lifted-beamforming solver tests."""

import itertools

import numpy as np
import pytest

from ngma_opt.channels import irs_effective_channel
from ngma_opt.metrics import alpha_from_order
from ngma_opt.numerics import Rng
from ngma_opt.problems import (
    IrsSumRate,
    IsacCommCentric,
    build_problem,
    check_feasibility,
    evaluate_objective,
    phase_codebook,
)
from ngma_opt.solvers import (
    SolverOptions,
    solve_bcd,
    solve_sca,
    solve_sdr_beamforming,
)
from ngma_opt.solvers.bcd import surface_block_solvers
from ngma_opt.solvers.sca import ScaModel, gradient_check, isac_model


def _rng(tag):
    return Rng(954).split("solvers-local", tag)


def _isac_instance(tag, k_users=2, n_ant=4, length=8):
    rng = _rng(tag)
    return build_problem(IsacCommCentric(
        comm_channels=rng.complex_normal((k_users, n_ant)),
        symbols=rng.complex_normal((k_users, length)),
        target_pattern=rng.complex_normal((n_ant, length)),
        noise_vars=np.ones(k_users), power_budget=10.0,
        pattern_tolerance=5.0))


def _kkt_residual(model, x):
    """Scaled stationarity residual with least-squares multipliers."""
    _, fg = model.objective(x)
    active = []
    for fn in model.constraints:
        value, cg = fn(x)
        if value > -1e-5 * max(1.0, abs(value)):
            active.append(cg)
    if not active:
        return np.linalg.norm(fg) / max(1.0, np.linalg.norm(fg))
    mat = np.stack(active, axis=1)
    mult = np.maximum(np.linalg.lstsq(mat, fg, rcond=None)[0], 0.0)
    return np.linalg.norm(fg - mat @ mult) / max(1.0, np.linalg.norm(fg))


# ----------------------------------------------------------------- SCA


def test_sca_box_quadratic_hits_the_maximizer():
    def obj(z):
        return (-(z[0] - 2.0) ** 2 - (z[1] + 1.0) ** 2,
                np.array([-2 * (z[0] - 2.0), -2 * (z[1] + 1.0)]))

    model = ScaModel(objective=obj, lower=np.full(2, -5.0),
                     upper=np.full(2, 5.0))
    sol = solve_sca(model, np.zeros(2), SolverOptions())
    assert sol.status == "optimal"
    assert sol.x["x"] == pytest.approx([2.0, -1.0], abs=1e-4)


def test_sca_active_constraint_satisfies_stationarity():
    # max -|z|^2 subject to z1 + z2 >= 1: optimum at (0.5, 0.5)
    def obj(z):
        return -float(z @ z), -2.0 * z

    def con(z):
        return 1.0 - z[0] - z[1], np.array([-1.0, -1.0])

    model = ScaModel(objective=obj, constraints=[con])
    sol = solve_sca(model, np.array([2.0, 2.0]), SolverOptions())
    assert sol.status == "optimal"
    assert sol.x["x"] == pytest.approx([0.5, 0.5], abs=1e-5)
    assert _kkt_residual(model, sol.x["x"]) <= 1e-5


def test_sca_rejects_infeasible_start():
    def obj(z):
        return -float(z @ z), -2.0 * z

    def con(z):
        return 1.0 - z[0], np.array([-1.0, 0.0])

    model = ScaModel(objective=obj, constraints=[con])
    with pytest.raises(ValueError, match="starting point"):
        solve_sca(model, np.zeros(2), SolverOptions())


def test_isac_adapter_matches_instance_objective():
    inst = _isac_instance("adapter")
    model, pack, unpack = isac_model(inst)
    rng = _rng("adapter-point")
    beams = 0.3 * rng.complex_normal((4, 2))
    x = pack(beams)
    value, _ = model.objective(x)
    assert value == pytest.approx(
        evaluate_objective(inst, {"beams": beams}), rel=1e-12)
    assert np.allclose(unpack(x), beams)


def test_isac_gradients_match_central_differences():
    inst = _isac_instance("grads")
    model, pack, _ = isac_model(inst)
    rng = _rng("grads-points")
    for _ in range(5):
        x = pack(0.4 * rng.complex_normal((4, 2)))
        assert gradient_check(model.objective, x) <= 1e-6
        for fn in model.constraints:
            assert gradient_check(fn, x) <= 1e-6


def test_isac_projection_lands_on_the_feasible_set():
    inst = _isac_instance("proj")
    model, pack, _ = isac_model(inst)
    rng = _rng("proj-points")
    for _ in range(5):
        z = pack(3.0 * rng.complex_normal((4, 2)))
        p = model.project(z)
        for fn in model.constraints:
            assert fn(p)[0] <= 1e-8


def test_isac_sca_is_monotone_and_reaches_stationarity():
    inst = _isac_instance("solve")
    model, pack, unpack = isac_model(inst)
    x0 = pack(np.zeros((4, 2), dtype=complex))
    trace = []
    sol = solve_sca(model, x0, SolverOptions(tol_gap=1e-7, max_iter=2000),
                    trace_out=trace)
    assert sol.status == "optimal"
    diffs = np.diff(np.asarray(trace))
    assert np.all(diffs >= -1e-12 * np.maximum(1.0, np.abs(trace[:-1])))
    assert _kkt_residual(model, sol.x["x"]) <= 1e-4
    feasible, _ = check_feasibility(inst, {"beams": unpack(sol.x["x"])})
    assert feasible


def test_isac_sca_is_deterministic():
    inst = _isac_instance("repeat")
    model, pack, _ = isac_model(inst)
    x0 = pack(np.zeros((4, 2), dtype=complex))
    a = solve_sca(model, x0, SolverOptions(tol_gap=1e-6, max_iter=500))
    b = solve_sca(model, x0, SolverOptions(tol_gap=1e-6, max_iter=500))
    assert np.array_equal(a.x["x"], b.x["x"])
    assert a.objective == b.objective and a.iterations == b.iterations


# ------------------------------------------------------ block coordinate


def _surface_instance(tag, k_users=1, n_ant=3, m_elems=4, bits=2):
    rng = _rng(tag)
    return build_problem(IrsSumRate(
        h_direct=rng.complex_normal((k_users, n_ant)),
        bs_irs=rng.complex_normal((n_ant, m_elems)),
        irs_user=rng.complex_normal((k_users, m_elems)),
        noise_vars=np.ones(k_users), power_budget=4.0,
        codebook_bits=bits))


def _surface_start(instance):
    data = instance.data
    k_users = data.h_direct.shape[0]
    n_ant = data.h_direct.shape[1]
    m_elems = data.bs_irs.shape[1]
    book = phase_codebook(data.codebook_bits)
    return {"beams": np.zeros((n_ant, k_users), dtype=complex),
            "phases": np.full(m_elems, book[0]),
            "order_gates": alpha_from_order(np.arange(k_users))}


def test_bcd_single_user_matches_full_enumeration():
    inst = _surface_instance("bcd-enum")
    data = inst.data
    trace = []
    sol = solve_bcd(inst, _surface_start(inst),
                    surface_block_solvers(inst), trace_out=trace)
    assert sol.status == "optimal"
    assert sol.max_residual <= 1e-9

    # oracle: every codebook combination with the matched-filter beam
    book = phase_codebook(data.codebook_bits)
    best = -np.inf
    for combo in itertools.product(book, repeat=4):
        h_eff = irs_effective_channel(data.h_direct[0], data.bs_irs,
                                      data.irs_user[0], np.array(combo))
        snr = data.power_budget * np.linalg.norm(h_eff) ** 2
        best = max(best, float(np.log2(1.0 + snr)))
    assert sol.objective == pytest.approx(best, rel=1e-6)


def test_bcd_trace_is_exactly_monotone():
    inst = _surface_instance("bcd-mono", k_users=2, n_ant=4, m_elems=5)
    x0 = _surface_start(inst)
    x0["beams"] = (np.sqrt(inst.data.power_budget / 8)
                   * _rng("bcd-mono-beams").complex_normal((4, 2)))
    x0["beams"] *= np.sqrt(inst.data.power_budget
                           / max(np.sum(np.abs(x0["beams"]) ** 2), 1e-12))
    trace = []
    sol = solve_bcd(inst, x0, surface_block_solvers(inst),
                    trace_out=trace)
    assert len(trace) >= 2
    assert np.all(np.diff(np.asarray(trace)) >= 0.0)
    assert sol.objective == trace[-1]


def test_bcd_discards_worsening_updates():
    inst = _surface_instance("bcd-guard")

    def saboteur(instance, x, opts):
        return {"beams": np.zeros_like(x["beams"])}

    x0 = _surface_start(inst)
    x0["beams"][:, 0] = np.sqrt(inst.data.power_budget / 3)
    start_val = evaluate_objective(inst, x0)
    sol = solve_bcd(inst, x0, {("beams",): saboteur})
    assert sol.objective >= start_val
    assert np.array_equal(sol.x["beams"], x0["beams"])


def test_bcd_is_deterministic():
    inst = _surface_instance("bcd-repeat")
    a = solve_bcd(inst, _surface_start(inst), surface_block_solvers(inst))
    b = solve_bcd(inst, _surface_start(inst), surface_block_solvers(inst))
    assert a.objective == b.objective
    assert all(np.array_equal(a.x[k], b.x[k]) for k in a.x)


# ------------------------------------------------- lifted beamforming


def _duality_power(channels, targets, noise):
    """Independent oracle: dual-uplink fixed point for min total power."""
    h = channels / np.sqrt(noise)[:, None]
    k_users, n = h.shape
    q = np.zeros(k_users)
    for _ in range(5000):
        new = np.empty(k_users)
        for k in range(k_users):
            cov = np.eye(n, dtype=complex)
            for j in range(k_users):
                if j != k:
                    cov += q[j] * np.outer(h[j], h[j].conj())
            new[k] = targets[k] / np.real(
                h[k].conj() @ np.linalg.solve(cov, h[k]))
        if np.max(np.abs(new - q)) <= 1e-14 * max(1.0, new.max()):
            q = new
            break
        q = new
    return float(q.sum())


def test_sdr_single_user_matches_matched_filter_power():
    rng = _rng("sdr-single")
    for _ in range(10):
        h = rng.complex_normal(4)
        target = float(rng.uniform(0.5, 4.0))
        noise = float(rng.uniform(0.5, 2.0))
        sol = solve_sdr_beamforming(h[None, :], np.array([target]),
                                    np.array([noise]))
        assert sol.status == "optimal"
        ref = target * noise / np.linalg.norm(h) ** 2
        assert sol.objective == pytest.approx(ref, rel=1e-6)
        assert sol.x["rank1_defect"][0] <= 1e-6
        sinr = abs(np.vdot(h, sol.x["beams"][:, 0])) ** 2 / noise
        assert sinr == pytest.approx(target, rel=1e-9)


def test_sdr_multi_user_matches_duality_oracle():
    rng = _rng("sdr-multi")
    for trial in range(6):
        k_users, n_ant = (2, 4) if trial % 2 == 0 else (3, 6)
        channels = rng.complex_normal((k_users, n_ant))
        targets = rng.uniform(0.5, 3.0, k_users)
        noise = rng.uniform(0.5, 1.5, k_users)
        ref = _duality_power(channels, targets, noise)
        sol = solve_sdr_beamforming(channels, targets, noise)
        assert sol.status == "optimal"
        assert abs(sol.objective - ref) / ref <= 2e-3
        assert np.max(sol.x["rank1_defect"]) <= 1e-6
        # every floor is met with equality after rebalancing
        beams = sol.x["beams"]
        for k in range(k_users):
            signal = abs(np.vdot(channels[k], beams[:, k])) ** 2
            interference = sum(
                abs(np.vdot(channels[k], beams[:, j])) ** 2
                for j in range(k_users) if j != k)
            sinr = signal / (interference + noise[k])
            assert sinr == pytest.approx(targets[k], rel=1e-8)


def test_sdr_zero_interference_gate_decouples_users():
    rng = _rng("sdr-gate")
    channels = rng.complex_normal((2, 4))
    targets = np.array([1.5, 1.0])
    noise = np.ones(2)
    sol = solve_sdr_beamforming(channels, targets, noise,
                                alpha=np.zeros((2, 2)))
    ref = sum(targets[k] * noise[k] / np.linalg.norm(channels[k]) ** 2
              for k in range(2))
    assert sol.objective == pytest.approx(ref, rel=1e-9)


def test_sdr_antenna_caps_respected_or_infeasible():
    rng = _rng("sdr-caps")
    channels = rng.complex_normal((2, 4))
    targets = np.array([1.5, 1.0])
    noise = np.ones(2)
    free = solve_sdr_beamforming(channels, targets, noise)

    starved = solve_sdr_beamforming(
        channels, targets, noise,
        antenna_limits=np.full(4, free.objective / 4 * 0.7))
    assert starved.status == "infeasible"

    cap = free.objective / 4 * 1.6
    capped = solve_sdr_beamforming(channels, targets, noise,
                                   antenna_limits=np.full(4, cap))
    assert capped.status in ("optimal", "feasible")
    assert capped.objective >= free.objective - 1e-9
    per_antenna = np.sum(np.abs(capped.x["beams"]) ** 2, axis=1)
    assert np.all(per_antenna <= cap * (1 + 1e-6))


def test_sdr_is_deterministic():
    rng = _rng("sdr-repeat")
    channels = rng.complex_normal((3, 6))
    targets = np.full(3, 2.0)
    noise = np.ones(3)
    a = solve_sdr_beamforming(channels, targets, noise)
    b = solve_sdr_beamforming(channels, targets, noise)
    assert a.objective == b.objective
    assert np.array_equal(a.x["beams"], b.x["beams"])


def test_sdr_rejects_dead_channels():
    with pytest.raises(ValueError, match="nonzero channel"):
        solve_sdr_beamforming(np.zeros((1, 3), dtype=complex),
                              np.array([1.0]), np.array([1.0]))
