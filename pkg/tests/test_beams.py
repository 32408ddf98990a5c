"""Allocation-kernel tests: splits, waterfilling, and family selection."""

import numpy as np
import pytest

from ngma_opt.beams import (
    batch_best_values,
    best_allocation,
    gated_value,
    power_splits,
    waterfill,
)
from ngma_opt.metrics import alpha_from_order, miso_sinr
from ngma_opt.numerics import Rng


def _rng(tag):
    return Rng(550).split("beams", tag)


def _draw(rng, k_users=3, n_ant=4):
    return rng.complex_normal((k_users, n_ant))


def _full_gate(k_users):
    # no SIC at all: every off-diagonal interferer survives
    return 1.0 - np.eye(k_users)


# -------------------------------------------------------------- power splits


def test_power_splits_enumerate_the_simplex_grid():
    rows = power_splits(2, step=0.5)
    assert sorted(map(tuple, rows.tolist())) == [
        (0.0, 1.0), (0.5, 0.5), (1.0, 0.0)]

    rows = power_splits(3)                      # default step 0.1
    assert rows.shape == (66, 3)                # compositions of 10 into 3
    assert np.allclose(rows.sum(axis=1), 1.0, atol=1e-12)
    assert rows.min() >= 0.0
    # corners present, so superposition can collapse to one user
    assert any(np.allclose(r, [1.0, 0.0, 0.0]) for r in rows)


def test_power_splits_single_user_is_trivial():
    assert power_splits(1).tolist() == [[1.0]]


# -------------------------------------------------------------- waterfilling


def test_waterfill_matches_hand_solutions():
    # budget 1 all goes to the lower level (water line below level 4)
    assert waterfill(np.array([1.0, 4.0]), 1.0) == pytest.approx([1.0, 0.0])
    # budget 5 -> water line 5: powers are line minus level
    assert waterfill(np.array([1.0, 4.0]), 5.0) == pytest.approx([4.0, 1.0])
    # equal levels split evenly
    assert waterfill(np.array([2.0, 2.0, 2.0]), 6.0) == pytest.approx(
        [2.0, 2.0, 2.0])


def test_waterfill_satisfies_the_kkt_water_line():
    rng = _rng("wf")
    for _ in range(25):
        levels = rng.uniform(0.1, 5.0, 6)
        powers = waterfill(levels, 7.5)
        assert powers.min() >= 0.0
        assert powers.sum() == pytest.approx(7.5, rel=1e-12)
        line = levels + powers
        active = powers > 1e-12
        # active channels share one water line; idle ones sit above it
        assert np.ptp(line[active]) <= 1e-9
        if np.any(~active):
            assert line[~active].min() >= line[active].max() - 1e-9


def test_waterfill_rejects_nonpositive_levels():
    with pytest.raises(ValueError):
        waterfill(np.array([1.0, 0.0]), 1.0)


# ---------------------------------------------------------------- gated value


def test_gated_value_agrees_with_the_sinr_metric():
    rng = _rng("vs-miso")
    for _ in range(10):
        channels = _draw(rng)
        beams = rng.complex_normal((4, 3))
        gate = alpha_from_order(rng.permutation(3)).astype(float)
        noise = rng.uniform(0.5, 2.0, 3)
        sinr = miso_sinr(channels, beams, noise, alpha=gate)
        assert gated_value(channels, beams, gate, noise) == pytest.approx(
            float(np.log2(1.0 + sinr).sum()), rel=1e-12)


# ------------------------------------------------------------- family search


def test_best_allocation_beams_achieve_the_reported_value():
    rng = _rng("achieve")
    for _ in range(10):
        channels = _draw(rng)
        gate = alpha_from_order(rng.permutation(3)).astype(float)
        noise = rng.uniform(0.5, 2.0, 3)
        budget = rng.uniform(1.0, 8.0)
        value, beams = best_allocation(channels, gate, budget, noise)
        assert np.sum(np.abs(beams) ** 2) <= budget * (1 + 1e-9)
        assert gated_value(channels, beams, gate, noise) == pytest.approx(
            value, rel=1e-12)
        # at least as good as serving any single user at full power
        for k in range(3):
            mf = float(np.log2(1.0 + budget
                               * np.linalg.norm(channels[k]) ** 2 / noise[k]))
            assert value >= mf - 1e-9


def test_single_user_takes_the_matched_filter_exactly():
    rng = _rng("mf")
    h = _draw(rng, k_users=1)
    value, beams = best_allocation(h, np.zeros((1, 1)), 4.0, 1.0)
    expect = 2.0 * h[0] / np.linalg.norm(h[0])
    assert np.allclose(beams[:, 0], expect, atol=1e-12)
    assert value == pytest.approx(
        float(np.log2(1.0 + 4.0 * np.linalg.norm(h[0]) ** 2)), rel=1e-12)


def test_zero_forcing_wins_on_correlated_interference_channels():
    # high SNR, no SIC: superposition is interference-limited, a single
    # user wastes a spatial degree of freedom, so zero forcing must win
    rng = _rng("zf")
    base = rng.complex_normal((1, 4))[0]
    base /= np.linalg.norm(base)
    orth = rng.complex_normal((1, 4))[0]
    orth -= (base.conj() @ orth) * base
    orth /= np.linalg.norm(orth)
    channels = np.stack([base, 0.6 * base + 0.8 * orth])
    noise, budget = 1e-6, 1.0

    value, beams = best_allocation(channels, _full_gate(2), budget,
                                   np.full(2, noise))
    cross = channels.conj() @ beams
    assert abs(cross[0, 1]) <= 1e-8 and abs(cross[1, 0]) <= 1e-8

    # independent replay of the zero-forcing pseudo-inverse and waterfill
    inv_gram = np.linalg.inv(channels.conj() @ channels.T)
    gains = 1.0 / np.real(np.diag(inv_gram))
    powers = waterfill(noise / gains, budget)
    expect = np.log2(1.0 + powers * gains / noise).sum()
    assert value == pytest.approx(float(expect), rel=1e-9)


def test_batch_values_match_single_solves_bitwise():
    rng = _rng("batch")
    channels = rng.complex_normal((12, 3, 4))
    channels[7] = channels[2]                   # duplicates must agree too
    gate = alpha_from_order([2, 0, 1]).astype(float)
    noise = rng.uniform(0.5, 2.0, 3)
    values = batch_best_values(channels, gate, 5.0, noise)
    for i in range(12):
        single, _ = best_allocation(channels[i], gate, 5.0, noise)
        assert values[i] == single              # exact float equality
    assert values[7] == values[2]


def test_kernel_value_is_monotone_in_the_power_budget():
    rng = _rng("monotone")
    channels = _draw(rng)
    gate = alpha_from_order([0, 1, 2]).astype(float)
    noise = np.ones(3)
    budgets = [0.25, 1.0, 4.0, 16.0]
    values = [best_allocation(channels, gate, b, noise)[0] for b in budgets]
    assert all(b > a for a, b in zip(values, values[1:]))


# ------------------------------------------------------------- robust bounds


def _uncertainty_triple(rng, channels, scale=0.3):
    n_ant = channels.shape[1]
    bs_irs = rng.complex_normal((n_ant, 5))
    norms = np.linalg.norm(channels, axis=1)
    return (bs_irs, scale * norms, 0.05 * norms)


def test_zero_radii_reproduce_the_nominal_kernel_bitwise():
    rng = _rng("zero-ball")
    channels = _draw(rng)
    gate = alpha_from_order([1, 2, 0]).astype(float)
    noise = rng.uniform(0.5, 2.0, 3)
    bs_irs = rng.complex_normal((4, 5))
    unc = (bs_irs, np.zeros(3), np.zeros(3))
    plain, beams_plain = best_allocation(channels, gate, 3.0, noise)
    robust, beams_rob = best_allocation(channels, gate, 3.0, noise,
                                        uncertainty=unc)
    assert robust == plain
    assert np.array_equal(beams_plain, beams_rob)


def test_robust_bound_never_exceeds_nominal():
    rng = _rng("pessimism")
    for _ in range(5):
        channels = _draw(rng)
        gate = alpha_from_order(rng.permutation(3)).astype(float)
        noise = rng.uniform(0.5, 2.0, 3)
        unc = _uncertainty_triple(rng, channels)
        nominal, _ = best_allocation(channels, gate, 4.0, noise)
        bound, _ = best_allocation(channels, gate, 4.0, noise,
                                   uncertainty=unc)
        assert bound <= nominal + 1e-12


def test_robust_bound_is_sound_for_truths_inside_the_ball():
    # the worst-case score must lower-bound the realized rate for every
    # direct/reflected error inside the declared radii
    rng = _rng("sound")
    violations = 0
    for _ in range(5):
        channels = _draw(rng)
        gate = alpha_from_order(rng.permutation(3)).astype(float)
        noise = rng.uniform(0.5, 2.0, 3)
        bs_irs, d_direct, d_reflect = _uncertainty_triple(rng, channels)
        unc = (bs_irs, d_direct, d_reflect)
        bound, beams = best_allocation(channels, gate, 4.0, noise,
                                       uncertainty=unc)
        for _ in range(200):
            truth = np.empty_like(channels)
            twist = np.exp(1j * rng.uniform(0.0, 2 * np.pi, 5))
            for k in range(3):
                err_d = rng.complex_normal((4,))
                err_d *= rng.uniform(0.0, d_direct[k]) / np.linalg.norm(err_d)
                err_r = rng.complex_normal((5,))
                err_r *= (rng.uniform(0.0, d_reflect[k])
                          / np.linalg.norm(err_r))
                truth[k] = channels[k] + err_d + bs_irs @ (twist * err_r)
            realized = gated_value(truth, beams, gate, noise)
            violations += bound > realized + 1e-9
    assert violations == 0
