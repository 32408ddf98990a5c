"""Achievable rates, SINRs and power/energy metrics.

Conventions:

- channel rows ``h_k`` enter SINRs as ``|h_k^H p|^2`` (conjugating the
  channel), except where a model is defined with a plain transpose and the
  docstring says so;
- ``alpha`` is a [K, K] binary interference-gating matrix for successive
  interference cancellation: ``alpha[k, r] = 1`` means user k treats user
  r's signal as noise, ``0`` means user k decodes and cancels it first.
  The diagonal is ignored.  A consistent ordering has alpha[k,r]+alpha[r,k]=1
  off-diagonal;
- rates are spectral efficiencies in bit/s/Hz, log base 2.
"""

from dataclasses import dataclass

import numpy as np


def sic_order(gains):
    """Decode-priority permutation: strongest user first.

    Ties are broken toward the lower user index, which therefore decodes
    later (is treated as the stronger of the tied pair).

    Args:
        gains: [K] non-negative channel power gains.

    Returns:
        [K] integer permutation; position 0 holds the strongest user.
    """
    gains = np.asarray(gains, dtype=float)
    return np.lexsort((np.arange(gains.size), -gains))


def alpha_from_order(order):
    """Interference-gating matrix for a decode-priority permutation.

    alpha[k, r] = 1 iff r outranks k (appears earlier in `order`), i.e. the
    stronger user's signal is decoded last and cannot be cancelled by the
    weaker ones.
    """
    order = np.asarray(order, dtype=int)
    k = order.size
    rank = np.empty(k, dtype=int)
    rank[order] = np.arange(k)
    alpha = (rank[None, :] < rank[:, None]).astype(float)
    return alpha


def _check_schedule(schedule):
    schedule = np.asarray(schedule, dtype=float)
    if np.any(np.abs(schedule - np.round(schedule)) > 1e-9) \
            or np.any(schedule < -1e-9) or np.any(schedule > 1 + 1e-9):
        raise ValueError("schedule entries must be binary")
    if np.any(np.abs(schedule.sum(axis=0) - 1.0) > 1e-9):
        raise ValueError("each stream must be scheduled on exactly one subcarrier")
    return np.round(schedule)


def ofdma_rate(h_diag, schedule, powers, noise_var):
    """Sum rate of one user's streams over orthogonal subcarriers.

    R = sum_d sum_m schedule[m, d] * log2(1 + |h[m]|^2 p[d] / noise).

    Args:
        h_diag: [M] per-subcarrier complex channel coefficients.
        schedule: [M, D] binary assignment, one subcarrier per stream.
        powers: [D] per-stream transmit powers.
        noise_var: receiver noise power.

    Returns:
        Scalar rate in bit/s/Hz.
    """
    schedule = _check_schedule(schedule)
    gains = np.abs(np.asarray(h_diag)) ** 2
    powers = np.asarray(powers, dtype=float)
    per = np.log2(1.0 + gains[:, None] * powers[None, :] / noise_var)
    return float(np.sum(schedule * per))


def noma_subcarrier_rates(gains_sq, powers, noise_vars):
    """Per-user rates for superposed users sharing one subcarrier.

    Decoding follows the channel-strength order: the strongest user cancels
    everyone and sees only noise, while user k suffers interference from the
    stronger users (decoded after their own signals at k's receiver):

        R_k = log2(1 + g_k p_k / (g_k * sum_{r stronger} p_r + noise_k)).

    Args:
        gains_sq: [K] channel power gains |h_k|^2.
        powers: [K] transmit powers.
        noise_vars: [K] or scalar noise powers.

    Returns:
        [K] rates, indexed by user (not by decode rank).
    """
    gains_sq = np.asarray(gains_sq, dtype=float)
    powers = np.asarray(powers, dtype=float)
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), gains_sq.shape)
    order = sic_order(gains_sq)
    rates = np.empty_like(gains_sq)
    stronger_power = 0.0
    for rank, user in enumerate(order):
        g = gains_sq[user]
        rates[user] = np.log2(1.0 + g * powers[user]
                              / (g * stronger_power + noise[user]))
        stronger_power += powers[user]
    return rates


def ddma_rate(channels, indicators, powers, noise_var):
    """Per-user rates for delay-Doppler-domain superposition.

    Users are ranked by descending p_k * ||H_k Pi_k||_F^2 (ties toward the
    lower index); interference on user k averages the weaker users' energy
    over the grid: I_k = (1/N) * sum_{weaker} p * ||H Pi||_F^2.  The rate is
    evaluated in the projected stream space (Sylvester identity):

        R_k = log2 det(I_N + p_k/(I_k + noise) * (H_k Pi_k)^H (H_k Pi_k)).

    Args:
        channels: [K, G, G] effective grid channel matrices.
        indicators: [K, G, N] binary resource indicators (orthonormal cols).
        powers: [K] transmit powers.
        noise_var: noise power.

    Returns:
        [K] rates, indexed by user.
    """
    channels = np.asarray(channels)
    indicators = np.asarray(indicators)
    powers = np.asarray(powers, dtype=float)
    k_users, _, n_streams = indicators.shape
    effective = channels @ indicators                      # [K, G, N]
    energy = np.sum(np.abs(effective) ** 2, axis=(1, 2))   # ||H Pi||_F^2
    keys = powers * energy
    order = np.lexsort((np.arange(k_users), -keys))
    rates = np.empty(k_users)
    for rank, user in enumerate(order):
        weaker = order[rank + 1:]
        interference = np.sum(powers[weaker] * energy[weaker]) / n_streams
        e = effective[user]
        gram = e.conj().T @ e
        scale = powers[user] / (interference + noise_var)
        sign, logdet = np.linalg.slogdet(np.eye(n_streams) + scale * gram)
        rates[user] = logdet / np.log(2.0)
    return rates


def _beam_powers(channels, beams):
    """|h_k^H p_r|^2 table: channels [K, N] (conjugated), beams [N, R]."""
    cross = np.asarray(channels).conj() @ np.asarray(beams)
    return np.abs(cross) ** 2


def rsma_rates(channels, p_common, p_private, noise_vars):
    """Common and private stream rates under rate splitting.

    Every user first decodes the shared common stream treating all private
    streams as noise, then its own private stream treating the other users'
    private streams as noise:

        R_c,k = log2(1 + |h_k^H p_c|^2 / (sum_j |h_k^H p_j|^2 + noise_k))
        R_p,k = log2(1 + |h_k^H p_k|^2 / (sum_{j!=k} |h_k^H p_j|^2 + noise_k))

    Data symbols are unit power, so rates depend on the beams only.

    Args:
        channels: [K, N] user channels (rows h_k).
        p_common: [N] common-stream beam.
        p_private: [N, K] private beams (columns).
        noise_vars: [K] or scalar noise powers.

    Returns:
        (common_rates [K], private_rates [K]); the decodable common rate is
        min(common_rates), to be shared among users.
    """
    channels = np.asarray(channels)
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float),
                            (channels.shape[0],))
    private_pow = _beam_powers(channels, p_private)        # [K, K]
    common_pow = _beam_powers(channels, np.asarray(p_common)[:, None])[:, 0]
    total_private = private_pow.sum(axis=1)
    own = np.diag(private_pow)
    rc = np.log2(1.0 + common_pow / (total_private + noise))
    rp = np.log2(1.0 + own / (total_private - own + noise))
    return rc, rp


def miso_sinr(channels, beams, noise_vars, alpha=None):
    """Downlink SINRs with optional interference gating.

    Gamma_k = |h_k^H p_k|^2 /
              (sum_{r != k} alpha[k, r] |h_k^H p_r|^2 + noise_k).

    Args:
        channels: [K, N] user channels (rows h_k).
        beams: [N, K] per-user beams (columns).
        noise_vars: [K] or scalar noise powers.
        alpha: [K, K] binary gating (None = no cancellation anywhere).

    Returns:
        [K] SINRs.
    """
    channels = np.asarray(channels)
    k_users = channels.shape[0]
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k_users,))
    power = _beam_powers(channels, beams)                  # [K, K]
    if alpha is None:
        gate = 1.0 - np.eye(k_users)
    else:
        gate = np.asarray(alpha, dtype=float) * (1.0 - np.eye(k_users))
    interference = np.sum(gate * power, axis=1)
    return np.diag(power) / (interference + noise)


def uav_sinr(channels, beams, alpha, noise_vars):
    """SINRs for UAV downlink beams with SIC gating (see miso_sinr)."""
    return miso_sinr(channels, beams, noise_vars, alpha=alpha)


def irs_sinr(h_direct, bs_irs, irs_user, psi, beams, alpha, noise_vars):
    """SINRs through a reflecting surface with SIC gating.

    Builds the effective channels h_k = h_direct,k + F diag(e^{j psi}) h_r,k
    and evaluates miso_sinr.

    Args:
        h_direct: [K, N] direct channels.
        bs_irs: [N, M] BS-IRS matrix.
        irs_user: [K, M] IRS-user channels.
        psi: [M] phase shifts (radians).
        beams: [N, K] beams.
        alpha: [K, K] gating matrix.
        noise_vars: [K] or scalar noise powers.

    Returns:
        [K] SINRs.
    """
    from .channels import irs_effective_channel

    h_direct = np.asarray(h_direct)
    irs_user = np.asarray(irs_user)
    effective = np.stack([
        irs_effective_channel(h_direct[k], bs_irs, irs_user[k], psi)
        for k in range(h_direct.shape[0])
    ])
    return miso_sinr(effective, beams, noise_vars, alpha=alpha)


def mfa_sinr(candidates, picks_per_port, selection, beams, noise_vars):
    """SINRs under discrete antenna-position selection.

    The realised channel is H = C T (see channels.mfa_channel); user k's
    effective link to beam p_r is H[k, :] @ p_r (transpose model, no
    conjugation), and no interference cancellation is performed:

        Gamma_k = |H[k] p_k|^2 / (sum_{r != k} |H[k] p_r|^2 + noise_k).

    Args:
        candidates: [K, N*Q] candidate channel columns.
        picks_per_port: Q.
        selection: [N] picks.
        beams: [N, K] beams.
        noise_vars: [K] or scalar.

    Returns:
        [K] SINRs.
    """
    from .channels import mfa_channel

    h = mfa_channel(candidates, picks_per_port, selection)
    # transpose model: pass conj(H) rows through the h^H p convention
    return miso_sinr(h.conj(), beams, noise_vars, alpha=None)


def isac_metrics(beams, symbols, comm_channels, target_pattern, noise_vars):
    """Communication rates and beampattern error for a dual-function transmit.

    The transmitted block is P S.  User k receives (h^(k))^T P S (transpose
    model) and should see its own symbol row s_k:

        Gamma_k = (||s_k||^2 / L) /
                  (||(h^(k))^T P S - s_k^T||^2 / L + noise_k)

    and the sensing side measures the beampattern mismatch
    MSE = ||P S - X0||_F^2 / L.

    Args:
        beams: [N, K] precoding matrix P.
        symbols: [K, L] symbol block S (rows s_k^T).
        comm_channels: [K, N] channel rows (h^(k))^T.
        target_pattern: [N, L] desired transmit block X0.
        noise_vars: [K] or scalar noise powers.

    Returns:
        (rates [K], mse): per-user rates log2(1+Gamma) and the scalar MSE.
    """
    beams = np.asarray(beams)
    symbols = np.asarray(symbols)
    comm_channels = np.asarray(comm_channels)
    k_users, block_len = symbols.shape
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k_users,))
    tx = beams @ symbols                                   # [N, L]
    received = comm_channels @ tx                          # [K, L]
    residual = np.sum(np.abs(received - symbols) ** 2, axis=1) / block_len
    signal = np.sum(np.abs(symbols) ** 2, axis=1) / block_len
    rates = np.log2(1.0 + signal / (residual + noise))
    mse = float(np.sum(np.abs(tx - np.asarray(target_pattern)) ** 2)
                / block_len)
    return rates, mse


def jcac_rates(h_diag, schedule, powers, noise_var, n_comm_streams):
    """Communication and offloading rates for one user's stream partition.

    The first `n_comm_streams` columns of the schedule carry communication
    data, the rest carry compute offloading; both follow the orthogonal
    subcarrier rate (see ofdma_rate).

    Returns:
        (r_comm, r_offload) scalar rates.
    """
    schedule = np.asarray(schedule)
    r_comm = ofdma_rate(h_diag, schedule[:, :n_comm_streams],
                        np.asarray(powers)[:n_comm_streams], noise_var)
    r_off = ofdma_rate(h_diag, schedule[:, n_comm_streams:],
                       np.asarray(powers)[n_comm_streams:], noise_var)
    return r_comm, r_off


def jcac_energy(zeta, cycles_per_bit, local_bits, frame_s, tx_powers, slot_s):
    """Total energy of local computing plus uplink transmission.

    E = sum_k ( zeta_k * (C_k L_k)^3 / frame^2  +  sum_l p_{k,l} * slot ).

    Args:
        zeta: [K] effective switched-capacitance coefficients.
        cycles_per_bit: [K] CPU cycles per bit.
        local_bits: [K] bits computed locally.
        frame_s: computation deadline (seconds).
        tx_powers: [K, D] per-stream transmit powers (or list of arrays).
        slot_s: transmission duration per stream (seconds).

    Returns:
        Scalar energy in consistent units.
    """
    zeta = np.asarray(zeta, dtype=float)
    cpb = np.asarray(cycles_per_bit, dtype=float)
    bits = np.asarray(local_bits, dtype=float)
    compute = np.sum(zeta * (cpb * bits) ** 3) / frame_s ** 2
    transmit = sum(float(np.sum(p)) * slot_s for p in tx_powers)
    return float(compute + transmit)


@dataclass
class AeroParams:
    """Rotary-wing propulsion model coefficients.

    Attributes:
        weight: aircraft weight (N).
        induced: induced-power coefficient c1 (hover induced power = W*c1).
        profile: blade profile power coefficient c2.
        profile_drag: speed-dependent profile drag factor c3.
        parasite: parasite drag coefficient c4.
        tip_speed: rotor tip speed V_T (m/s).
    """

    weight: float
    induced: float
    profile: float
    profile_drag: float
    parasite: float
    tip_speed: float


def uav_aero_power(velocity, params):
    """Propulsion power of a rotary-wing UAV at a given velocity.

    P = sqrt(2) W c1^2 / sqrt(||v||^2 + sqrt(||v||^4 + 4 c1^4))
        + c2 V_T^3 (1 + c3 (||v||/V_T)^2)  +  c4 ||v||^3.

    Hover (v = 0) reduces to W c1 + c2 V_T^3.

    Args:
        velocity: [3] (or [2]) velocity vector in m/s.
        params: AeroParams.

    Returns:
        Scalar power.
    """
    v = float(np.linalg.norm(np.asarray(velocity, dtype=float)))
    c1 = params.induced
    induced = (np.sqrt(2.0) * params.weight * c1 ** 2
               / np.sqrt(v ** 2 + np.sqrt(v ** 4 + 4.0 * c1 ** 4)))
    profile = params.profile * params.tip_speed ** 3 \
        * (1.0 + params.profile_drag * (v / params.tip_speed) ** 2)
    parasite = params.parasite * v ** 3
    return float(induced + profile + parasite)


def worst_case_bounds(h_hat, delta, beam):
    """Norm-bound extremes of |h^H p| over the ball ||h - h_hat|| <= delta.

    Returns (lower, upper) on the modulus: lower = max(0, |h_hat^H p| -
    delta ||p||), upper = |h_hat^H p| + delta ||p||.  Both are attained.
    """
    nominal = np.abs(np.vdot(h_hat, beam))
    slack = delta * np.linalg.norm(beam)
    return max(0.0, nominal - slack), nominal + slack


def worst_case_rsma_rates(h_hat, deltas, p_common, p_private, noise_vars):
    """Guaranteed rate lower bounds under norm-bounded channel errors.

    For each user the signal modulus takes its ball minimum and every
    interference modulus its ball maximum, giving a sound (generally loose)
    lower bound on both stream rates:

        R_c,k >= log2(1 + lb(p_c)^2 / (sum_j ub(p_j)^2 + noise_k))
        R_p,k >= log2(1 + lb(p_k)^2 / (sum_{j!=k} ub(p_j)^2 + noise_k)).

    With deltas = 0 this degenerates exactly to rsma_rates.

    Args:
        h_hat: [K, N] channel estimates.
        deltas: [K] error-ball radii.
        p_common: [N] common beam.
        p_private: [N, K] private beams.
        noise_vars: [K] or scalar.

    Returns:
        (common_bounds [K], private_bounds [K]).
    """
    h_hat = np.asarray(h_hat)
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float),
                             (h_hat.shape[0],))
    p_private = np.asarray(p_private)
    k_users = h_hat.shape[0]
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k_users,))
    rc = np.empty(k_users)
    rp = np.empty(k_users)
    for k in range(k_users):
        lb_c, _ = worst_case_bounds(h_hat[k], deltas[k], np.asarray(p_common))
        lubs = [worst_case_bounds(h_hat[k], deltas[k], p_private[:, j])
                for j in range(p_private.shape[1])]
        ub_sq = np.array([u ** 2 for _, u in lubs])
        lb_own = lubs[k][0]
        rc[k] = np.log2(1.0 + lb_c ** 2 / (ub_sq.sum() + noise[k]))
        rp[k] = np.log2(1.0 + lb_own ** 2
                        / (ub_sq.sum() - ub_sq[k] + noise[k]))
    return rc, rp
