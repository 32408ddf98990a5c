"""The eight resource-allocation problems as solver-consumable instances.

Each problem kind is a small scenario dataclass; build_problem turns it into
a ProblemInstance carrying the variable layout, an objective closure, and a
residual closure.  Residual convention: a point is feasible iff every
residual is <= tol.  Inequalities g(x) <= b report g(x) - b, lower bounds
b - g(x), equalities |g(x) - b|, binaries max |x - round(x)|.  Constraints
are aggregated per declared name (max over the group), and a trailing "box"
entry covers unnamed variable bounds.

SINR requirements are stored linearized — signal - gamma*(interference +
noise) >= 0 — which is equivalent to Gamma >= gamma and polynomial in the
variables.
"""

from dataclasses import dataclass

import numpy as np

from . import metrics
from .channels import uav_user_channel
from .metrics import AeroParams

MAX_SENSE = "max"
MIN_SENSE = "min"


@dataclass
class VarBlock:
    """One named variable block of an instance layout."""

    name: str
    shape: tuple
    kind: str                   # "continuous" | "binary" | "complex"
    lower: float = -np.inf      # elementwise box, continuous blocks only
    upper: float = np.inf


@dataclass
class Solution:
    """Solver output: assignment, value, certificates and bookkeeping."""

    x: dict
    objective: float
    max_residual: float
    status: str                 # optimal | feasible | infeasible | iteration-limit
    gap: float = None
    iterations: int = 0
    runtime_ms: float = 0.0


@dataclass
class ProblemInstance:
    kind: str
    sense: str
    data: object
    layout: list
    constraint_names: list
    objective_fn: object
    residual_fn: object
    has_binaries: bool = False
    monotone_in: tuple = ()
    convex_when_fixed: tuple = ()
    sinr_constrained: bool = False

    def block(self, name):
        for b in self.layout:
            if b.name == name:
                return b
        raise KeyError(name)


# ----------------------------------------------------------- layout checks


def _check_x(instance, x):
    for blk in instance.layout:
        if blk.name not in x:
            raise ValueError("missing variable block '%s'" % blk.name)
        arr = np.asarray(x[blk.name])
        if arr.shape != blk.shape:
            raise ValueError("block '%s' has shape %s, expected %s"
                             % (blk.name, arr.shape, blk.shape))
        if blk.kind != "complex" and np.iscomplexobj(arr):
            raise ValueError("block '%s' must be real" % blk.name)
    extra = set(x) - {b.name for b in instance.layout}
    if extra:
        raise ValueError("unknown variable blocks %s" % sorted(extra))


def evaluate_objective(instance, x):
    """Objective value at x (matches the metrics-module formulas)."""
    _check_x(instance, x)
    val = float(instance.objective_fn(instance.data, x))
    if not np.isfinite(val):
        raise ValueError("objective is not finite at the given point")
    return val


def check_feasibility(instance, x, tol=1e-9):
    """(feasible, residuals) with one aggregated residual per constraint.

    The residual vector follows instance.constraint_names; the final entry
    is the box-bound violation of the continuous blocks.
    """
    _check_x(instance, x)
    res = np.asarray(instance.residual_fn(instance.data, x), dtype=float)
    box = 0.0
    for blk in instance.layout:
        if blk.kind == "continuous":
            arr = np.asarray(x[blk.name], dtype=float)
            if np.isfinite(blk.lower):
                box = max(box, float(np.max(blk.lower - arr, initial=0.0)))
            if np.isfinite(blk.upper):
                box = max(box, float(np.max(arr - blk.upper, initial=0.0)))
    res = np.append(res, box)
    return bool(np.all(res <= tol)), res


def _binary_residual(arr):
    arr = np.asarray(arr, dtype=float)
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(arr - np.round(arr))))


def _pairwise_order_residual(alpha):
    """|alpha + alpha^T - 1| off the diagonal (exact ordering constraint)."""
    alpha = np.asarray(alpha, dtype=float)
    k = alpha.shape[0]
    if k < 2:
        return 0.0
    dev = np.abs(alpha + alpha.T - 1.0)
    return float(np.max(dev[~np.eye(k, dtype=bool)]))


def _orthogonal_rate(gains_row, schedule, powers, noise_var):
    """sum_{m,c} schedule[m,c] log2(1 + gain[m] p[c] / noise).

    Same arithmetic as metrics.ofdma_rate but without the one-subcarrier-
    per-stream check, so relaxed/partial schedules can be evaluated.
    """
    gains_row = np.asarray(gains_row, dtype=float)
    powers = np.asarray(powers, dtype=float)
    per = np.log2(1.0 + gains_row[:, None] * powers[None, :] / noise_var)
    return float(np.sum(np.asarray(schedule, dtype=float) * per))


# ---------------------------------------------------------------- scenarios


@dataclass
class NomaSumRate:
    """Downlink superposed single-carrier-per-user rate maximization.

    Attributes:
        subcarrier_gains: [M, K] per-subcarrier channel power gains.
        noise_vars: [K] receiver noise powers.
        power_budget: total transmit power limit.
        min_rates: [K] per-user QoS rates.
    """

    subcarrier_gains: np.ndarray
    noise_vars: np.ndarray
    power_budget: float
    min_rates: np.ndarray


def _noma_user_rates(data, powers, schedule):
    gains = data.subcarrier_gains
    m_sub, k_users = gains.shape
    noise = np.broadcast_to(np.asarray(data.noise_vars, float), (k_users,))
    rates = np.zeros(k_users)
    for m in range(m_sub):
        weights = np.asarray(schedule[m], dtype=float)
        on = np.flatnonzero(weights > 1e-9)
        if on.size == 0:
            continue
        sub = metrics.noma_subcarrier_rates(gains[m, on], powers[on],
                                            noise[on])
        rates[on] += weights[on] * sub
    return rates


def _noma_objective(data, x):
    return _noma_user_rates(data, x["powers"], x["schedule"]).sum()


def _noma_residuals(data, x):
    powers = np.asarray(x["powers"], dtype=float)
    schedule = np.asarray(x["schedule"], dtype=float)
    rates = _noma_user_rates(data, powers, schedule)
    return [
        powers.sum() - data.power_budget,
        float(np.max(np.abs(schedule.sum(axis=0) - 1.0))),
        float(np.max(np.asarray(data.min_rates, float) - rates)),
        _binary_residual(schedule),
    ]


def _build_noma(data):
    gains = np.asarray(data.subcarrier_gains, dtype=float)
    if gains.ndim != 2:
        raise ValueError("subcarrier_gains must be [subcarriers, users]")
    m_sub, k_users = gains.shape
    np.broadcast_to(np.asarray(data.min_rates, float), (k_users,))
    data.subcarrier_gains = gains
    return ProblemInstance(
        kind="NomaSumRate", sense=MAX_SENSE, data=data,
        layout=[VarBlock("powers", (k_users,), "continuous", lower=0.0),
                VarBlock("schedule", (m_sub, k_users), "binary")],
        constraint_names=["C1", "C2", "C3", "C4"],
        objective_fn=_noma_objective, residual_fn=_noma_residuals,
        has_binaries=True, monotone_in=("powers",))


@dataclass
class OfdmaPowerMin:
    """Uplink orthogonal-subcarrier transmit power minimization.

    Attributes:
        subcarrier_gains: [K, M] channel power gains per user/subcarrier.
        noise_var: noise power at the receiver.
        power_budgets: [K] per-user power limits.
        min_rates: [K] per-user QoS rates.
        streams: [K] data streams per user (default one each).
    """

    subcarrier_gains: np.ndarray
    noise_var: float
    power_budgets: np.ndarray
    min_rates: np.ndarray
    streams: np.ndarray = None

    def stream_users(self):
        return np.repeat(np.arange(len(self.streams)), self.streams)


def _ofdma_user_rates(data, powers, schedule):
    users = data.stream_users()
    k_users = data.subcarrier_gains.shape[0]
    rates = np.zeros(k_users)
    for u in range(k_users):
        cols = np.flatnonzero(users == u)
        rates[u] = _orthogonal_rate(data.subcarrier_gains[u],
                                    schedule[:, cols], powers[cols],
                                    data.noise_var)
    return rates


def _ofdma_objective(data, x):
    return float(np.sum(x["powers"]))


def _ofdma_residuals(data, x):
    powers = np.asarray(x["powers"], dtype=float)
    schedule = np.asarray(x["schedule"], dtype=float)
    users = data.stream_users()
    budgets = np.broadcast_to(np.asarray(data.power_budgets, float),
                              (data.subcarrier_gains.shape[0],))
    per_user = np.array([powers[users == u].sum()
                         for u in range(len(budgets))])
    rates = _ofdma_user_rates(data, powers, schedule)
    return [
        float(np.max(per_user - budgets)),
        float(np.max(schedule.sum(axis=1) - 1.0)),
        float(np.max(np.asarray(data.min_rates, float) - rates)),
        _binary_residual(schedule),
    ]


def _build_ofdma(data):
    gains = np.asarray(data.subcarrier_gains, dtype=float)
    if gains.ndim != 2:
        raise ValueError("subcarrier_gains must be [users, subcarriers]")
    k_users, m_sub = gains.shape
    if data.streams is None:
        data.streams = np.ones(k_users, dtype=int)
    data.streams = np.asarray(data.streams, dtype=int)
    if data.streams.shape != (k_users,) or np.any(data.streams < 1):
        raise ValueError("streams must give a positive count per user")
    data.subcarrier_gains = gains
    total = int(data.streams.sum())
    return ProblemInstance(
        kind="OfdmaPowerMin", sense=MIN_SENSE, data=data,
        layout=[VarBlock("powers", (total,), "continuous", lower=0.0),
                VarBlock("schedule", (m_sub, total), "binary")],
        constraint_names=["C1", "C2", "C3", "C4"],
        objective_fn=_ofdma_objective, residual_fn=_ofdma_residuals,
        has_binaries=True, convex_when_fixed=("schedule",))


@dataclass
class RsmaRobust:
    """Worst-case rate-splitting sum rate under bounded channel errors.

    Attributes:
        channel_estimates: [K, N] estimated channels.
        error_radii: [K] estimation-error ball radii.
        noise_vars: [K] noise powers.
        power_budget: total beam power limit.
        min_rates: [K] per-user QoS on common+private rate.
    """

    channel_estimates: np.ndarray
    error_radii: np.ndarray
    noise_vars: np.ndarray
    power_budget: float
    min_rates: np.ndarray


def _rsma_worst_rates(data, x):
    return metrics.worst_case_rsma_rates(
        data.channel_estimates, data.error_radii,
        x["common_beam"], x["private_beams"], data.noise_vars)


def _rsma_objective(data, x):
    rc, rp = _rsma_worst_rates(data, x)
    return rp.sum() + float(np.sum(x["common_alloc"]))


def _rsma_residuals(data, x):
    rc, rp = _rsma_worst_rates(data, x)
    alloc = np.asarray(x["common_alloc"], dtype=float)
    power = float(np.sum(np.abs(x["private_beams"]) ** 2)
                  + np.sum(np.abs(x["common_beam"]) ** 2))
    return [
        alloc.sum() - float(np.min(rc)),
        power - data.power_budget,
        float(np.max(np.asarray(data.min_rates, float) - (rp + rc))),
        float(np.max(-alloc)),
    ]


def _build_rsma(data):
    est = np.asarray(data.channel_estimates)
    if est.ndim != 2:
        raise ValueError("channel_estimates must be [users, antennas]")
    k_users, n_ant = est.shape
    data.channel_estimates = est
    np.broadcast_to(np.asarray(data.error_radii, float), (k_users,))
    return ProblemInstance(
        kind="RsmaRobust", sense=MAX_SENSE, data=data,
        layout=[VarBlock("common_beam", (n_ant,), "complex"),
                VarBlock("private_beams", (n_ant, k_users), "complex"),
                VarBlock("common_alloc", (k_users,), "continuous")],
        constraint_names=["C1", "C2", "C3", "C4"],
        objective_fn=_rsma_objective, residual_fn=_rsma_residuals,
        convex_when_fixed=("common_beam", "private_beams"))


PHASE_CODEBOOK_BITS = 2


def phase_codebook(bits=PHASE_CODEBOOK_BITS):
    """Uniformly spaced reflection phases (radians) for a b-bit surface."""
    n = 1 << bits
    return 2.0 * np.pi * np.arange(n) / n


@dataclass
class IrsSumRate:
    """Sum-rate maximization with a reflecting surface and SIC ordering.

    Attributes:
        h_direct: [K, N] direct channels.
        bs_irs: [N, M] BS-to-surface matrix.
        irs_user: [K, M] surface-to-user channels.
        noise_vars: [K] noise powers.
        power_budget: total beam power limit.
        codebook_bits: phase resolution; None means continuous phases.
    """

    h_direct: np.ndarray
    bs_irs: np.ndarray
    irs_user: np.ndarray
    noise_vars: np.ndarray
    power_budget: float
    codebook_bits: int = PHASE_CODEBOOK_BITS


def _irs_objective(data, x):
    sinr = metrics.irs_sinr(data.h_direct, data.bs_irs, data.irs_user,
                            x["phases"], x["beams"], x["order_gates"],
                            data.noise_vars)
    return float(np.sum(np.log2(1.0 + sinr)))


def _phase_codebook_residual(phases, bits):
    if bits is None:
        return 0.0   # continuous phases: unit modulus by construction
    book = phase_codebook(bits)
    # wrapped distance to the nearest codebook angle
    diff = np.angle(np.exp(1j * (np.asarray(phases, float)[:, None]
                                 - book[None, :])))
    return float(np.max(np.min(np.abs(diff), axis=1)))


def _irs_residuals(data, x):
    power = float(np.sum(np.abs(x["beams"]) ** 2))
    return [
        power - data.power_budget,
        _phase_codebook_residual(x["phases"], data.codebook_bits),
        _binary_residual(x["order_gates"]),
        _pairwise_order_residual(x["order_gates"]),
    ]


def _build_irs(data):
    hd = np.asarray(data.h_direct)
    f = np.asarray(data.bs_irs)
    hr = np.asarray(data.irs_user)
    if hd.ndim != 2 or f.ndim != 2 or hr.ndim != 2:
        raise ValueError("channel blocks must be matrices")
    k_users, n_ant = hd.shape
    if f.shape[0] != n_ant or hr.shape != (k_users, f.shape[1]):
        raise ValueError("direct/surface channel dimensions disagree")
    data.h_direct, data.bs_irs, data.irs_user = hd, f, hr
    m_ps = f.shape[1]
    return ProblemInstance(
        kind="IrsSumRate", sense=MAX_SENSE, data=data,
        layout=[VarBlock("beams", (n_ant, k_users), "complex"),
                VarBlock("phases", (m_ps,), "continuous"),
                VarBlock("order_gates", (k_users, k_users), "binary")],
        constraint_names=["C1", "C2", "C3", "C4"],
        objective_fn=_irs_objective, residual_fn=_irs_residuals,
        has_binaries=True)


@dataclass
class UavPowerMin:
    """Single-slot aerial BS power minimization given the previous state.

    Attributes:
        prev_position: [3] previous-slot position (m).
        prev_velocity: [3] previous-slot velocity (m/s).
        user_positions: [K, 3] user locations.
        panel_nx, panel_ny: antenna panel geometry.
        spacing_m, carrier_hz: element spacing and carrier.
        noise_vars: [K] noise powers.
        antenna_power_limits: [N] per-antenna power caps.
        sinr_targets: [K] required SINRs.
        max_accel: acceleration limit (m/s^2).
        slot_s: slot duration (s).
        aero: AeroParams propulsion model.
        circuit_power: per-antenna-chain circuit power.
    """

    prev_position: np.ndarray
    prev_velocity: np.ndarray
    user_positions: np.ndarray
    panel_nx: int
    panel_ny: int
    spacing_m: float
    carrier_hz: float
    noise_vars: np.ndarray
    antenna_power_limits: np.ndarray
    sinr_targets: np.ndarray
    max_accel: float
    slot_s: float
    aero: AeroParams
    circuit_power: float


def _uav_channels(data, position):
    return np.stack([
        uav_user_channel(position, data.user_positions[k], data.panel_nx,
                         data.panel_ny, data.spacing_m, data.carrier_hz)
        for k in range(data.user_positions.shape[0])
    ])


def _uav_objective(data, x):
    n_ant = data.panel_nx * data.panel_ny
    beam_power = float(np.sum(np.abs(x["beams"]) ** 2))
    aero = metrics.uav_aero_power(x["velocity"], data.aero)
    return beam_power + aero + n_ant * data.circuit_power


def _uav_residuals(data, x):
    beams = np.asarray(x["beams"])
    pos = np.asarray(x["position"], dtype=float)
    vel = np.asarray(x["velocity"], dtype=float)
    gates = np.asarray(x["order_gates"], dtype=float)
    k_users = data.user_positions.shape[0]
    noise = np.broadcast_to(np.asarray(data.noise_vars, float), (k_users,))
    targets = np.broadcast_to(np.asarray(data.sinr_targets, float),
                              (k_users,))

    per_antenna = np.sum(np.abs(beams) ** 2, axis=1)
    channels = _uav_channels(data, pos)
    power = np.abs(channels.conj() @ beams) ** 2          # [K, K]
    gate = gates * (1.0 - np.eye(k_users))
    interference = np.sum(gate * power, axis=1)
    sinr_slack = targets * (interference + noise) - np.diag(power)

    limits = np.broadcast_to(np.asarray(data.antenna_power_limits, float),
                             per_antenna.shape)
    return [
        float(np.max(per_antenna - limits)),
        float(np.max(sinr_slack)),
        float(np.linalg.norm(vel - data.prev_velocity)
              - data.max_accel * data.slot_s),
        abs(float(np.linalg.norm(vel)) * data.slot_s
            - float(np.linalg.norm(pos - data.prev_position))),
        _binary_residual(gates),
        _pairwise_order_residual(gates),
    ]


def _build_uav(data):
    users = np.asarray(data.user_positions, dtype=float)
    if users.ndim != 2 or users.shape[1] != 3:
        raise ValueError("user_positions must be [K, 3]")
    data.user_positions = users
    data.prev_position = np.asarray(data.prev_position, dtype=float)
    data.prev_velocity = np.asarray(data.prev_velocity, dtype=float)
    k_users = users.shape[0]
    n_ant = data.panel_nx * data.panel_ny
    return ProblemInstance(
        kind="UavPowerMin", sense=MIN_SENSE, data=data,
        layout=[VarBlock("beams", (n_ant, k_users), "complex"),
                VarBlock("position", (3,), "continuous"),
                VarBlock("velocity", (3,), "continuous"),
                VarBlock("order_gates", (k_users, k_users), "binary")],
        constraint_names=["C1", "C2", "C3", "C4", "C5", "C6"],
        objective_fn=_uav_objective, residual_fn=_uav_residuals,
        has_binaries=True, sinr_constrained=True)


@dataclass
class MfaPowerMin:
    """Transmit power minimization with selectable antenna positions.

    Attributes:
        candidates: [K, N*Q] per-user channels at every candidate position.
        picks_per_port: Q candidate positions per port.
        noise_vars: [K] noise powers.
        sinr_targets: [K] required SINRs.
    """

    candidates: np.ndarray
    picks_per_port: int
    noise_vars: np.ndarray
    sinr_targets: np.ndarray


def _mfa_objective(data, x):
    return float(np.sum(np.abs(x["beams"]) ** 2))


def _mfa_residuals(data, x):
    cands = data.candidates
    k_users = cands.shape[0]
    q = data.picks_per_port
    n_ports = cands.shape[1] // q
    lifted = np.asarray(x["lifted"])
    select = np.asarray(x["select"], dtype=float)
    noise = np.broadcast_to(np.asarray(data.noise_vars, float), (k_users,))
    targets = np.broadcast_to(np.asarray(data.sinr_targets, float),
                              (k_users,))

    received = cands @ lifted                 # [K, K], transpose model
    power = np.abs(received) ** 2
    interference = power.sum(axis=1) - np.diag(power)
    sinr_slack = targets * (interference + noise) - np.diag(power)

    # selection matrix from the (possibly fractional) one-hot rows
    t = np.zeros((n_ports * q, n_ports))
    for n in range(n_ports):
        t[n * q:(n + 1) * q, n] = select[n]
    coupling = float(np.max(np.abs(lifted - t @ np.asarray(x["beams"]))))

    return [
        float(np.max(sinr_slack)),
        _binary_residual(select),
        float(np.max(np.abs(select.sum(axis=1) - 1.0))),
        coupling,
    ]


def _build_mfa(data):
    cands = np.asarray(data.candidates)
    if cands.ndim != 2 or cands.shape[1] % data.picks_per_port:
        raise ValueError("candidates must be [K, ports*picks_per_port]")
    data.candidates = cands
    k_users = cands.shape[0]
    q = data.picks_per_port
    n_ports = cands.shape[1] // q
    return ProblemInstance(
        kind="MfaPowerMin", sense=MIN_SENSE, data=data,
        layout=[VarBlock("beams", (n_ports, k_users), "complex"),
                VarBlock("select", (n_ports, q), "binary"),
                VarBlock("lifted", (n_ports * q, k_users), "complex")],
        constraint_names=["C1", "C2", "C3", "C4"],
        objective_fn=_mfa_objective, residual_fn=_mfa_residuals,
        has_binaries=True, sinr_constrained=True)


@dataclass
class IsacCommCentric:
    """Sum-rate maximization under a sensing beampattern constraint.

    Attributes:
        comm_channels: [K, N] communication channel rows (transpose model).
        symbols: [K, L] transmitted symbol block.
        target_pattern: [N, L] desired sensing transmit block.
        noise_vars: [K] noise powers.
        power_budget: average transmit power limit.
        pattern_tolerance: maximum beampattern MSE.
    """

    comm_channels: np.ndarray
    symbols: np.ndarray
    target_pattern: np.ndarray
    noise_vars: np.ndarray
    power_budget: float
    pattern_tolerance: float


def _isac_objective(data, x):
    rates, _ = metrics.isac_metrics(x["beams"], data.symbols,
                                    data.comm_channels, data.target_pattern,
                                    data.noise_vars)
    return float(rates.sum())


def _isac_residuals(data, x):
    beams = np.asarray(x["beams"])
    tx = beams @ data.symbols
    block_len = data.symbols.shape[1]
    avg_power = float(np.sum(np.abs(tx) ** 2)) / block_len
    _, mse = metrics.isac_metrics(beams, data.symbols, data.comm_channels,
                                  data.target_pattern, data.noise_vars)
    return [avg_power - data.power_budget, mse - data.pattern_tolerance]


def _build_isac(data):
    h = np.asarray(data.comm_channels)
    s = np.asarray(data.symbols)
    x0 = np.asarray(data.target_pattern)
    if h.ndim != 2 or s.ndim != 2 or x0.ndim != 2:
        raise ValueError("channels, symbols and pattern must be matrices")
    k_users, n_ant = h.shape
    if s.shape[0] != k_users or x0.shape != (n_ant, s.shape[1]):
        raise ValueError("symbol/pattern dimensions disagree")
    data.comm_channels, data.symbols, data.target_pattern = h, s, x0
    return ProblemInstance(
        kind="IsacCommCentric", sense=MAX_SENSE, data=data,
        layout=[VarBlock("beams", (n_ant, k_users), "complex")],
        constraint_names=["C1", "C2"],
        objective_fn=_isac_objective, residual_fn=_isac_residuals)


@dataclass
class JcacEnergyMin:
    """Offloading energy minimization with communication QoS.

    Attributes:
        subcarrier_gains: [K, M] channel power gains.
        noise_var: noise power.
        min_rates: [K] communication-rate QoS.
        task_bits: [K] total task sizes (bits).
        comm_streams: [K] communication streams per user.
        offload_streams: [K] offloading streams per user.
        capacitance: [K] effective switched-capacitance coefficients.
        cycles_per_bit: [K] CPU cycles per locally computed bit.
        frame_s: computation deadline (s).
        slot_s: per-stream transmission time (s).
    """

    subcarrier_gains: np.ndarray
    noise_var: float
    min_rates: np.ndarray
    task_bits: np.ndarray
    comm_streams: np.ndarray
    offload_streams: np.ndarray
    capacitance: np.ndarray
    cycles_per_bit: np.ndarray
    frame_s: float
    slot_s: float

    def stream_users(self):
        totals = np.asarray(self.comm_streams) + np.asarray(
            self.offload_streams)
        return np.repeat(np.arange(len(totals)), totals)

    def user_columns(self, user):
        """(comm_cols, offload_cols) index arrays for one user."""
        totals = np.asarray(self.comm_streams) + np.asarray(
            self.offload_streams)
        start = int(np.sum(totals[:user]))
        split = start + int(self.comm_streams[user])
        return (np.arange(start, split),
                np.arange(split, start + int(totals[user])))


def _jcac_rates(data, powers, schedule):
    k_users = data.subcarrier_gains.shape[0]
    comm = np.zeros(k_users)
    off = np.zeros(k_users)
    for u in range(k_users):
        ccols, ocols = data.user_columns(u)
        comm[u] = _orthogonal_rate(data.subcarrier_gains[u],
                                   schedule[:, ccols], powers[ccols],
                                   data.noise_var)
        off[u] = _orthogonal_rate(data.subcarrier_gains[u],
                                  schedule[:, ocols], powers[ocols],
                                  data.noise_var)
    return comm, off


def _jcac_objective(data, x):
    powers = np.asarray(x["powers"], dtype=float)
    per_user = [powers[np.concatenate(data.user_columns(u))]
                for u in range(data.subcarrier_gains.shape[0])]
    return metrics.jcac_energy(data.capacitance, data.cycles_per_bit,
                               x["local_bits"], data.frame_s, per_user,
                               data.slot_s)


def _jcac_residuals(data, x):
    powers = np.asarray(x["powers"], dtype=float)
    schedule = np.asarray(x["schedule"], dtype=float)
    bits = np.asarray(x["local_bits"], dtype=float)
    tasks = np.asarray(data.task_bits, dtype=float)
    comm, off = _jcac_rates(data, powers, schedule)
    return [
        float(np.max(np.asarray(data.min_rates, float) - comm)),
        float(np.max(tasks - bits - off)),
        float(np.max(-powers)),
        float(np.max(np.maximum(-bits, bits - tasks))),
        _binary_residual(schedule),
        float(np.max(schedule.sum(axis=1) - 1.0)),
    ]


def _build_jcac(data):
    gains = np.asarray(data.subcarrier_gains, dtype=float)
    if gains.ndim != 2:
        raise ValueError("subcarrier_gains must be [users, subcarriers]")
    k_users, m_sub = gains.shape
    data.subcarrier_gains = gains
    data.comm_streams = np.asarray(data.comm_streams, dtype=int)
    data.offload_streams = np.asarray(data.offload_streams, dtype=int)
    if data.comm_streams.shape != (k_users,) \
            or data.offload_streams.shape != (k_users,):
        raise ValueError("stream counts must be per-user")
    total = int((data.comm_streams + data.offload_streams).sum())
    return ProblemInstance(
        kind="JcacEnergyMin", sense=MIN_SENSE, data=data,
        layout=[VarBlock("powers", (total,), "continuous"),
                VarBlock("schedule", (m_sub, total), "binary"),
                VarBlock("local_bits", (k_users,), "continuous")],
        constraint_names=["C1", "C2", "C3", "C4", "C5", "C6"],
        objective_fn=_jcac_objective, residual_fn=_jcac_residuals,
        has_binaries=True, convex_when_fixed=("schedule",))


_BUILDERS = {
    NomaSumRate: _build_noma,
    OfdmaPowerMin: _build_ofdma,
    RsmaRobust: _build_rsma,
    IrsSumRate: _build_irs,
    UavPowerMin: _build_uav,
    MfaPowerMin: _build_mfa,
    IsacCommCentric: _build_isac,
    JcacEnergyMin: _build_jcac,
}


def build_problem(scenario):
    """Turn a scenario dataclass into a solver-consumable instance."""
    builder = _BUILDERS.get(type(scenario))
    if builder is None:
        raise TypeError("unknown problem kind: %r" % type(scenario).__name__)
    return builder(scenario)


def big_m_constant(power_budget, channel_gains, safety=10.0):
    """Big-M bound for product linearizations: budget * max gain^2 * safety."""
    peak = float(np.max(np.abs(np.asarray(channel_gains)) ** 2))
    return float(power_budget) * peak * safety
