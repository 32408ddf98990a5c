"""Monte-Carlo harness for the reflecting-surface NOMA downlink.

Sweeps maximum transmit power over paired channel trials and reports,
per (scheme, power, trial), the achieved sum rate plus solver
diagnostics.  Five schemes share one inner allocation kernel
(beams.best_allocation), so their values are comparable configuration
by configuration:

* ``optimal``      certified enumeration over decoding orders and the
                   full discrete phase codebook (desk-scale only);
* ``suboptimal``   alternating search: per-order coordinate descent
                   over surface phases from a fixed set of starts;
* ``baseline1``    random SIC decoding order, phases still optimized;
* ``baseline2``    random codebook phases, order still optimized;
* ``baseline3``    no reflecting surface at all.

A robust variant scores the same searches by a worst-case lower bound
built from norm-bounded channel-estimation errors and then reports the
rate achieved at the true (perturbed) channel.

Determinism: the channel draw for trial t depends only on
(seed, trial), so every scheme and power level sees the same
realization; scheme-internal randomness (baseline draws, error
realizations) is keyed by (seed, trial, scheme, power).  Rows are
sorted by (scheme, power, trial), which makes serial and parallel
execution byte-identical.

``runtime_ms`` is a deterministic work proxy -- kernel configurations
scored times one microsecond -- so that reports reproduce exactly
across machines; wall-clock time is the caller's concern.
"""

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .beams import batch_best_values, best_allocation
from .channels import gen_rician, perturb_csi
from .metrics import alpha_from_order, miso_sinr
from .numerics import Rng, db_to_linear
from .problems import IrsSumRate, build_problem, phase_codebook

CSV_HEADER = ("scheme,p_max_dbm,trial,sum_rate_bits_s_hz,"
              "status,iterations,runtime_ms,gap")

SCHEMES = ("optimal", "suboptimal", "baseline1", "baseline2", "baseline3")

# certified enumeration refuses configurations beyond this many
# (order, phase) combinations
ENUMERATION_LIMIT = 5_000_000

_CHUNK = 16384
_INNER_RADIUS_M = 5.0


@dataclass
class ScenarioConfig:
    """Sector-cell scenario with a reflecting surface at the edge.

    Defaults follow the simulated setup: an 8-antenna BS serving 4
    users placed uniformly in a 120-degree, 50 m sector (5 m inner
    radius), a 16-element 2-bit surface 50 m from the BS, pathloss
    exponent 3 with -30 dB reference gain at 1 m, Rician factor 1,
    and -117 dBm noise per user.  ``uncertainty_pct`` is the squared
    normalized estimation error in percent (10 means delta^2 =
    0.1 ||h||^2 on each link); 0 disables the robust variant.
    """

    n_antennas: int = 8
    k_users: int = 4
    m_irs: int = 16
    cell_radius_m: float = 50.0
    bs_irs_dist_m: float = 50.0
    phase_bits: int = 2
    pathloss_exp: float = 3.0
    rician_k: float = 1.0
    noise_dbm: float = -117.0
    ref_gain_db: float = -30.0
    carrier_hz: float = 2e9     # documentation only; rates are per Hz
    p_max_dbm_list: tuple = (20.0, 25.0, 30.0, 35.0)
    trials: int = 100
    seed: int = 0
    uncertainty_pct: float = 0.0
    schemes: tuple = SCHEMES

    def validate(self):
        if self.n_antennas < 1 or self.k_users < 1 or self.m_irs < 1:
            raise ValueError("antennas, users, and surface elements must "
                             "be positive")
        if not 0 <= self.uncertainty_pct < 100:
            raise ValueError("uncertainty_pct must lie in [0, 100)")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if not self.p_max_dbm_list:
            raise ValueError("p_max_dbm_list must not be empty")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown:
            raise ValueError("unknown schemes: %s" % ", ".join(sorted(unknown)))
        if self.cell_radius_m <= _INNER_RADIUS_M:
            raise ValueError("cell radius must exceed the %g m inner "
                             "exclusion" % _INNER_RADIUS_M)
        return self


@dataclass
class ScenarioDraw:
    """One channel realization: direct, BS-surface, and surface-user."""

    h_direct: np.ndarray        # [K, N]
    bs_irs: np.ndarray          # [N, M]
    irs_user: np.ndarray        # [K, M]
    noise: np.ndarray           # [K] linear mW


@dataclass
class SweepReport:
    """Rows of a power sweep, sorted by (scheme, power, trial)."""

    config: ScenarioConfig
    rows: list = field(default_factory=list)

    def to_csv(self):
        """Render the exact CSV byte content (UTF-8, \\n newlines)."""
        lines = [CSV_HEADER]
        for row in self.rows:
            lines.append(",".join([
                row["scheme"],
                _fmt(row["p_max_dbm"]),
                "%d" % row["trial"],
                _fmt(row["sum_rate_bits_s_hz"]),
                row["status"],
                "%d" % row["iterations"],
                _fmt(row["runtime_ms"]),
                "" if row["gap"] is None else _fmt(row["gap"]),
            ]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _fmt(x):
    return "%.9g" % float(x)


# ----------------------------------------------------------- scenario draw


def _draw_scenario(config, rng):
    """Place users in the sector annulus and draw all Rician links."""
    k, n, m = config.k_users, config.n_antennas, config.m_irs
    angles = rng.uniform(-np.pi / 3, np.pi / 3, shape=k)
    # uniform over the annulus area, not the radius
    radii = np.sqrt(rng.uniform(_INNER_RADIUS_M ** 2,
                                config.cell_radius_m ** 2, shape=k))
    users = np.stack([radii * np.cos(angles), radii * np.sin(angles)],
                     axis=1)
    surface = np.array([config.bs_irs_dist_m, 0.0])
    d_direct = radii
    d_reflect = np.linalg.norm(users - surface[None, :], axis=1)

    h_direct = np.vstack([
        gen_rician(rng, 1, n, d_direct[u], config.pathloss_exp,
                   config.rician_k, ref_gain_db=config.ref_gain_db)
        for u in range(k)])
    bs_irs = gen_rician(rng, n, m, config.bs_irs_dist_m,
                        config.pathloss_exp, config.rician_k,
                        ref_gain_db=config.ref_gain_db)
    irs_user = np.vstack([
        gen_rician(rng, 1, m, d_reflect[u], config.pathloss_exp,
                   config.rician_k, ref_gain_db=config.ref_gain_db)
        for u in range(k)])
    noise = np.full(k, float(db_to_linear(config.noise_dbm)))
    return ScenarioDraw(h_direct=h_direct, bs_irs=bs_irs,
                        irs_user=irs_user, noise=noise)


def scenario_instance(config, draw, p_max_dbm):
    """Solver-layer view of one draw as an IrsSumRate instance."""
    return build_problem(IrsSumRate(
        h_direct=draw.h_direct, bs_irs=draw.bs_irs,
        irs_user=draw.irs_user, noise_vars=draw.noise,
        power_budget=float(db_to_linear(p_max_dbm)),
        codebook_bits=config.phase_bits))


def _uncertainty(config, draw):
    """Error-ball triple for the kernel's worst-case score, or None."""
    if config.uncertainty_pct <= 0:
        return None
    scale = np.sqrt(config.uncertainty_pct / 100.0)
    return (draw.bs_irs,
            scale * np.linalg.norm(draw.h_direct, axis=1),
            scale * np.linalg.norm(draw.irs_user, axis=1))


def _draw_truth(config, draw, rng):
    """True (perturbed) channels inside the per-user error balls."""
    scale = np.sqrt(config.uncertainty_pct / 100.0)
    direct = np.vstack([
        perturb_csi(rng, draw.h_direct[u],
                    scale * np.linalg.norm(draw.h_direct[u]))
        for u in range(config.k_users)])
    reflected = np.vstack([
        perturb_csi(rng, draw.irs_user[u],
                    scale * np.linalg.norm(draw.irs_user[u]))
        for u in range(config.k_users)])
    return direct, reflected


def _achieved_rate(draw, truth, phases, beams, gate):
    """Sum rate at the true channel for a chosen configuration."""
    direct, reflected = truth
    if phases is None:
        effective = direct
    else:
        twist = np.exp(1j * np.asarray(phases, dtype=float))
        effective = direct + reflected * twist[None, :] @ draw.bs_irs.T
    sinr = miso_sinr(effective, beams, draw.noise, alpha=gate)
    return float(np.sum(np.log2(1.0 + sinr)))


def _effective_batch(draw, phase_rows):
    """Effective channels for a stack of phase vectors: [C, M] -> [C, K, N]."""
    twist = np.exp(1j * np.asarray(phase_rows, dtype=float))
    mixed = twist[:, None, :] * draw.irs_user[None, :, :]
    return draw.h_direct[None, :, :] + np.einsum(
        "nm,ckm->ckn", draw.bs_irs, mixed)


# ----------------------------------------------------------------- schemes


def _orders(k_users):
    return [np.array(p) for p in itertools.permutations(range(k_users))]


def _internal_rng(trial_rng, scheme, p_dbm):
    return trial_rng.split("scheme", scheme, "power", _fmt(p_dbm))


def _finish_row(config, draw, trial_rng, scheme, p_dbm, order, phases,
                p_mw, unc, status, scored, certified):
    """Re-solve the winning configuration and assemble one report row."""
    gate = alpha_from_order(order)
    if phases is None:
        effective = draw.h_direct
    else:
        effective = _effective_batch(draw, np.asarray(phases)[None])[0]
    resolved, beams = best_allocation(effective, gate, p_mw, draw.noise,
                                      uncertainty=unc)
    if unc is None:
        rate = resolved
    else:
        internal = _internal_rng(trial_rng, scheme, p_dbm)
        _consume_scheme_draws(internal, scheme, config)
        truth = _draw_truth(config, draw, internal)
        rate = _achieved_rate(draw, truth, phases, beams, gate)
    return {"p_max_dbm": float(p_dbm), "sum_rate_bits_s_hz": rate,
            "status": status, "iterations": int(scored),
            "runtime_ms": (scored + 1) * 1e-3,
            "gap": 0.0 if certified else None}


def _consume_scheme_draws(rng, scheme, config):
    """Replay a baseline's decision draws so the error draw lines up.

    The perturbation must come after the scheme's own random choices on
    the same stream, whether the row is built here or in the scheme
    body.
    """
    if scheme == "baseline1":
        rng.permutation(config.k_users)
    elif scheme == "baseline2":
        rng.integers(0, 1 << config.phase_bits, shape=config.m_irs)


def _run_optimal(config, draw, trial_rng, powers_dbm):
    """Certified enumeration over decoding orders and phase codebooks."""
    codebook = phase_codebook(config.phase_bits)
    orders = _orders(config.k_users)
    n_combos = len(codebook) ** config.m_irs
    if n_combos * len(orders) > ENUMERATION_LIMIT:
        raise ValueError(
            "certified enumeration covers %d configurations; reduce "
            "k_users or m_irs (desk-scale scheme)" % (n_combos * len(orders)))
    unc = _uncertainty(config, draw)
    powers_mw = [float(db_to_linear(p)) for p in powers_dbm]
    combos = np.array(list(itertools.product(codebook,
                                             repeat=config.m_irs)))
    best_val = np.full(len(powers_mw), -np.inf)
    best_combo = np.zeros(len(powers_mw), dtype=int)
    best_order = np.zeros(len(powers_mw), dtype=int)
    for start in range(0, n_combos, _CHUNK):
        effective = _effective_batch(draw, combos[start:start + _CHUNK])
        for o_id, order in enumerate(orders):
            gate = alpha_from_order(order)
            for p_id, p_mw in enumerate(powers_mw):
                vals = batch_best_values(effective, gate, p_mw, draw.noise,
                                         uncertainty=unc)
                c = int(np.argmax(vals))
                if vals[c] > best_val[p_id]:
                    best_val[p_id] = vals[c]
                    best_combo[p_id] = start + c
                    best_order[p_id] = o_id
    scored = len(orders) * n_combos
    rows = []
    for p_id, (p_dbm, p_mw) in enumerate(zip(powers_dbm, powers_mw)):
        rows.append(_finish_row(
            config, draw, trial_rng, "optimal", p_dbm,
            orders[best_order[p_id]], combos[best_combo[p_id]], p_mw,
            unc, "optimal", scored, certified=True))
    return rows


def _descend_phases(draw, gate, p_mw, noise, codebook, start, unc):
    """Greedy per-element codebook descent; returns (phases, value, cost)."""
    phases = np.asarray(start, dtype=float).copy()
    scored = 0

    def score(rows):
        nonlocal scored
        vals = batch_best_values(_effective_batch(draw, rows), gate, p_mw,
                                 noise, uncertainty=unc)
        scored += vals.size
        return vals

    current = float(score(phases[None])[0])
    improved = True
    while improved:
        improved = False
        for m in range(phases.size):
            cand = np.repeat(phases[None], len(codebook), axis=0)
            cand[:, m] = codebook
            vals = score(cand)
            pick = int(np.argmax(vals))
            if vals[pick] > current:
                phases[m] = codebook[pick]
                current = float(vals[pick])
                improved = True
    return phases, current, scored


def _best_descent(config, draw, gate, p_mw, unc):
    """Coordinate descent from every constant-phase start; keep the best."""
    codebook = phase_codebook(config.phase_bits)
    best = (-np.inf, None)
    scored = 0
    for level in codebook:
        start = np.full(config.m_irs, level)
        phases, value, cost = _descend_phases(draw, gate, p_mw, draw.noise,
                                              codebook, start, unc)
        scored += cost
        if value > best[0]:
            best = (value, phases)
    return best[0], best[1], scored


def _run_suboptimal(config, draw, trial_rng, powers_dbm):
    """Alternating search: phase descent inside an order enumeration."""
    unc = _uncertainty(config, draw)
    orders = _orders(config.k_users)
    rows = []
    for p_dbm in powers_dbm:
        p_mw = float(db_to_linear(p_dbm))
        scored = 0
        best = (-np.inf, None, None)
        for order in orders:
            gate = alpha_from_order(order)
            value, phases, cost = _best_descent(config, draw, gate, p_mw,
                                                unc)
            scored += cost
            if value > best[0]:
                best = (value, order, phases)
        rows.append(_finish_row(config, draw, trial_rng, "suboptimal",
                                p_dbm, best[1], best[2], p_mw, unc,
                                "feasible", scored, certified=False))
    return rows


def _run_baseline1(config, draw, trial_rng, powers_dbm):
    """Random SIC decoding order; phases and beams still optimized."""
    unc = _uncertainty(config, draw)
    rows = []
    for p_dbm in powers_dbm:
        p_mw = float(db_to_linear(p_dbm))
        internal = _internal_rng(trial_rng, "baseline1", p_dbm)
        order = np.asarray(internal.permutation(config.k_users))
        gate = alpha_from_order(order)
        value, phases, scored = _best_descent(config, draw, gate, p_mw,
                                              unc)
        rows.append(_finish_row(config, draw, trial_rng, "baseline1",
                                p_dbm, order, phases, p_mw, unc,
                                "feasible", scored, certified=False))
    return rows


def _run_baseline2(config, draw, trial_rng, powers_dbm):
    """Random codebook phases; decoding order and beams still optimized."""
    unc = _uncertainty(config, draw)
    codebook = phase_codebook(config.phase_bits)
    orders = _orders(config.k_users)
    rows = []
    for p_dbm in powers_dbm:
        p_mw = float(db_to_linear(p_dbm))
        internal = _internal_rng(trial_rng, "baseline2", p_dbm)
        phases = codebook[np.asarray(
            internal.integers(0, len(codebook), shape=config.m_irs))]
        effective = _effective_batch(draw, phases[None])
        best = (-np.inf, None)
        scored = 0
        for order in orders:
            gate = alpha_from_order(order)
            vals = batch_best_values(effective, gate, p_mw, draw.noise,
                                     uncertainty=unc)
            scored += 1
            if vals[0] > best[0]:
                best = (float(vals[0]), order)
        rows.append(_finish_row(config, draw, trial_rng, "baseline2",
                                p_dbm, best[1], phases, p_mw, unc,
                                "feasible", scored, certified=False))
    return rows


def _run_baseline3(config, draw, trial_rng, powers_dbm):
    """No reflecting surface: direct channels only, order and beams free."""
    unc = _uncertainty(config, draw)
    if unc is not None:
        # without the surface only the direct-link error ball applies
        unc = (unc[0], unc[1], np.zeros(config.k_users))
    orders = _orders(config.k_users)
    effective = draw.h_direct[None]
    rows = []
    for p_dbm in powers_dbm:
        p_mw = float(db_to_linear(p_dbm))
        best = (-np.inf, None)
        scored = 0
        for order in orders:
            gate = alpha_from_order(order)
            vals = batch_best_values(effective, gate, p_mw, draw.noise,
                                     uncertainty=unc)
            scored += 1
            if vals[0] > best[0]:
                best = (float(vals[0]), order)
        rows.append(_finish_row(config, draw, trial_rng, "baseline3",
                                p_dbm, best[1], None, p_mw, unc,
                                "feasible", scored, certified=False))
    return rows


_SCHEME_FNS = {
    "optimal": _run_optimal,
    "suboptimal": _run_suboptimal,
    "baseline1": _run_baseline1,
    "baseline2": _run_baseline2,
    "baseline3": _run_baseline3,
}


# ------------------------------------------------------------------ sweeps


def run_scheme(config, scheme, p_max_dbm, trial_rng):
    """One (scheme, power) cell of the sweep for a given trial stream.

    Draws the trial's channel realization from ``trial_rng`` (the same
    realization every scheme sees) and returns the diagnostics row
    without the trial column:
    dict(p_max_dbm, sum_rate_bits_s_hz, status, iterations,
    runtime_ms, gap).
    """
    config.validate()
    if scheme not in _SCHEME_FNS:
        raise ValueError("unknown scheme %r" % scheme)
    draw = _draw_scenario(config, trial_rng.split("channel"))
    rows = _SCHEME_FNS[scheme](config, draw, trial_rng,
                               [float(p_max_dbm)])
    row = rows[0]
    row["scheme"] = scheme
    return row


def _trial_rows(config, trial):
    """All rows of one trial; the unit of parallel work."""
    trial_rng = Rng(config.seed).split("trial", trial)
    draw = _draw_scenario(config, trial_rng.split("channel"))
    rows = []
    for scheme in config.schemes:
        try:
            scheme_rows = _SCHEME_FNS[scheme](config, draw, trial_rng,
                                              list(config.p_max_dbm_list))
        except Exception:
            scheme_rows = [{"p_max_dbm": float(p),
                            "sum_rate_bits_s_hz": np.nan,
                            "status": "error", "iterations": 0,
                            "runtime_ms": 0.0, "gap": None}
                           for p in config.p_max_dbm_list]
        for row in scheme_rows:
            row["scheme"] = scheme
            row["trial"] = trial
        rows.extend(scheme_rows)
    return rows


def _sort_rows(rows):
    rows.sort(key=lambda r: (r["scheme"], r["p_max_dbm"], r["trial"]))
    return rows


def run_fig10_sweep(config, jobs=1):
    """Perfect-CSI power sweep over paired trials -> SweepReport."""
    config.validate()
    if config.uncertainty_pct > 0:
        raise ValueError("uncertainty_pct > 0: use run_robust_variant")
    return _sweep(config, jobs)


def run_robust_variant(config, jobs=1):
    """Worst-case-bound optimization sweep; rates scored at the truth.

    With ``uncertainty_pct`` zero this is exactly the perfect-CSI
    sweep (zero-radius balls change nothing).
    """
    config.validate()
    return _sweep(config, jobs)


def _sweep(config, jobs):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = pool.map(_trial_rows, [config] * config.trials,
                              range(config.trials))
            rows = [row for chunk in chunks for row in chunk]
    else:
        rows = [row for trial in range(config.trials)
                for row in _trial_rows(config, trial)]
    return SweepReport(config=config, rows=_sort_rows(rows))
