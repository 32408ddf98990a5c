"""Semidefinite-relaxation beamforming by projection methods.

Solves downlink SINR-constrained power minimization by lifting each beam
to a Hermitian PSD matrix, which turns the SINR floors, per-antenna caps,
and total-power cap into linear constraints.  The relaxation is handled
without an external conic solver: the minimal feasible total power is
found by bisection, and each feasibility test runs Dykstra's alternating
projections between the product PSD cone (eigenvalue clipping) and the
half-spaces (closed-form shifts).

Beams are recovered from the dominant eigenvectors; their transmit powers
are then rebalanced through the K x K linear system that makes every SINR
floor tight, which restores exact feasibility whenever the directions are
good.  If rebalancing fails, Gaussian randomization draws candidate
directions from the lifted matrices.  The quality of the relaxation is
summarized by the rank-1 defect (second-to-first eigenvalue ratio) of the
converged lifted matrices.
"""

import numpy as np

from ..numerics import Rng, dominant_eigvec, eig_hermitian, psd_project
from ..problems import Solution
from ._options import SolverOptions

RANDOMIZATION_DRAWS = 200


def _interference_gate(alpha, k_users):
    if alpha is None:
        return 1.0 - np.eye(k_users)
    return np.asarray(alpha, dtype=float) * (1.0 - np.eye(k_users))


def _halfspaces(channels, targets, noise, gate, antenna_limits, total_cap):
    """Linear constraints <A, W> >= b on the stacked lifted blocks."""
    k_users, n_ant = channels.shape
    cons = []
    outer = np.einsum("ki,kj->kij", channels, channels.conj())
    for k in range(k_users):
        a = np.zeros((k_users, n_ant, n_ant), dtype=complex)
        a[k] = outer[k]
        for r in range(k_users):
            if r != k:
                a[r] = -targets[k] * gate[k, r] * outer[k]
        cons.append((a, targets[k] * noise[k]))
    if antenna_limits is not None:
        for i in range(n_ant):
            a = np.zeros((k_users, n_ant, n_ant), dtype=complex)
            a[:, i, i] = -1.0
            cons.append((a, -float(antenna_limits[i])))
    eye = np.zeros((k_users, n_ant, n_ant), dtype=complex)
    eye[:] = -np.eye(n_ant)
    cons.append((eye, -float(total_cap)))
    return cons


def _inner(a, w):
    return float(np.real(np.sum(a.conj() * w)))


def _project_feasibility(w0, cons, max_sweeps, tol):
    """Dykstra projections onto PSD cone and half-spaces.

    Returns (point, worst_violation).  The point is always in the PSD
    cone; the violation measures the half-spaces only.
    """
    w = np.array(w0, copy=True)
    # the cone comes last so each sweep ends (and the violation is
    # measured) at a PSD point; otherwise the half-spaces alone can look
    # satisfied at power levels no PSD matrix attains
    sets = list(range(len(cons))) + [None]     # None marks the PSD cone
    memory = [np.zeros_like(w) for _ in sets]
    norms = [float(np.sum(np.abs(a) ** 2)) for a, _ in cons] + [None]
    bscale = [max(1.0, abs(b)) for _, b in cons]

    def violation(point):
        return max((b - _inner(a, point)) / s
                   for (a, b), s in zip(cons, bscale))

    last = np.inf
    for sweep in range(max_sweeps):
        for j, tag in enumerate(sets):
            y = w + memory[j]
            if tag is None:
                proj = np.stack([psd_project(block) for block in y])
            else:
                a, b = cons[tag]
                gap = b - _inner(a, y)
                proj = y + (max(0.0, gap) / norms[j]) * a if gap > 0 else y
            memory[j] = y - proj
            w = proj
        worst = violation(w)
        if worst <= tol:
            return w, worst
        if sweep % 25 == 24:
            if last - worst <= 1e-14 * max(1.0, abs(worst)):
                break              # stalled: treat as infeasible level
            last = worst
    return w, violation(w)


def _directions(w_blocks):
    k_users, n_ant = w_blocks.shape[0], w_blocks.shape[-1]
    dirs = np.zeros((n_ant, k_users), dtype=complex)
    for k in range(k_users):
        _, dirs[:, k] = dominant_eigvec(w_blocks[k])
    return dirs


def _rank1_stack(powers, directions):
    return np.einsum("k,ik,jk->kij", powers, directions,
                     directions.conj())


def _rebalance(channels, targets, noise, gate, directions):
    """Per-user powers making every SINR floor tight for unit beams."""
    k_users = channels.shape[0]
    cross = np.abs(channels.conj() @ directions) ** 2   # [K, K] powers
    mat = np.zeros((k_users, k_users))
    for k in range(k_users):
        mat[k, k] = cross[k, k]
        for r in range(k_users):
            if r != k:
                mat[k, r] = -targets[k] * gate[k, r] * cross[k, r]
    try:
        q = np.linalg.solve(mat, targets * noise)
    except np.linalg.LinAlgError:
        return None
    if np.any(~np.isfinite(q)) or np.any(q < -1e-12):
        return None
    return np.maximum(q, 0.0)


def solve_sdr_beamforming(channels, sinr_targets, noise_vars, opts=None,
                          alpha=None, antenna_limits=None):
    """Minimize total transmit power subject to per-user SINR floors.

    Args:
        channels: [K, N] user channels (rows h_k).
        sinr_targets: [K] linear SINR floors.
        noise_vars: [K] or scalar noise powers.
        opts: SolverOptions.
        alpha: optional [K, K] interference gating (1 = interferes).
        antenna_limits: optional [N] per-antenna power caps.

    Returns:
        Solution with x = {"beams", "lifted", "rank1_defect"}; the
        objective is the achieved rank-1 total power and gap its relative
        distance to the bisected relaxation level.
    """
    opts = opts or SolverOptions()
    channels = np.asarray(channels, dtype=complex)
    k_users, n_ant = channels.shape
    targets = np.broadcast_to(np.asarray(sinr_targets, float), (k_users,))
    noise = np.broadcast_to(np.asarray(noise_vars, float), (k_users,))
    gate = _interference_gate(alpha, k_users)
    rng = Rng(opts.seed).split("sdr-randomization")

    gains = np.sum(np.abs(channels) ** 2, axis=1)
    if np.any(gains <= 0):
        raise ValueError("every user needs a nonzero channel")
    floor = float(np.sum(targets * noise / gains))
    tau_hi = max(floor, 1e-12)
    # per-antenna caps slow the alternating projection down a lot
    # (the cone and the cap half-spaces fight over the diagonal)
    sweeps = 400 if antenna_limits is None else 2000
    # violations come back normalized per constraint, so a flat blur
    # well below the bisection resolution is enough
    feas_tol = max(opts.tol_feas * 10.0, 1e-7)

    def caps_ok(q, dirs):
        if antenna_limits is None:
            return True
        per_antenna = np.sum(np.abs(dirs) ** 2 * q[None, :], axis=1)
        lim = np.asarray(antenna_limits, dtype=float)
        return bool(np.all(per_antenna <= lim * (1 + 1e-9) + 1e-12))

    w = np.zeros((k_users, n_ant, n_ant), dtype=complex)
    feasible_w = None
    evals = 0
    for _ in range(60):
        cons = _halfspaces(channels, targets, noise, gate, antenna_limits,
                           tau_hi)
        w_try, worst = _project_feasibility(w, cons, sweeps,
                                            feas_tol)
        evals += 1
        if worst <= feas_tol:
            feasible_w = w_try
            w = w_try
            break
        tau_hi *= 2.0
    if feasible_w is None:
        return Solution(x={}, objective=np.inf, max_residual=np.inf,
                        status="infeasible", iterations=evals,
                        runtime_ms=evals * 1e-3)

    tau_lo = 0.0
    while tau_hi - tau_lo > opts.tol_gap * max(1.0, tau_hi):
        mid = 0.5 * (tau_lo + tau_hi)
        # spend more sweeps once the bracket is tight: declaring a
        # feasible level infeasible here is what costs accuracy
        endgame = tau_hi - tau_lo <= 0.05 * max(1.0, tau_hi)
        cons = _halfspaces(channels, targets, noise, gate, antenna_limits,
                           mid)
        w_try, worst = _project_feasibility(feasible_w, cons,
                                            sweeps * 5 if endgame else sweeps,
                                            feas_tol)
        evals += 1
        if worst <= feas_tol:
            tau_hi = mid
            feasible_w = w_try
            continue
        # stalled projection: the partially converged directions may
        # still certify a level below tau_hi through exact rebalancing
        dirs_try = _directions(w_try)
        q = _rebalance(channels, targets, noise, gate, dirs_try)
        if q is not None and not caps_ok(q, dirs_try):
            q = None
        if q is not None and q.sum() < tau_hi:
            tau_hi = float(q.sum())
            feasible_w = _rank1_stack(q, dirs_try)
        if q is None or q.sum() > mid:
            tau_lo = mid

    cons = _halfspaces(channels, targets, noise, gate, antenna_limits,
                       tau_hi)
    feasible_w, _ = _project_feasibility(feasible_w, cons, sweeps * 10,
                                         feas_tol * 1e-3)
    evals += 10

    defects = np.zeros(k_users)
    directions = np.zeros((n_ant, k_users), dtype=complex)
    for k in range(k_users):
        eig = eig_hermitian(psd_project(feasible_w[k]))
        lead = eig.values[-1]
        second = eig.values[-2] if n_ant > 1 else 0.0
        defects[k] = max(second, 0.0) / lead if lead > 0 else 1.0
        _, directions[:, k] = dominant_eigvec(feasible_w[k])

    best_q = _rebalance(channels, targets, noise, gate, directions)
    best_dirs = directions
    if best_q is not None and not caps_ok(best_q, best_dirs):
        best_q = None
    if best_q is None or best_q.sum() > tau_hi * (1 + 0.01):
        for _ in range(RANDOMIZATION_DRAWS):
            draws = np.zeros_like(directions)
            for k in range(k_users):
                root = _matrix_root(feasible_w[k])
                vec = root @ rng.complex_normal(n_ant)
                nrm = np.linalg.norm(vec)
                draws[:, k] = vec / nrm if nrm > 0 else directions[:, k]
            q = _rebalance(channels, targets, noise, gate, draws)
            evals += 1
            if q is not None and not caps_ok(q, draws):
                q = None
            if q is not None and (best_q is None
                                  or q.sum() < best_q.sum()):
                best_q, best_dirs = q, draws.copy()

    if best_q is None:
        return Solution(x={"lifted": feasible_w,
                           "rank1_defect": defects},
                        objective=float(tau_hi), max_residual=np.inf,
                        status="feasible", gap=None, iterations=evals,
                        runtime_ms=evals * 1e-3)

    beams = best_dirs * np.sqrt(best_q)[None, :]
    achieved = float(best_q.sum())
    gap = max(0.0, achieved - tau_hi) / max(1.0, tau_hi)
    status = "optimal" if gap <= opts.tol_gap * 100 else "feasible"
    return Solution(x={"beams": beams, "lifted": feasible_w,
                       "rank1_defect": defects},
                    objective=achieved, max_residual=0.0, status=status,
                    gap=float(gap), iterations=evals,
                    runtime_ms=evals * 1e-3)


def _matrix_root(w):
    eig = eig_hermitian(psd_project(w))
    vals = np.sqrt(np.maximum(eig.values, 0.0))
    return eig.vectors * vals[None, :] @ eig.vectors.conj().T
