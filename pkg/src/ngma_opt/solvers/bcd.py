"""Block coordinate ascent/descent over named variable blocks.

The driver cycles through a caller-chosen block ordering and hands each
block to its solver; an update that would worsen the objective is
discarded, so the objective trace is monotone by construction and every
accepted iterate stays feasible (block solvers must return feasible
blocks).  Convergence is declared when a full cycle improves the
objective by less than the relative tolerance.

Default block solvers cover the reconfigurable-surface sum-rate problem:
a matched-filter beam update (single user), exact per-element or joint
enumeration of the discrete phase codebook, and decoding-order gates by
permutation enumeration.
"""

import itertools

import numpy as np

from ..beams import best_allocation
from ..channels import irs_effective_channel
from ..metrics import alpha_from_order
from ..problems import (Solution, check_feasibility, evaluate_objective,
                        phase_codebook)
from ._options import SolverOptions


def solve_bcd(instance, x0, block_solvers, order=None, opts=None,
              trace_out=None):
    """Cyclic block updates until a full cycle stops improving.

    Args:
        instance: the problem being optimized.
        x0: feasible starting assignment (copied).
        block_solvers: dict mapping a block-name tuple to a callable
            (instance, x, opts) -> dict of updated blocks.
        order: cycle order over block_solvers keys (default: dict order).
        opts: SolverOptions.
        trace_out: optional list collecting the objective value after
            every block update (monotone in the problem sense).

    Returns a Solution; iterations counts full cycles.
    """
    opts = opts or SolverOptions()
    x = {k: np.array(v, copy=True) for k, v in x0.items()}
    sign = 1.0 if instance.sense == "max" else -1.0
    val = evaluate_objective(instance, x)
    order = list(order) if order is not None else list(block_solvers)
    evals = 1
    cycles = 0
    status = "iteration-limit"
    if trace_out is not None:
        trace_out.append(float(val))

    for cycles in range(1, opts.max_iter + 1):
        cycle_start = val
        for key in order:
            update = block_solvers[key](instance, x, opts)
            trial = dict(x)
            for name in key:
                trial[name] = np.asarray(update[name])
            new_val = evaluate_objective(instance, trial)
            evals += 1
            if sign * new_val >= sign * val:
                x, val = trial, new_val
            # a worsening update is dropped, keeping the trace monotone
            if trace_out is not None:
                trace_out.append(float(val))
        if sign * (val - cycle_start) <= opts.tol_gap * max(
                1.0, abs(cycle_start)):
            status = "optimal"
            break

    _, residuals = check_feasibility(instance, x, tol=opts.tol_feas)
    return Solution(x=x, objective=float(val),
                    max_residual=float(residuals.max()), status=status,
                    gap=float(abs(val - cycle_start)
                              / max(1.0, abs(cycle_start))),
                    iterations=cycles, runtime_ms=evals * 1e-3)


# ------------------------- block solvers for the surface sum-rate problem


def matched_filter_beam(instance, x, opts):
    """Full-power matched filter on the effective channel (single user)."""
    data = instance.data
    if data.h_direct.shape[0] != 1:
        raise ValueError("matched-filter update expects a single user")
    h_eff = irs_effective_channel(data.h_direct[0], data.bs_irs,
                                  data.irs_user[0], x["phases"])
    beam = np.sqrt(data.power_budget) * h_eff / np.linalg.norm(h_eff)
    return {"beams": beam[:, None]}


def _effective_rows(data, psi):
    return np.stack([irs_effective_channel(data.h_direct[k], data.bs_irs,
                                           data.irs_user[k], psi)
                     for k in range(data.h_direct.shape[0])])


def surface_kernel_block(instance, x, opts, joint_limit=6):
    """Joint phases-and-beams update scored by the allocation kernel.

    Updating phases against frozen beams is a trap: the beams are
    matched to the old surface, so every candidate looks worse and the
    block never moves.  Scoring each phase word by the kernel-best
    strategy for that word (matched filter, zero-forcing subsets, or
    gated superposition) removes the stale coupling.  Small surfaces
    are enumerated jointly; larger ones use per-element descent.
    """
    data = instance.data
    book = phase_codebook(data.codebook_bits)
    m_elems = data.bs_irs.shape[1]
    gate = x["order_gates"]

    def score(psi):
        return best_allocation(_effective_rows(data, psi), gate,
                               data.power_budget, data.noise_vars)

    if m_elems <= joint_limit:
        best_val, best_psi, best_beams = -np.inf, None, None
        for combo in itertools.product(book, repeat=m_elems):
            psi = np.asarray(combo)
            value, beams = score(psi)
            if value > best_val:
                best_val, best_psi, best_beams = value, psi, beams
        return {"phases": best_psi, "beams": best_beams}

    psi = np.asarray(x["phases"], dtype=float).copy()
    best_val, best_beams = score(psi)
    improved = True
    while improved:
        improved = False
        for m in range(m_elems):
            keep = psi[m]
            for cand in book:
                if cand == keep:
                    continue
                psi[m] = cand
                value, beams = score(psi)
                if value > best_val:
                    best_val, best_beams, keep = value, beams, cand
                    improved = True
            psi[m] = keep
    return {"phases": psi, "beams": best_beams}


def enumerate_phases(instance, x, opts, joint_limit=6):
    """Best codebook phases given the other blocks.

    Joint enumeration over the full codebook when the surface has at most
    joint_limit elements (exact conditional update); otherwise cyclic
    per-element sweeps until no single element improves.
    """
    data = instance.data
    if data.codebook_bits is None:
        raise ValueError("phase enumeration needs a discrete codebook")
    codebook = phase_codebook(data.codebook_bits)
    m_elems = x["phases"].size

    def score(phases):
        trial = dict(x)
        trial["phases"] = phases
        return evaluate_objective(instance, trial)

    sign = 1.0 if instance.sense == "max" else -1.0
    if m_elems <= joint_limit:
        best, best_val = None, -sign * np.inf
        for combo in itertools.product(codebook, repeat=m_elems):
            phases = np.array(combo)
            v = score(phases)
            if sign * v > sign * best_val:
                best, best_val = phases, v
        return {"phases": best}

    phases = x["phases"].copy()
    improved = True
    while improved:
        improved = False
        current = score(phases)
        for m in range(m_elems):
            vals = []
            for c in codebook:
                trial = phases.copy()
                trial[m] = c
                vals.append(score(trial))
            pick = int(np.argmax(sign * np.asarray(vals)))
            if sign * vals[pick] > sign * current + 1e-15:
                phases[m] = codebook[pick]
                current = vals[pick]
                improved = True
    return {"phases": phases}


def align_surface_and_beam(instance, x, opts, joint_limit=6):
    """Jointly best phases and beam for the single-user problem.

    With one user the optimal beam for any fixed surface is the
    full-power matched filter, so the rate depends on the phases only
    through the effective channel gain.  Scoring candidates by that
    gain (joint enumeration for small surfaces, per-element sweeps
    otherwise) and rebuilding the matched filter afterwards makes this
    update exact; splitting phases and beam into separate blocks does
    not, because the phase search would keep scoring against a stale
    beam.
    """
    data = instance.data
    if data.h_direct.shape[0] != 1:
        raise ValueError("joint surface/beam update expects a single user")
    if data.codebook_bits is None:
        raise ValueError("phase enumeration needs a discrete codebook")
    codebook = phase_codebook(data.codebook_bits)
    m_elems = x["phases"].size

    def gain(phases):
        h_eff = irs_effective_channel(data.h_direct[0], data.bs_irs,
                                      data.irs_user[0], phases)
        return float(np.sum(np.abs(h_eff) ** 2))

    if m_elems <= joint_limit:
        best, best_gain = None, -np.inf
        for combo in itertools.product(codebook, repeat=m_elems):
            phases = np.array(combo)
            g = gain(phases)
            if g > best_gain:
                best, best_gain = phases, g
    else:
        best = x["phases"].copy()
        improved = True
        while improved:
            improved = False
            current = gain(best)
            for m in range(m_elems):
                vals = []
                for c in codebook:
                    trial = best.copy()
                    trial[m] = c
                    vals.append(gain(trial))
                pick = int(np.argmax(vals))
                if vals[pick] > current + 1e-15:
                    best[m] = codebook[pick]
                    current = vals[pick]
                    improved = True
    beam = matched_filter_beam(instance, {**x, "phases": best}, opts)
    return {"phases": best, **beam}


def enumerate_order_gates(instance, x, opts):
    """Best decoding-order gates by enumerating user permutations."""
    k_users = x["order_gates"].shape[0]
    sign = 1.0 if instance.sense == "max" else -1.0
    best, best_val = None, -sign * np.inf
    for perm in itertools.permutations(range(k_users)):
        gates = alpha_from_order(np.asarray(perm))
        trial = dict(x)
        trial["order_gates"] = gates.astype(float)
        v = evaluate_objective(instance, trial)
        if sign * v > sign * best_val:
            best, best_val = gates.astype(float), v
    return {"order_gates": best}


def surface_block_solvers(instance):
    """Default block-solver map for IrsSumRate instances."""
    if instance.kind != "IrsSumRate":
        raise ValueError("expected an IrsSumRate instance")
    if instance.data.h_direct.shape[0] == 1:
        return {("phases", "beams"): align_surface_and_beam}
    return {("phases", "beams"): surface_kernel_block,
            ("order_gates",): enumerate_order_gates}
