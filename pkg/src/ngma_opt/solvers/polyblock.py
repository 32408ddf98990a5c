"""Polyblock outer approximation for monotone rate maximization.

Targets the single-subcarrier superposition-coding sum-rate problem: the
objective is increasing in the per-user ratio variables z_k = 1 + SINR_k,
the achievable region is a normal (downward-closed) set inside the box
[1, 1 + g_k P / sigma_k^2], and the rate floors carve out a conormal set
z_k >= 2^{r_min,k}.  The algorithm shrinks a polyblock (union of boxes
described by its vertex set) around the feasible region: each round
projects the best vertex onto the region boundary along the ray from the
all-ones corner, records the projection as an incumbent when it clears the
rate floors, and replaces the vertex by its co-dimension-one children.

Membership tests are exact: given target ratios, the cheapest power vector
follows by forward substitution along the decoding order (stronger users
are decoded later and see only the weaker users' power as interference),
so z is achievable iff those powers fit the budget.
"""

from dataclasses import dataclass

import numpy as np

from ..problems import Solution, check_feasibility
from ._options import SolverOptions


@dataclass
class PolyblockState:
    """Vertex set and incumbent after a solve (returned for inspection)."""

    vertices: np.ndarray     # [n_vertices, k_users]
    incumbent: np.ndarray    # best feasible ratio vector
    upper_bound: float
    rounds: int


def powers_for_ratios(gains, noise_vars, ratios):
    """Cheapest powers achieving SINR_k = ratios_k - 1 under superposition.

    Decoding order is by descending gain; user k is interfered only by
    users with larger gain (their signals are removed last).  Forward
    substitution from the weakest-interference user outward gives the
    unique minimal power vector.
    """
    gains = np.asarray(gains, dtype=float)
    noise_vars = np.broadcast_to(np.asarray(noise_vars, float), gains.shape)
    order = np.lexsort((np.arange(gains.size), -gains))
    targets = np.asarray(ratios, dtype=float) - 1.0
    powers = np.zeros_like(gains)
    stronger_power = 0.0
    for k in order:
        powers[k] = targets[k] * (stronger_power + noise_vars[k] / gains[k])
        stronger_power += powers[k]
    return powers


def solve_polyblock(instance, opts=None, state_out=None):
    """Globally maximize the single-subcarrier superposition sum rate.

    Requires a NomaSumRate instance with one subcarrier; the schedule is
    then forced and only the power split is optimized.  Status "optimal"
    carries a certified relative gap below opts.tol_gap; vertex-budget
    exhaustion downgrades to "feasible" with the achieved gap.  Passing a
    list as state_out appends a PolyblockState snapshot per round.
    """
    opts = opts or SolverOptions()
    if instance.kind != "NomaSumRate":
        raise ValueError("polyblock solver expects a NomaSumRate instance")
    data = instance.data
    gains = np.asarray(data.subcarrier_gains, dtype=float)
    if gains.shape[0] != 1:
        raise ValueError("polyblock solver expects a single subcarrier")
    gains = gains[0]
    k_users = gains.size
    noise = np.broadcast_to(np.asarray(data.noise_vars, float), (k_users,))
    budget = float(data.power_budget)
    floors = 2.0 ** np.broadcast_to(
        np.asarray(data.min_rates, float), (k_users,))

    order = np.lexsort((np.arange(k_users), -gains))
    offsets = noise[order] / gains[order]

    def total_power(targets):
        # forward substitution along the decoding order, cheapest powers
        total = 0.0
        for k, c in zip(order, offsets):
            total += targets[k] * (total + c)
        return total

    def achievable(z):
        return total_power(z - 1.0) <= budget * (1 + 1e-12)

    def value(z):
        return float(np.log2(z).sum())

    ones = np.ones(k_users)
    box_top = 1.0 + gains * budget / noise
    if np.any(floors > box_top + 1e-12) or not achievable(
            np.maximum(floors, 1.0)):
        return Solution(x={}, objective=-np.inf, max_residual=np.inf,
                        status="infeasible", iterations=0, runtime_ms=0.0)

    def project(v):
        # largest feasible point on the segment from the all-ones corner
        direction = v - 1.0
        if total_power(direction) <= budget * (1 + 1e-12):
            return v.copy()
        lo, hi = 0.0, 1.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if total_power(mid * direction) <= budget:
                lo = mid
            else:
                hi = mid
        return ones + lo * direction

    vertices = box_top[None, :].copy()
    incumbent = np.maximum(floors, 1.0)
    incumbent_val = value(incumbent)
    evals = 0
    rounds = 0
    upper = value(box_top)
    status = "feasible"

    while vertices.shape[0] > 0 and rounds < opts.max_iter * 10:
        rounds += 1
        scores = np.log2(vertices).sum(axis=1)
        best = int(np.argmax(scores))
        upper = float(scores[best])
        if state_out is not None:
            state_out.append(PolyblockState(
                vertices=vertices.copy(), incumbent=incumbent.copy(),
                upper_bound=upper, rounds=rounds))
        slack = opts.tol_gap * max(1.0, abs(incumbent_val))
        if upper <= incumbent_val + slack:
            status = "optimal"
            break
        v = vertices[best]
        vertices = np.delete(vertices, best, axis=0)
        pi = project(v)
        evals += 60
        if np.all(pi >= floors - 1e-12) and value(pi) > incumbent_val:
            incumbent = np.minimum(pi, box_top)
            incumbent_val = value(incumbent)
        children = np.repeat(v[None, :], k_users, axis=0)
        children[np.arange(k_users), np.arange(k_users)] = pi
        keep = np.all(children >= 1.0 - 1e-12, axis=1)
        keep &= np.log2(np.maximum(children, 1.0)).sum(axis=1) \
            > incumbent_val + slack
        children = children[keep]
        if children.size:
            vertices = np.vstack([vertices, children])
        # periodically drop vertices below the incumbent or dominated by
        # another vertex (componentwise)
        if vertices.shape[0] > 1 and rounds % 16 == 0:
            good = np.log2(np.maximum(vertices, 1.0)).sum(axis=1) \
                > incumbent_val + slack
            vertices = vertices[good]
            if vertices.shape[0] > 1:
                below = np.all(
                    vertices[:, None, :] <= vertices[None, :, :] + 1e-12,
                    axis=2)
                np.fill_diagonal(below, False)
                # strict domination only, so exact duplicates survive
                vertices = vertices[~(below & ~below.T).any(axis=1)]
        if vertices.shape[0] > opts.max_vertices:
            break

    if vertices.shape[0] == 0:
        status = "optimal"
        upper = incumbent_val
    gap = max(0.0, upper - incumbent_val) / max(1.0, abs(incumbent_val))
    if status != "optimal" and gap <= opts.tol_gap:
        status = "optimal"

    powers = powers_for_ratios(gains, noise, incumbent)
    powers = np.maximum(powers, 0.0)
    x = {"powers": powers, "schedule": np.ones((1, k_users))}
    _, residuals = check_feasibility(instance, x, tol=opts.tol_feas)
    return Solution(x=x, objective=incumbent_val,
                    max_residual=float(residuals.max()), status=status,
                    gap=float(gap), iterations=rounds,
                    runtime_ms=(evals + rounds) * 1e-3)
