"""Best-bound branch-and-bound over binary schedule variables.

The search is generic: a caller-supplied relaxer evaluates each node (a box
of lower/upper bounds on the binary blocks) and returns a valid bound in
the instance's sense, the relaxed binary assignment used for branching, and
— when it can close the node exactly — a full feasible assignment.  Node
bounds are clamped to the parent's so bound monotonicity along every tree
path holds by construction.

Ships the relaxer for the orthogonal-subcarrier power-minimization problem
(one stream per user): the node bound drops the cross-user subcarrier-
exclusivity coupling and gives every user the cheapest fractional schedule
its remaining candidate subcarriers allow, which is solvable exactly by a
fractional-knapsack argument plus bisection on the user's power.
"""

import heapq
import itertools
from dataclasses import dataclass

import numpy as np

from ..problems import Solution, check_feasibility, evaluate_objective
from ._options import SolverOptions


@dataclass
class Relaxation:
    """Node relaxation summary returned by a relaxer."""

    bound: float        # valid bound in the instance's sense
    binaries: dict      # relaxed binary blocks (entries may be fractional)
    x: dict = None      # full assignment when the node closed exactly


@dataclass
class BnbNode:
    lower: dict
    upper: dict
    bound: float
    depth: int


def _free_entries(node):
    out = []
    for name in sorted(node.lower):
        lo = node.lower[name].ravel()
        hi = node.upper[name].ravel()
        out.extend((name, i) for i in np.flatnonzero(hi - lo > 0.5))
    return out


def _most_fractional(relax, free):
    best = None
    best_score = -1.0
    for name, idx in free:
        val = float(np.asarray(relax.binaries[name]).ravel()[idx])
        score = min(val, 1.0 - val)
        if score > best_score + 1e-15:
            best_score = score
            best = (name, idx)
    return best


def solve_bnb(instance, relaxer, opts=None):
    """Best-bound-first search with most-fractional branching.

    Args:
        instance: ProblemInstance with has_binaries.
        relaxer: (instance, lower, upper, opts) -> Relaxation or None when
            the node is infeasible.  The bound must be valid for every
            point of the node's box.
        opts: SolverOptions (max_nodes bounds the search).

    Returns:
        Solution with a certified relative gap; status "optimal" when the
        gap closed below opts.tol_gap, "feasible" on node-budget
        exhaustion, "infeasible" when no leaf admits a feasible point.
    """
    opts = opts or SolverOptions()
    if not instance.has_binaries:
        raise ValueError("instance has no binary variables to branch on")
    sign = 1.0 if instance.sense == "min" else -1.0

    lower = {b.name: np.zeros(b.shape) for b in instance.layout
             if b.kind == "binary"}
    upper = {b.name: np.ones(b.shape) for b in instance.layout
             if b.kind == "binary"}

    incumbent = None
    incumbent_val = sign * np.inf
    counter = itertools.count()
    heap = []
    root = BnbNode(lower, upper, -sign * np.inf, 0)
    heapq.heappush(heap, (sign * root.bound, next(counter), root))
    nodes_processed = 0
    best_bound = root.bound

    certified = False
    while heap and nodes_processed < opts.max_nodes:
        _, _, node = heapq.heappop(heap)
        best_bound = node.bound
        if sign * incumbent_val < np.inf:
            slack = opts.tol_gap * max(1.0, abs(incumbent_val))
            if sign * node.bound >= sign * incumbent_val - slack:
                certified = True
                break

        relax = relaxer(instance, node.lower, node.upper, opts)
        nodes_processed += 1
        if relax is None:
            continue
        # child bounds never loosen past the parent's (tree monotonicity)
        bound = relax.bound if sign * relax.bound > sign * node.bound \
            else node.bound
        if sign * bound >= sign * incumbent_val \
                - opts.tol_gap * max(1.0, abs(incumbent_val)):
            continue

        if relax.x is not None:
            feasible, _ = check_feasibility(instance, relax.x,
                                            tol=opts.tol_feas * 10)
            if feasible:
                val = evaluate_objective(instance, relax.x)
                if sign * val < sign * incumbent_val:
                    incumbent, incumbent_val = relax.x, val
                continue

        free = _free_entries(node)
        if not free:
            continue
        name, idx = _most_fractional(relax, free)
        for value in (0.0, 1.0):
            lo = {k: v.copy() for k, v in node.lower.items()}
            hi = {k: v.copy() for k, v in node.upper.items()}
            lo[name].ravel()[idx] = value
            hi[name].ravel()[idx] = value
            child = BnbNode(lo, hi, bound, node.depth + 1)
            heapq.heappush(heap, (sign * bound, next(counter), child))

    runtime = nodes_processed * 1e-3
    if incumbent is None:
        status = "infeasible" if not heap else "iteration-limit"
        return Solution(x={}, objective=sign * np.inf, max_residual=np.inf,
                        status=status, iterations=nodes_processed,
                        runtime_ms=runtime)

    if heap and not certified:
        best_bound = min((n.bound for _, _, n in heap),
                         key=lambda b: sign * b, default=best_bound)
    if not heap and not certified:
        gap = 0.0      # tree fully explored: incumbent is exact
    else:
        gap = max(0.0, sign * (incumbent_val - best_bound)) \
            / max(1.0, abs(incumbent_val))
    status = "optimal" if gap <= opts.tol_gap else "feasible"
    _, residuals = check_feasibility(instance, incumbent,
                                     tol=opts.tol_feas)
    return Solution(x=incumbent, objective=incumbent_val,
                    max_residual=float(residuals.max()), status=status,
                    gap=float(gap), iterations=nodes_processed,
                    runtime_ms=runtime)


# ------------------------------------------------- OFDMA schedule relaxer


def min_power_single_gain(gain, min_rate, noise_var):
    """Exact power for log2(1 + gain p / noise) = min_rate."""
    if min_rate <= 0:
        return 0.0
    return (2.0 ** min_rate - 1.0) * noise_var / gain


def _relaxed_user_power(gains, caps, min_rate, noise_var, budget):
    """Min power so the capped fractional schedule can carry min_rate.

    The user may split one unit of schedule across its candidate
    subcarriers; carrying fraction f on subcarrier m yields up to
    min(f * r_max_m, r_m(p)) rate.  For a given power the best split is a
    fractional knapsack (fill the largest-cap subcarriers first).  The
    resulting achievable rate is increasing in p, so the minimum power is
    found by bisection.  Returns (power, shares) or None when even the
    budget cannot carry the rate.
    """
    gains = np.asarray(gains, dtype=float)
    caps = np.asarray(caps, dtype=float)
    allowed = np.flatnonzero(caps > 0.5)
    if min_rate <= 0:
        return 0.0, np.zeros_like(gains)
    if allowed.size == 0:
        return None
    g = gains[allowed]
    r_max = np.log2(1.0 + g * budget / noise_var)

    def best_rate_and_shares(p):
        r = np.log2(1.0 + g * p / noise_var)
        # budget of one schedule unit, spent greedily on the largest caps
        order = np.argsort(-r_max, kind="stable")
        left = 1.0
        total = 0.0
        shares = np.zeros_like(g)
        for i in order:
            if left <= 0 or r_max[i] <= 0:
                break
            need = r[i] / r_max[i] if r_max[i] > 0 else 0.0
            take = min(left, need)
            shares[i] = take
            total += take * r_max[i]
            left -= take
        return total, shares

    top, _ = best_rate_and_shares(budget)
    if top < min_rate - 1e-12:
        return None
    lo, hi = 0.0, budget
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        rate, _ = best_rate_and_shares(mid)
        if rate >= min_rate:
            hi = mid
        else:
            lo = mid
    power = hi
    _, shares = best_rate_and_shares(power)
    full = np.zeros_like(gains)
    full[allowed] = shares
    return power, full


def ofdma_relaxer(instance, lower, upper, opts):
    """Node relaxation for OfdmaPowerMin with one stream per user.

    Propagates the schedule fixings (a placed stream closes its subcarrier
    row and its own column), bounds each user's power by the capped
    fractional schedule over its remaining candidate subcarriers, and
    closes the node exactly once every stream has a single candidate left.
    """
    data = instance.data
    if np.any(np.asarray(data.streams) != 1):
        raise ValueError("relaxer supports one stream per user")
    gains = data.subcarrier_gains                    # [K, M]
    k_users, m_sub = gains.shape
    lo = np.asarray(lower["schedule"], dtype=float)  # [M, K]
    hi = np.asarray(upper["schedule"], dtype=float)

    if np.any(lo.sum(axis=1) > 1.5) or np.any(lo.sum(axis=0) > 1.5):
        return None                                  # conflicting fixings
    caps = hi.copy()
    placed_rows = np.flatnonzero(lo.sum(axis=1) > 0.5)
    placed_cols = np.flatnonzero(lo.sum(axis=0) > 0.5)
    caps[placed_rows, :] = 0.0
    caps[:, placed_cols] = 0.0
    caps = np.maximum(caps, lo)

    budgets = np.broadcast_to(np.asarray(data.power_budgets, float),
                              (k_users,))
    min_rates = np.broadcast_to(np.asarray(data.min_rates, float),
                                (k_users,))
    powers = np.zeros(k_users)
    shares = np.zeros((m_sub, k_users))
    for u in range(k_users):
        got = _relaxed_user_power(gains[u], caps[:, u], min_rates[u],
                                  data.noise_var, budgets[u])
        if got is None:
            return None
        powers[u], shares[:, u] = got

    bound = float(powers.sum())
    candidates = caps > 0.5
    single = candidates.sum(axis=0)
    needs = min_rates > 0
    if np.all(single[needs] == 1) and np.all(
            candidates[:, needs].sum(axis=1) <= 1):
        # every needed stream pinned to one subcarrier: exact closure
        schedule = np.zeros((m_sub, k_users))
        exact = np.zeros(k_users)
        for u in range(k_users):
            if not needs[u]:
                continue
            m = int(np.flatnonzero(candidates[:, u])[0])
            schedule[m, u] = 1.0
            exact[u] = min_power_single_gain(gains[u, m], min_rates[u],
                                             data.noise_var)
            if exact[u] > budgets[u] + opts.tol_feas:
                return None
        x = {"powers": exact, "schedule": schedule}
        return Relaxation(bound=float(exact.sum()), binaries={
            "schedule": schedule}, x=x)
    return Relaxation(bound=bound, binaries={"schedule": shares})


def ofdma_leaf(instance, assignment):
    """Exhaustive-oracle leaf: exact powers for a fully fixed schedule.

    Returns None when a user cannot meet its rate on the scheduled
    subcarrier within budget; streams sharing a subcarrier or spread over
    several subcarriers are left to the feasibility check (rate and
    exclusivity residuals reject them).
    """
    data = instance.data
    gains = data.subcarrier_gains
    k_users = gains.shape[0]
    if np.any(np.asarray(data.streams) != 1):
        raise ValueError("leaf supports one stream per user")
    schedule = np.asarray(assignment["schedule"], dtype=float)
    min_rates = np.broadcast_to(np.asarray(data.min_rates, float),
                                (k_users,))
    budgets = np.broadcast_to(np.asarray(data.power_budgets, float),
                              (k_users,))
    powers = np.zeros(k_users)
    for u in range(k_users):
        rows = np.flatnonzero(schedule[:, u] > 0.5)
        if rows.size == 0:
            if min_rates[u] > 0:
                return None
            continue
        if rows.size > 1:
            return None          # one subcarrier per stream
        powers[u] = min_power_single_gain(gains[u, rows[0]], min_rates[u],
                                          data.noise_var)
        if powers[u] > budgets[u] + 1e-12:
            return None
    return {"powers": powers}
