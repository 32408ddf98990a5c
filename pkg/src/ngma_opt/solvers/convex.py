"""Log-barrier damped-Newton kernel for smooth convex subproblems.

The kernel minimizes a smooth convex objective subject to smooth convex
inequality constraints g_i(x) <= 0 and optional box bounds.  Callables
return (value, gradient); the barrier Hessian is built by differencing the
gradient, with Levenberg damping until the Newton system is positive
definite.  Finite box bounds join the smooth constraints as log terms, so
every iterate stays strictly interior and the m/t gap certificate counts
them too.

A strictly feasible start is found by a phase-I pass on (x, s) minimizing
the infeasibility bound s; if the optimum stays positive the restriction is
reported infeasible.
"""

from dataclasses import dataclass, field

import numpy as np

from ..problems import Solution
from ._options import SolverOptions


@dataclass
class ConvexProblem:
    """Smooth convex program in a single real vector variable.

    Attributes:
        objective: x -> (value, gradient).
        constraints: list of x -> (value, gradient), feasible iff value <= 0.
        lower, upper: optional elementwise box bounds.
    """

    objective: object
    constraints: list = field(default_factory=list)
    lower: np.ndarray = None
    upper: np.ndarray = None


def _bounds(problem, n):
    lower = np.full(n, -np.inf) if problem.lower is None \
        else np.broadcast_to(np.asarray(problem.lower, float), (n,))
    upper = np.full(n, np.inf) if problem.upper is None \
        else np.broadcast_to(np.asarray(problem.upper, float), (n,))
    return lower, upper


def _interior_start(problem, x):
    """Nudge x strictly inside the box (bounds get barrier terms)."""
    lower, upper = _bounds(problem, x.size)
    span = upper - lower
    margin = np.where(np.isfinite(span), span * 1e-3,
                      1e-6 * np.maximum(1.0, np.abs(lower) + np.abs(upper)))
    margin = np.where(np.isfinite(margin), margin, 1e-6)
    x = np.maximum(x, np.where(np.isfinite(lower), lower + margin, x))
    x = np.minimum(x, np.where(np.isfinite(upper), upper - margin, x))
    return x


def _barrier(problem, x, t, counter):
    """Value and gradient of t*f0 - sum log(-g_i); inf outside the domain."""
    counter[0] += 1
    f0, g0 = problem.objective(x)
    val = t * f0
    grad = t * np.asarray(g0, dtype=float)
    for con in problem.constraints:
        ci, gi = con(x)
        if not (ci < 0.0):          # catches boundary, violation, and NaN
            return np.inf, grad
        val -= np.log(-ci)
        grad += np.asarray(gi, dtype=float) / (-ci)
    lower, upper = _bounds(problem, x.size)
    lo_gap = x - lower
    hi_gap = upper - x
    lo_fin = np.isfinite(lower)
    hi_fin = np.isfinite(upper)
    if np.any(lo_gap[lo_fin] <= 0.0) or np.any(hi_gap[hi_fin] <= 0.0):
        return np.inf, grad
    val -= np.log(lo_gap[lo_fin]).sum() + np.log(hi_gap[hi_fin]).sum()
    grad -= np.where(lo_fin, 1.0 / np.where(lo_fin, lo_gap, 1.0), 0.0)
    grad += np.where(hi_fin, 1.0 / np.where(hi_fin, hi_gap, 1.0), 0.0)
    return val, grad


def _barrier_hessian(problem, x, t, grad, counter, step=1e-6):
    n = x.size
    h = np.empty((n, n))
    scale = np.maximum(np.abs(x), 1.0) * step
    # shrink steps so single-coordinate probes stay inside the domain and
    # resolve the 1/g^2 barrier curvature near active constraints
    for con in problem.constraints:
        ci, gi = con(x)
        if ci < 0.0:
            allowed = 0.25 * (-ci) / (np.abs(np.asarray(gi, float))
                                      + 1e-300)
            scale = np.minimum(scale, allowed)
    lower, upper = _bounds(problem, n)
    scale = np.minimum(scale, np.where(np.isfinite(lower),
                                       0.25 * (x - lower), scale))
    scale = np.minimum(scale, np.where(np.isfinite(upper),
                                       0.25 * (upper - x), scale))
    scale = np.maximum(scale, np.maximum(np.abs(x), 1.0) * 1e-12)
    counter[0] += 1
    for i in range(n):
        xp = x.copy()
        xp[i] += scale[i]
        vp, gp = _barrier(problem, xp, t, counter)
        if not np.isfinite(vp):
            xp[i] = x[i] - scale[i]
            _, gm = _barrier(problem, xp, t, counter)
            h[i] = (grad - gm) / scale[i]
        else:
            h[i] = (gp - grad) / scale[i]
    return 0.5 * (h + h.T)


def _newton_on_barrier(problem, x, t, opts, counter, stop_when=None):
    """Damped Newton until the decrement stalls; returns the center."""
    for it in range(opts.max_iter):
        if stop_when is not None and stop_when(x):
            return x, it
        val, grad = _barrier(problem, x, t, counter)
        hess = _barrier_hessian(problem, x, t, grad, counter)
        damping = 1e-10 * max(1.0, float(np.trace(hess)) / max(x.size, 1))
        while True:
            try:
                # Cholesky certifies positive definiteness; an indefinite
                # differenced Hessian must be damped, not solved as-is
                np.linalg.cholesky(hess + damping * np.eye(x.size))
                step_dir = np.linalg.solve(
                    hess + damping * np.eye(x.size), -grad)
                break
            except np.linalg.LinAlgError:
                damping *= 10.0
        decrement = float(-grad @ step_dir)
        if decrement <= 2.0 * opts.tol_gap * max(1.0, abs(val)) * 1e-3 \
                or decrement <= 1e-14:
            return x, it
        # backtracking on the barrier merit, staying inside the domain
        alpha = 1.0
        for bt in range(60):
            cand = x + alpha * step_dir
            vc, _ = _barrier(problem, cand, t, counter)
            if np.isfinite(vc) and vc <= val - 1e-4 * alpha * decrement:
                x = cand
                break
            alpha *= 0.5
        else:
            return x, it
    return x, opts.max_iter


def _strictly_feasible(problem, x0, opts, counter):
    """Phase-I: push max constraint value below zero, or report failure."""
    x0 = _interior_start(problem, np.asarray(x0, dtype=float))
    if not problem.constraints:
        return x0
    vals = [con(x0)[0] for con in problem.constraints]
    worst = max(vals)
    if worst < -opts.tol_feas:
        return x0
    # lifted problem in (x, s): min s subject to g_i(x) - s <= 0
    n = x0.size
    s0 = worst + 1.0

    def lifted_obj(z):
        g = np.zeros(n + 1)
        g[-1] = 1.0
        return z[-1], g

    def lift(con):
        def inner(z):
            ci, gi = con(z[:n])
            return ci - z[-1], np.append(np.asarray(gi, float), -1.0)
        return inner

    # the slack floor keeps the lifted problem bounded; any s < 0 will do
    lifted = ConvexProblem(
        objective=lifted_obj,
        constraints=[lift(c) for c in problem.constraints],
        lower=np.append(
            np.full(n, -np.inf) if problem.lower is None
            else np.asarray(problem.lower, float), -1.0),
        upper=None if problem.upper is None
        else np.append(np.asarray(problem.upper, float), np.inf))
    z = np.append(x0, s0)
    t = 1.0
    deep_enough = lambda zz: zz[-1] < -10.0 * opts.tol_feas  # noqa: E731
    for round_ in range(40):
        z, _ = _newton_on_barrier(lifted, z, t, opts, counter,
                                  stop_when=deep_enough)
        if deep_enough(z):
            return z[:n]
        t *= 20.0
        if len(problem.constraints) / t < opts.tol_feas:
            break
    if z[-1] <= opts.tol_feas:
        return z[:n]
    return None


def solve_convex(problem, x0, opts=None):
    """Barrier method for a smooth convex program.

    Returns a Solution whose x maps "x" to the optimizer; gap is the
    certified barrier duality gap m/t (0 when unconstrained), max_residual
    the worst constraint value.
    """
    opts = opts or SolverOptions()
    counter = [0]
    x = np.asarray(x0, dtype=float).copy()
    if x.ndim != 1:
        raise ValueError("x0 must be a vector")

    x = _strictly_feasible(problem, x, opts, counter) \
        if problem.constraints else _interior_start(problem, x)
    if x is None:
        return Solution(x={"x": np.asarray(x0, float)}, objective=np.inf,
                        max_residual=np.inf, status="infeasible",
                        iterations=counter[0],
                        runtime_ms=counter[0] * 1e-3)

    lower, upper = _bounds(problem, x.size)
    m = len(problem.constraints) + int(np.isfinite(lower).sum()) \
        + int(np.isfinite(upper).sum())
    newton_steps = 0
    if m == 0:
        x, it = _newton_on_barrier(problem, x, 1.0, opts, counter)
        newton_steps = it
        gap = 0.0
    else:
        t = 1.0
        while True:
            x, it = _newton_on_barrier(problem, x, t, opts, counter)
            newton_steps += max(it, 1)
            gap = m / t
            f0 = problem.objective(x)[0]
            if gap <= opts.tol_gap * max(1.0, abs(f0)):
                break
            if newton_steps >= 50 * opts.max_iter:
                return Solution(x={"x": x}, objective=float(f0),
                                max_residual=_worst_constraint(problem, x),
                                status="iteration-limit", gap=gap,
                                iterations=newton_steps,
                                runtime_ms=counter[0] * 1e-3)
            t *= 20.0

    f0 = float(problem.objective(x)[0])
    return Solution(x={"x": x}, objective=f0,
                    max_residual=_worst_constraint(problem, x),
                    status="optimal", gap=float(gap),
                    iterations=newton_steps, runtime_ms=counter[0] * 1e-3)


def _worst_constraint(problem, x):
    if not problem.constraints:
        return 0.0
    return float(max(con(x)[0] for con in problem.constraints))


def waterfill(gains, total_power):
    """Exact water-filling: maximize sum log2(1 + g_i p_i), sum p = total.

    Sort-based closed form; returns the optimal nonnegative allocation.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains <= 0):
        raise ValueError("gains must be positive")
    if total_power <= 0:
        return np.zeros_like(gains)
    inv = 1.0 / gains
    order = np.argsort(inv)
    inv_sorted = inv[order]
    # find the largest active set whose water level clears every floor
    active = gains.size
    while active > 1:
        level = (total_power + inv_sorted[:active].sum()) / active
        if level > inv_sorted[active - 1]:
            break
        active -= 1
    level = (total_power + inv_sorted[:active].sum()) / active
    alloc = np.zeros_like(gains)
    alloc[order[:active]] = level - inv_sorted[:active]
    return alloc
