"""Successive convex approximation with a monotone safeguard.

Maximizes a smooth (generally non-concave) objective over a convex set by
repeatedly solving first-order surrogate subproblems: the objective is
linearized at the current iterate while the constraints stay exact, the
surrogate is solved with the interior-point kernel, and the step is
backtracked along the segment to the surrogate optimum until the true
objective does not decrease.  The segment stays feasible because the
constraint set is convex, so every iterate is feasible and the objective
trace is non-decreasing by construction.

The module also provides the adapter for the dual-function
communication-centric design: beams are flattened to a real vector, and
the sum-rate objective (each user equalizes the shared waveform; residual
distortion acts as noise) gets an analytic gradient derived through the
distortion quadratic.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from ..numerics import eig_hermitian
from ..problems import Solution
from ._options import SolverOptions
from .convex import ConvexProblem, solve_convex


@dataclass
class ScaModel:
    """Smooth maximization model: objective returns (value, gradient).

    When project is given (Euclidean projection onto the feasible set),
    the proximal surrogate is solved exactly as a projection instead of
    running the interior-point kernel on it.
    """

    objective: callable
    constraints: list = field(default_factory=list)
    lower: np.ndarray = None
    upper: np.ndarray = None
    project: callable = None


def solve_sca(model, x0, opts=None, trace_out=None):
    """Run SCA from x0 (must satisfy the convex constraints).

    Returns a Solution over the flat vector ("x" key); status "optimal"
    means the scaled proximal-step residual -- a first-order
    stationarity measure that vanishes exactly at KKT points -- fell
    below opts.tol_gap, and the final residual is reported as gap.  The
    objective value sequence never decreases (enforced by segment
    backtracking; an exhausted backtrack keeps the current iterate and
    terminates); trace_out, if a list, collects it.
    """
    opts = opts or SolverOptions()
    x = np.asarray(x0, dtype=float).copy()
    val, grad = model.objective(x)
    for g in model.constraints:
        if g(x)[0] > opts.tol_feas:
            raise ValueError("starting point violates a constraint")
    if trace_out is not None:
        trace_out.append(float(val))
    evals = 1
    status = "iteration-limit"
    res = np.inf
    # proximal weight keeps the surrogate strongly concave, so the SCA
    # fixpoint satisfies the first-order conditions of the true
    # problem; full steps retune it to the secant curvature
    # (Barzilai-Borwein) and backtracks stiffen it
    rho = 0.5 * np.linalg.norm(grad) / max(1.0, np.linalg.norm(x))
    if rho <= 0:
        rho = 1.0
    rho_lo, rho_hi = rho * 1e-6, rho * 1e9
    # the subproblem gap translates into iterate noise ~ sqrt(gap / rho),
    # so it must sit well below the outer tolerance
    inner = replace(opts, tol_gap=max(opts.tol_gap * 1e-3, 1e-12))

    for it in range(1, opts.max_iter + 1):
        gj = grad.copy()
        anchor = x.copy()
        if model.project is not None:
            # the proximal surrogate optimum is exactly the projection
            # of the gradient step onto the feasible set
            x_hat = np.asarray(model.project(anchor + gj / rho))
        else:
            sub = ConvexProblem(
                objective=lambda z: (
                    -float(gj @ z) + 0.5 * rho * float((z - anchor)
                                                       @ (z - anchor)),
                    -gj + rho * (z - anchor)),
                constraints=model.constraints,
                lower=model.lower, upper=model.upper)
            try:
                step = solve_convex(sub, x, inner)
            except ValueError as exc:
                raise ValueError("surrogate subproblem failed") from exc
            if step.status == "infeasible":
                raise ValueError("surrogate subproblem infeasible")
            x_hat = step.x["x"]
        direction = x_hat - x
        # rho * direction is the proximal-map residual: it vanishes
        # exactly at first-order stationary points of the true problem
        res = rho * np.linalg.norm(direction) \
            / max(1.0, np.linalg.norm(gj))
        if res <= opts.tol_gap or np.linalg.norm(direction) <= 1e-12:
            status = "optimal"
            break

        alpha = 1.0
        accepted = False
        for _ in range(50):
            cand = x + alpha * direction
            cand_val, cand_grad = model.objective(cand)
            evals += 1
            if cand_val >= val - 1e-12 * max(1.0, abs(val)):
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            # cannot move without losing objective value: floating-point
            # stationary, though the residual may not certify it
            status = "optimal" if res <= opts.tol_gap * 100 else "feasible"
            break
        dx = cand - x
        dg = cand_grad - grad
        x, val, grad = cand, cand_val, cand_grad
        if trace_out is not None:
            trace_out.append(float(val))
        if alpha < 1.0:
            rho = min(rho * 2.0, rho_hi)
        else:
            curvature = -float(dx @ dg)      # > 0 where locally concave
            if curvature > 0:
                rho = min(max(curvature / float(dx @ dx), rho_lo),
                          rho_hi)

    residual = max((g(x)[0] for g in model.constraints), default=0.0)
    return Solution(x={"x": x}, objective=float(val),
                    max_residual=float(max(residual, 0.0)),
                    status=status, gap=float(res), iterations=it,
                    runtime_ms=evals * 1e-3)


# ------------------------------------------- dual-function design adapter


def _split(x, n_antennas, k_users):
    half = n_antennas * k_users
    return (x[:half] + 1j * x[half:]).reshape(n_antennas, k_users)


def _flatten(beams):
    return np.concatenate([beams.real.ravel(), beams.imag.ravel()])


def isac_model(instance):
    """ScaModel for an IsacCommCentric instance, plus pack/unpack helpers.

    Returns (model, pack, unpack) where pack maps a beam matrix to the
    flat real vector and unpack inverts it.  Gradients are analytic
    (derived through the per-user distortion quadratic and the two
    constraint quadratics); isac_gradient_check exercises them against
    central differences.
    """
    if instance.kind != "IsacCommCentric":
        raise ValueError("expected an IsacCommCentric instance")
    data = instance.data
    channels = np.asarray(data.comm_channels)        # [K, N] rows h^(k)
    symbols = np.asarray(data.symbols)               # [K, L]
    target = np.asarray(data.target_pattern)         # [N, L]
    k_users, n_antennas = channels.shape
    noise = np.broadcast_to(np.asarray(data.noise_vars, float),
                            (k_users,))
    length = symbols.shape[1]
    gram = symbols @ symbols.conj().T                # [K, K]

    def objective(x):
        beams = _split(x, n_antennas, k_users)
        tx = beams @ symbols                         # [N, L]
        val = 0.0
        grad = np.zeros_like(beams)
        for k in range(k_users):
            h = channels[k]
            sym = symbols[k]
            power = float(np.mean(np.abs(sym) ** 2))
            resid = h @ tx - sym                     # [L]
            q = float(np.mean(np.abs(resid) ** 2))
            denom = q + noise[k]
            val += np.log2(1.0 + power / denom)
            dq = -power / (np.log(2.0) * denom * (denom + power))
            grad += dq * np.conj(h)[:, None] \
                * (resid @ symbols.conj().T)[None, :] / length
        return float(val), _flatten_grad(grad)

    def _flatten_grad(g):
        return np.concatenate([2.0 * g.real.ravel(), 2.0 * g.imag.ravel()])

    budget = float(data.power_budget)
    tol = float(data.pattern_tolerance)

    def power_con(x):
        beams = _split(x, n_antennas, k_users)
        val = float(np.real(np.trace(
            symbols.conj().T @ beams.conj().T @ beams @ symbols))) / length
        grad = beams @ gram / length
        return val - budget, _flatten_grad(grad)

    def pattern_con(x):
        beams = _split(x, n_antennas, k_users)
        diff = beams @ symbols - target
        val = float(np.sum(np.abs(diff) ** 2)) / length
        grad = diff @ symbols.conj().T / length
        return val - tol, _flatten_grad(grad)

    # both feasible-set pieces are quadratic in the beams, so Euclidean
    # projections reduce to a multiplier search in the symbol Gram
    # eigenbasis; Dykstra couples the two
    geig = eig_hermitian(gram)
    modes = np.maximum(np.real(geig.values), 0.0)
    basis = geig.vectors
    pattern_mat = target @ symbols.conj().T          # [N, K]

    def _proj_power(q_mat):
        rotated = q_mat @ basis
        weights = np.sum(np.abs(rotated) ** 2, axis=0)
        cap = budget * length

        def used(nu):
            return float(np.sum(weights * modes / (1 + nu * modes) ** 2))

        if used(0.0) <= cap:
            return q_mat
        hi = 1.0
        while used(hi) > cap:
            hi *= 2.0
        lo = 0.0
        for _ in range(100):
            nu = 0.5 * (lo + hi)
            if used(nu) > cap:
                lo = nu
            else:
                hi = nu
        return (rotated / (1 + hi * modes)[None, :]) @ basis.conj().T

    def _proj_pattern(q_mat):
        cap = tol * length

        def point(nu):
            rotated = (q_mat + nu * pattern_mat) @ basis
            return (rotated / (1 + nu * modes)[None, :]) @ basis.conj().T

        def miss(nu):
            return float(np.sum(np.abs(point(nu) @ symbols - target) ** 2))

        if miss(0.0) <= cap:
            return q_mat
        hi = 1.0
        while miss(hi) > cap:
            hi *= 2.0
            if hi > 1e18:
                raise ValueError("pattern tolerance is unreachable")
        lo = 0.0
        for _ in range(100):
            nu = 0.5 * (lo + hi)
            if miss(nu) > cap:
                lo = nu
            else:
                hi = nu
        return point(hi)

    def project(z):
        p = _split(np.asarray(z, dtype=float), n_antennas, k_users)
        mem_a = np.zeros_like(p)
        mem_b = np.zeros_like(p)
        for _ in range(300):
            prev = p
            y = p + mem_a
            p = _proj_power(y)
            mem_a = y - p
            y = p + mem_b
            p = _proj_pattern(y)
            mem_b = y - p
            if np.linalg.norm(p - prev) <= 1e-13 * max(
                    1.0, np.linalg.norm(p)):
                break
        return _flatten(p)

    model = ScaModel(objective=objective,
                     constraints=[power_con, pattern_con],
                     project=project)

    def pack(beams):
        return _flatten(np.asarray(beams, dtype=complex))

    def unpack(x):
        return _split(np.asarray(x, dtype=float), n_antennas, k_users)

    return model, pack, unpack


def gradient_check(fn, x, step=1e-6):
    """Max abs error of fn's reported gradient vs central differences."""
    x = np.asarray(x, dtype=float)
    _, grad = fn(x)
    worst = 0.0
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        hi = fn(x + e)[0]
        lo = fn(x - e)[0]
        worst = max(worst, abs((hi - lo) / (2 * step) - grad[i]))
    return worst
