"""Budget-guarded enumeration oracle.

Enumerates every binary assignment (optionally crossed with declared value
grids for continuous entries, or closed by a per-leaf continuous solver)
and returns the best feasible point.  Refuses oversized instances at
declaration time rather than silently truncating, so a returned Solution
from this module is a trustworthy reference value.
"""

import itertools

import numpy as np

from ..problems import Solution, check_feasibility, evaluate_objective
from ._options import SolverOptions

MAX_BINARIES = 20
MAX_GRID_DIMS = 3


def _block_sizes(instance, kind):
    return [(b, int(np.prod(b.shape))) for b in instance.layout
            if b.kind == kind]


def solve_exhaustive(instance, grids=None, leaf_solver=None, opts=None):
    """Full enumeration over binaries x (grids | per-leaf solve).

    Args:
        instance: ProblemInstance.
        grids: dict block name -> 1D candidate values, used for every scalar
            entry of that continuous block (required when the instance has
            continuous blocks and no leaf_solver).
        leaf_solver: optional (instance, binary_assignment) -> dict of the
            remaining variable blocks, or None when the leaf is infeasible.
            When given, it must close all non-binary blocks exactly.
        opts: SolverOptions.

    Returns:
        Solution; status "optimal" with gap 0 when the continuous part is
        closed exactly (pure-discrete or leaf_solver), otherwise "feasible"
        with gap reporting the coarsest grid spacing.
    """
    opts = opts or SolverOptions()
    binaries = _block_sizes(instance, "binary")
    continuous = _block_sizes(instance, "continuous")
    complexes = _block_sizes(instance, "complex")

    n_bin = sum(size for _, size in binaries)
    if n_bin > MAX_BINARIES:
        raise ValueError("enumeration budget exceeded: %d binaries > %d"
                         % (n_bin, MAX_BINARIES))
    grid_axes = []
    exact = True
    if leaf_solver is None:
        if complexes:
            raise ValueError("complex blocks need a leaf_solver to close")
        n_cont = sum(size for _, size in continuous)
        if n_cont > MAX_GRID_DIMS:
            raise ValueError("enumeration budget exceeded: %d continuous "
                             "dims > %d" % (n_cont, MAX_GRID_DIMS))
        if n_cont:
            exact = False
            grids = grids or {}
            for blk, size in continuous:
                if blk.name not in grids:
                    raise ValueError("no grid declared for continuous "
                                     "block '%s'" % blk.name)
                axis = np.asarray(grids[blk.name], dtype=float)
                grid_axes.extend([(blk.name, i, axis) for i in range(size)])

    best = None
    best_val = None
    sign = 1.0 if instance.sense == "max" else -1.0
    evals = 0

    for bits in itertools.product((0.0, 1.0), repeat=n_bin):
        assignment = {}
        at = 0
        for blk, size in binaries:
            assignment[blk.name] = np.array(
                bits[at:at + size], dtype=float).reshape(blk.shape)
            at += size

        if leaf_solver is not None:
            rest = leaf_solver(instance, assignment)
            candidates = [] if rest is None else [rest]
        elif grid_axes:
            candidates = []
            for combo in itertools.product(
                    *[axis for _, _, axis in grid_axes]):
                point = {}
                for (name, idx, _), val in zip(grid_axes, combo):
                    arr = point.setdefault(
                        name, np.zeros(instance.block(name).shape).ravel())
                    arr[idx] = val
                candidates.append({nm: v.reshape(instance.block(nm).shape)
                                   for nm, v in point.items()})
        else:
            candidates = [{}]

        for rest in candidates:
            x = dict(assignment)
            x.update(rest)
            evals += 1
            feasible, _ = check_feasibility(instance, x, tol=opts.tol_feas)
            if not feasible:
                continue
            val = evaluate_objective(instance, x)
            if best_val is None or sign * val > sign * best_val:
                best_val = val
                best = x

    runtime = evals * 1e-3
    if best is None:
        return Solution(x={}, objective=np.inf * -sign,
                        max_residual=np.inf, status="infeasible",
                        iterations=evals, runtime_ms=runtime)
    _, residuals = check_feasibility(instance, best, tol=opts.tol_feas)
    if exact:
        return Solution(x=best, objective=best_val,
                        max_residual=float(residuals.max()),
                        status="optimal", gap=0.0, iterations=evals,
                        runtime_ms=runtime)
    spacing = max(float(np.max(np.diff(np.sort(axis)), initial=0.0))
                  for _, _, axis in grid_axes)
    return Solution(x=best, objective=best_val,
                    max_residual=float(residuals.max()),
                    status="feasible", gap=spacing, iterations=evals,
                    runtime_ms=runtime)
