"""Optimization procedures: global methods, local refinements, an oracle.

Layout:

- convex      log-barrier damped-Newton kernel for smooth convex blocks
- exhaustive  budget-guarded enumeration oracle
- bnb         branch-and-bound over binary schedules with envelope bounds
- polyblock   monotone outer approximation in the SINR domain
- sca         successive convex approximation with surrogate subproblems
- bcd         block coordinate updates with per-block solver dispatch
- sdr         semidefinite relaxation via alternating projections

Every solver is deterministic given (instance, options, seed) and reports
runtime_ms as a deterministic work proxy (evaluation count in microseconds)
so result files are reproducible byte-for-byte across machines.
"""

from ._options import SolverOptions
from .bcd import solve_bcd
from .bnb import solve_bnb
from .convex import ConvexProblem, solve_convex, waterfill
from .exhaustive import solve_exhaustive
from .polyblock import solve_polyblock
from .sca import solve_sca
from .sdr import solve_sdr_beamforming

__all__ = [
    "SolverOptions",
    "ConvexProblem",
    "solve_convex",
    "waterfill",
    "solve_exhaustive",
    "solve_bnb",
    "solve_polyblock",
    "solve_sca",
    "solve_bcd",
    "solve_sdr_beamforming",
]
