"""Shared solver option bundle (separate module to avoid import cycles)."""

from dataclasses import dataclass


@dataclass
class SolverOptions:
    """Shared solver knobs; tolerances must stay positive."""

    tol_gap: float = 1e-6       # relative optimality gap
    tol_feas: float = 1e-9      # absolute feasibility tolerance
    max_iter: int = 200
    max_nodes: int = 100000     # branch-and-bound budget
    max_vertices: int = 10000   # polyblock budget
    seed: int = 0               # randomized extraction streams

    def __post_init__(self):
        if self.tol_gap <= 0 or self.tol_feas <= 0:
            raise ValueError("tolerances must be positive")
