"""Resource-allocation optimization toolkit for next-generation multiple access.

Subpackages / modules:

- ``numerics``   dense complex linear-algebra kernels and deterministic RNG
- ``channels``   channel generators (Rician, UPA/UAV, IRS cascade, fluid/movable
                 antennas, delay-Doppler grids) and CSI perturbation
- ``metrics``    achievable rates, SINRs, sensing and energy metrics
- ``problems``   problem builders + feasibility checking for the eight
                 allocation problems covered by the toolkit
- ``solvers``    convex barrier solver, SDR beamforming, branch-and-bound,
                 polyblock outer approximation, SCA, BCD, exhaustive search
- ``beams``      shared downlink beam-allocation kernel used by the benchmark
- ``bench``      Monte-Carlo sum-rate benchmark (sweep over transmit power)
- ``cli``        command-line interface
"""

__version__ = "0.1.0"

from . import numerics  # noqa: F401  (establishes the eigensolver backend)
