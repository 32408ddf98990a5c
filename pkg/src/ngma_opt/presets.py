"""Named, reproducible configurations for the benchmark and the CLI.

Two families:

* sweep presets -- ScenarioConfig instances for the Monte-Carlo harness.
  "fig10-desk" shrinks the user count and surface size so that the
  certified-optimal scheme stays enumerable; "fig10-full" runs the
  full-size scenario with the heuristic schemes only; "robust-desk"
  repeats the desk run under 10% bounded channel uncertainty.
* problem presets -- small deterministic ProblemInstance builders for
  the ``solve`` and ``oracle`` commands.

Everything here is compiled in; reproduction needs no external files.
"""

import numpy as np

from .bench import ENUMERATION_LIMIT, ScenarioConfig
from .problems import IrsSumRate, NomaSumRate, OfdmaPowerMin, build_problem


def _desk(**overrides):
    base = dict(k_users=3, m_irs=6)
    base.update(overrides)
    return ScenarioConfig(**base).validate()


def sweep_preset(name):
    """Return the ScenarioConfig for a named sweep preset."""
    if name == "fig10-desk":
        # small enough that 3! orders x 4^6 phase words enumerate fast
        return _desk()
    if name == "robust-desk":
        # the robust variant tracks the two proposed schemes only
        return _desk(uncertainty_pct=10.0,
                     schemes=("optimal", "suboptimal"))
    if name == "fig10-full":
        # full-size scenario: 4^16 phase words rule out certification
        return ScenarioConfig(
            schemes=("suboptimal", "baseline1", "baseline2",
                     "baseline3")).validate()
    raise KeyError("unknown sweep preset: %s" % name)


SWEEP_PRESETS = ("fig10-desk", "robust-desk", "fig10-full")

assert 6 * 4 ** 6 <= ENUMERATION_LIMIT  # fig10-desk stays certifiable


# ------------------------------------------------------ problem presets
#
# Fixed numbers, no RNG: the oracle command must print the same value
# forever.  Gains are order-one so the instances are well-scaled.

def _ofdma_k2_m3():
    return build_problem(OfdmaPowerMin(
        subcarrier_gains=np.array([[1.0, 2.5, 0.8],
                                   [0.6, 1.8, 3.2]]),
        noise_var=1.0,
        power_budgets=np.array([6.0, 6.0]),
        min_rates=np.array([1.0, 0.8])))


def _noma_2user():
    return build_problem(NomaSumRate(
        subcarrier_gains=np.array([[1.6, 0.4]]),
        noise_vars=np.array([1.0, 1.0]),
        power_budget=10.0,
        min_rates=np.array([0.25, 0.25])))


def _irs_k2_m4():
    # hand-written complex channels; surface path deliberately strong
    # relative to the direct one so the phase choice matters
    h_direct = np.array([[0.9 + 0.2j, -0.4 + 0.6j],
                         [0.1 - 0.7j, 0.8 + 0.3j]])
    bs_irs = np.array([[0.5 + 0.1j, -0.2 + 0.4j, 0.3 - 0.3j, 0.1 + 0.6j],
                       [-0.4 + 0.2j, 0.6 + 0.1j, -0.1 - 0.5j, 0.2 + 0.2j]])
    irs_user = np.array([[0.7 - 0.1j, 0.2 + 0.5j, -0.3 + 0.2j, 0.4 + 0.1j],
                         [-0.2 + 0.3j, 0.5 - 0.4j, 0.6 + 0.1j, -0.1 + 0.2j]])
    return build_problem(IrsSumRate(
        h_direct=h_direct, bs_irs=bs_irs, irs_user=irs_user,
        noise_vars=np.array([1.0, 1.0]), power_budget=4.0,
        codebook_bits=2))


# name -> (builder, solver tag used by the solve command)
PROBLEM_PRESETS = {
    "ofdma-k2-m3": (_ofdma_k2_m3, "bnb"),
    "noma-2user": (_noma_2user, "polyblock"),
    "irs-k2-m4": (_irs_k2_m4, "bcd"),
}


def problem_preset(name):
    """Build the ProblemInstance for a named problem preset."""
    try:
        builder, _ = PROBLEM_PRESETS[name]
    except KeyError:
        raise KeyError("unknown problem preset: %s" % name)
    return builder()
