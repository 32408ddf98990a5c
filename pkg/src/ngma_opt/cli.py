"""Command-line entry point: sweeps, single solves, and oracle values.

Commands:

* ``run-sweep``     Monte-Carlo power sweep (CSV out), preset and/or
                    key = value config file, deterministic under --jobs.
* ``solve``         solve a named problem preset and print the solution
                    as key = value lines.
* ``oracle``        print an exhaustive/grid reference value for a
                    named problem preset.
* ``list-presets``  list sweep and problem preset names.

Config files are line-based ``key = value`` with ``#`` comments and no
nesting.  Unknown or duplicate keys are errors naming the line; values
left out fall back to the scenario defaults (or the chosen preset).
Exit codes: 0 success, 1 solver reports infeasibility, 2 configuration
error.
"""

import argparse
import itertools
import os
import sys
import time
from dataclasses import fields, replace

import numpy as np

from .beams import best_allocation
from .bench import SCHEMES, ScenarioConfig, run_fig10_sweep, run_robust_variant
from .channels import irs_effective_channel
from .metrics import alpha_from_order
from .presets import PROBLEM_PRESETS, SWEEP_PRESETS, problem_preset, sweep_preset
from .problems import Solution, phase_codebook
from .solvers import solve_bcd, solve_bnb, solve_exhaustive, solve_polyblock
from .solvers.bcd import surface_block_solvers
from .solvers.bnb import ofdma_leaf, ofdma_relaxer


class ConfigError(ValueError):
    """Malformed configuration input; message names line and key."""


_INT_KEYS = ("n_antennas", "k_users", "m_irs", "phase_bits", "trials",
             "seed")
_FLOAT_KEYS = ("cell_radius_m", "bs_irs_dist_m", "pathloss_exp",
               "rician_k", "noise_dbm", "ref_gain_db", "carrier_hz",
               "uncertainty_pct")
_CONFIG_KEYS = tuple(f.name for f in fields(ScenarioConfig))


def _convert(key, value, lineno):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key == "p_max_dbm_list":
            toks = [t for t in value.replace(",", " ").split() if t]
            if not toks:
                raise ValueError
            return tuple(float(t) for t in toks)
        if key == "schemes":
            toks = tuple(t.strip() for t in value.split(",") if t.strip())
            if not toks:
                raise ValueError
            return toks
    except ValueError:
        raise ConfigError("line %d: key '%s' got unparseable value '%s'"
                          % (lineno, key, value))
    raise ConfigError("line %d: unknown key '%s'" % (lineno, key))


def parse_config(text, base=None):
    """Apply `key = value` lines onto a base ScenarioConfig.

    Raises ConfigError (with the offending line number) for unknown
    keys, duplicates, missing '=', or unparseable values.
    """
    cfg = base if base is not None else ScenarioConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("line %d: expected 'key = value', got '%s'"
                              % (lineno, line))
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError("line %d: unknown key '%s'" % (lineno, key))
        if key in seen:
            raise ConfigError("line %d: duplicate key '%s'" % (lineno, key))
        seen.add(key)
        cfg = replace(cfg, **{key: _convert(key, value, lineno)})
    return cfg


def serialize_config(cfg):
    """Config as `key = value` text; parse_config round-trips it."""
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _INT_KEYS:
            text = "%d" % value
        elif f.name in _FLOAT_KEYS:
            text = "%.9g" % value
        elif f.name == "p_max_dbm_list":
            text = ", ".join("%.9g" % v for v in value)
        else:
            text = ", ".join(value)
        lines.append("%s = %s" % (f.name, text))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- commands


def _load_sweep_config(args):
    base = sweep_preset(args.preset) if args.preset else ScenarioConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = parse_config(fh.read(), base)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        base = replace(base, seed=args.seed)
    if args.scheme:
        names = tuple(t.strip() for t in args.scheme.split(",") if t.strip())
        unknown = set(names) - set(SCHEMES)
        if unknown:
            raise ConfigError("--scheme: unknown scheme(s) %s"
                              % ", ".join(sorted(unknown)))
        base = replace(base, schemes=names)
    return base.validate()


def _cmd_run_sweep(args):
    cfg = _load_sweep_config(args)
    jobs = args.jobs if args.jobs else (os.cpu_count() or 1)
    runner = run_robust_variant if cfg.uncertainty_pct > 0 else run_fig10_sweep
    start = time.perf_counter()
    report = runner(cfg, jobs=jobs)
    elapsed = time.perf_counter() - start
    if args.out:
        report.write_csv(args.out)
    else:
        sys.stdout.write(report.to_csv())
    print("run-sweep: %d rows in %.2f s" % (len(report.rows), elapsed),
          file=sys.stderr)
    return 0


def _entry_text(value):
    if np.iscomplexobj(np.asarray(value)):
        return "%.9g%+.9gj" % (value.real, value.imag)
    return "%.9g" % value


def _print_solution(sol):
    print("objective = %.9g" % sol.objective)
    print("status = %s" % sol.status)
    print("gap = %s" % ("none" if sol.gap is None else "%.9g" % sol.gap))
    print("iterations = %d" % sol.iterations)
    print("max_residual = %.9g" % sol.max_residual)
    for name in sorted(sol.x):
        flat = np.asarray(sol.x[name]).ravel()
        print("x.%s = %s" % (name, " ".join(_entry_text(v) for v in flat)))


def _surface_start(data):
    book = phase_codebook(data.codebook_bits)
    k_users, n_ant = data.h_direct.shape
    return {"beams": np.zeros((n_ant, k_users), dtype=complex),
            "phases": np.full(data.bs_irs.shape[1], book[0]),
            "order_gates": alpha_from_order(np.arange(k_users)).astype(float)}


def _effective_rows(data, psi):
    return np.stack([irs_effective_channel(data.h_direct[k], data.bs_irs,
                                           data.irs_user[k], psi)
                     for k in range(data.h_direct.shape[0])])


def _irs_joint_enumeration(inst):
    """Certified best over decoding orders x full phase codebook."""
    data = inst.data
    book = phase_codebook(data.codebook_bits)
    m_elems = data.bs_irs.shape[1]
    k_users = data.h_direct.shape[0]
    best, best_x, count = -np.inf, None, 0
    for perm in itertools.permutations(range(k_users)):
        gate = alpha_from_order(np.asarray(perm)).astype(float)
        for combo in itertools.product(book, repeat=m_elems):
            psi = np.asarray(combo)
            value, beams = best_allocation(
                _effective_rows(data, psi), gate,
                data.power_budget, data.noise_vars)
            count += 1
            if value > best:
                best = value
                best_x = {"beams": beams, "phases": psi,
                          "order_gates": gate}
    return Solution(x=best_x, objective=best, max_residual=0.0,
                    status="optimal", gap=0.0, iterations=count)


def _solve_preset(name, exact):
    inst = problem_preset(name)
    _, tag = PROBLEM_PRESETS[name]
    if exact:                       # oracle path: reference values only
        if tag == "bnb":
            return solve_exhaustive(inst, leaf_solver=ofdma_leaf)
        if tag == "polyblock":
            budget = inst.data.power_budget
            return solve_exhaustive(
                inst, grids={"powers": np.linspace(0.0, budget, 161)})
        return _irs_joint_enumeration(inst)
    if tag == "bnb":
        return solve_bnb(inst, ofdma_relaxer)
    if tag == "polyblock":
        return solve_polyblock(inst)
    return solve_bcd(inst, _surface_start(inst.data),
                     surface_block_solvers(inst))


def _cmd_solve(args, exact=False):
    if args.preset not in PROBLEM_PRESETS:
        raise ConfigError("unknown problem preset '%s' (have: %s)"
                          % (args.preset, ", ".join(sorted(PROBLEM_PRESETS))))
    start = time.perf_counter()
    sol = _solve_preset(args.preset, exact)
    elapsed = time.perf_counter() - start
    _print_solution(sol)
    print("%s: %s in %.2f s" % ("oracle" if exact else "solve",
                                args.preset, elapsed), file=sys.stderr)
    return 1 if sol.status == "infeasible" else 0


def _cmd_list_presets(_args):
    for name in SWEEP_PRESETS:
        print(name)
    for name in sorted(PROBLEM_PRESETS):
        print(name)
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ngma-opt",
        description="Resource-allocation solvers and the reflecting-surface "
                    "NOMA benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("run-sweep", help="Monte-Carlo power sweep (CSV)")
    sweep.add_argument("--config", help="key = value config file")
    sweep.add_argument("--out", help="CSV output path (default: stdout)")
    sweep.add_argument("--seed", type=int, help="seed override (wins over "
                                                "config)")
    sweep.add_argument("--preset", help="sweep preset name")
    sweep.add_argument("--scheme", help="comma-separated scheme filter")
    sweep.add_argument("--jobs", type=int, help="worker processes "
                                                "(default: all cores)")
    sweep.set_defaults(fn=_cmd_run_sweep)

    solve = sub.add_parser("solve", help="solve a problem preset")
    solve.add_argument("--preset", required=True, help="problem preset name")
    solve.set_defaults(fn=_cmd_solve)

    oracle = sub.add_parser("oracle", help="exhaustive reference value for "
                                           "a problem preset")
    oracle.add_argument("--preset", required=True, help="problem preset name")
    oracle.set_defaults(fn=lambda a: _cmd_solve(a, exact=True))

    lister = sub.add_parser("list-presets", help="list preset names")
    lister.set_defaults(fn=_cmd_list_presets)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, KeyError) as exc:
        print("error: %s" % (exc.args[0] if exc.args else exc),
              file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
