"""Beam-allocation kernels shared by the scenario benchmark schemes.

Every benchmark scheme (certified enumeration, alternating search, and
the randomized baselines) scores discrete configurations -- a decoding
order plus a set of surface phases -- with the same inner allocation:
pick the best transmit strategy from a fixed, deterministic family.
Sharing one kernel makes configurations comparable across schemes, so
"searches a superset of configurations" translates directly into
"scores at least as high", trial by trial.

The family, for effective channels h_1..h_K and a SIC gate:

* matched filter to a single user at full power,
* zero forcing over every user subset, powers water-filled,
* matched-filter superposition with power fractions from a simplex
  grid, residual interference shaped by the gate.

Each member's value is non-decreasing in the power budget, so the
kernel value is too.  With ``uncertainty`` supplied the same family is
scored by a worst-case lower bound instead: each signal modulus drops
by delta_direct*||p|| + delta_reflect*||F^H p|| (independent error
balls on the direct and reflected links) and every gated interference
modulus rises by the same slack, which keeps the bound sound for any
error realization inside the balls.

``batch_best_values`` evaluates a stack of channel draws through the
identical floating-point path as ``best_allocation``, so enumerating
configurations by batch and re-solving the winner is exact.
"""

import itertools

import numpy as np

__all__ = ["power_splits", "waterfill", "gated_value", "best_allocation",
           "batch_best_values"]


def power_splits(k_users, step=0.1):
    """All power-fraction vectors on the simplex grid with the given step.

    Stars-and-bars over ``round(1/step)`` units; returns [S, k_users]
    fractions summing to 1 in a fixed enumeration order.
    """
    units = int(round(1.0 / step))
    slots = units + k_users - 1
    rows = []
    for bars in itertools.combinations(range(slots), k_users - 1):
        prev, parts = -1, []
        for b in bars + (slots,):
            parts.append(b - prev - 1)
            prev = b
        rows.append(parts)
    return np.asarray(rows, dtype=float) / units


def _waterfill_batch(levels, budget):
    """Water-filling over [C, s] level stacks; returns [C, s] powers."""
    srt = np.sort(levels, axis=1)
    csum = np.cumsum(srt, axis=1)
    c_draws, s = levels.shape
    counts = np.arange(1, s + 1, dtype=float)
    mu_all = (budget + csum) / counts[None, :]
    feasible = mu_all >= srt
    # largest m with mu_m >= sorted level m (m=1 is always feasible)
    m_star = s - 1 - np.argmax(feasible[:, ::-1], axis=1)
    mu = mu_all[np.arange(c_draws), m_star]
    return np.maximum(0.0, mu[:, None] - levels)


def waterfill(levels, budget):
    """Water-filling powers for parallel channels.

    Maximizes sum_i log2(1 + p_i / levels_i) over p >= 0 with
    sum p = budget, where levels_i = noise_i / gain_i.
    """
    levels = np.asarray(levels, dtype=float)
    if np.any(levels <= 0):
        raise ValueError("levels must be positive")
    return _waterfill_batch(levels[None, :], float(budget))[0]


def _beam_slack(uncertainty, beams):
    """Per-(user, beam) modulus slack delta_D ||p|| + delta_R ||F^H p||."""
    bs_irs, d_direct, d_reflect = uncertainty
    norms = np.linalg.norm(beams, axis=0)
    reflected = np.linalg.norm(np.conj(bs_irs).T @ beams, axis=0)
    return (np.asarray(d_direct, dtype=float)[:, None] * norms[None, :]
            + np.asarray(d_reflect, dtype=float)[:, None]
            * reflected[None, :])


def gated_value(channels, beams, gate, noise_vars, uncertainty=None):
    """Sum rate of a gated downlink, or its worst-case lower bound.

    Args:
        channels: [K, N] effective user channels (the estimates, when
            ``uncertainty`` is given).
        beams: [N, K] per-user beam columns.
        gate: [K, K] SIC gate (1 = interference survives).
        noise_vars: [K] or scalar noise powers.
        uncertainty: None, or (bs_irs [N, M], delta_direct [K],
            delta_reflect [K]) error-ball radii.

    Returns:
        Sum rate in bits/s/Hz (a guaranteed lower bound under
        uncertainty).
    """
    channels = np.asarray(channels)
    k_users = channels.shape[0]
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k_users,))
    amp = np.abs(channels.conj() @ beams)
    if uncertainty is not None:
        slack = _beam_slack(uncertainty, beams)
        signal = np.maximum(0.0, np.diagonal(amp) - np.diagonal(slack)) ** 2
        interf = (amp + slack) ** 2
    else:
        signal = np.diagonal(amp) ** 2
        interf = amp ** 2
    off = np.asarray(gate, dtype=float) * (1.0 - np.eye(k_users))
    denom = np.sum(off * interf, axis=1) + noise
    return float(np.sum(np.log2(1.0 + signal / denom)))


def _zf_subsets(k_users, n_ant):
    subs = []
    for size in range(2, min(k_users, n_ant) + 1):
        subs.extend(itertools.combinations(range(k_users), size))
    return subs


def _batch_inverse(gram):
    """Batched Hermitian inverse with a per-draw singularity mask."""
    c_draws, s = gram.shape[0], gram.shape[1]
    bad = np.zeros(c_draws, dtype=bool)
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        inv = np.empty_like(gram)
        for c in range(c_draws):
            try:
                inv[c] = np.linalg.inv(gram[c])
            except np.linalg.LinAlgError:
                inv[c] = np.eye(s)
                bad[c] = True
    return inv, bad


def _zf_solve(channels, subset, noise, power_budget):
    """Zero-forcing directions and water-filled powers for one subset.

    Returns (raw [C, N, s], inv_diag [C, s], powers [C, s], bad [C]);
    raw columns satisfy h_i^H raw_j = delta_ij and |raw_j|^2 equals
    inv_diag_j, so the unit direction gain is 1/inv_diag_j.
    """
    rows = channels[:, list(subset), :].conj()
    gram = np.einsum("csn,ctn->cst", rows, rows.conj())
    inv, bad = _batch_inverse(gram)
    inv_diag = np.real(np.diagonal(inv, axis1=1, axis2=2))
    bad |= ~np.all(np.isfinite(inv_diag) & (inv_diag > 0), axis=1)
    safe_diag = np.where(bad[:, None], 1.0, inv_diag)
    raw = np.einsum("csn,cst->cnt", rows.conj(), inv)
    levels = noise[list(subset)][None, :] * safe_diag
    powers = _waterfill_batch(levels, power_budget)
    return raw, safe_diag, powers, bad


def _family_scores(channels, gate, power_budget, noise, split_step,
                   uncertainty):
    """Score every draw in a [C, K, N] stack against the whole family.

    Returns (values [C], family [C], arg [C]) where family indexes
    {0: matched filter, 1: zero forcing, 2: superposition} and arg the
    winner inside the family (user, subset id, or split row).
    """
    c_draws, k_users, _ = channels.shape
    p_max = float(power_budget)
    off = np.asarray(gate, dtype=float) * (1.0 - np.eye(k_users))
    norms2 = np.einsum("ckn,ckn->ck", channels.conj(), channels).real
    norms = np.sqrt(norms2)
    safe = np.where(norms > 0, norms, 1.0)
    diag_idx = np.arange(k_users)

    if uncertainty is not None:
        bs_irs, d_direct, d_reflect = uncertainty
        d_direct = np.asarray(d_direct, dtype=float)
        d_reflect = np.asarray(d_reflect, dtype=float)
        fh = np.einsum("nm,ckn->ckm", np.conj(bs_irs), channels)
        refn = np.sqrt(np.einsum("ckm,ckm->ck", fh.conj(), fh).real) / safe
        slack_unit = (d_direct[None, :, None]
                      + d_reflect[None, :, None] * refn[:, None, :])
        slack_diag = slack_unit[:, diag_idx, diag_idx]
    else:
        bs_irs = d_direct = d_reflect = None
        slack_unit = slack_diag = None

    # family 0: matched filter to one user at full power
    if uncertainty is None:
        per_user = np.log2(1.0 + p_max * norms2 / noise[None, :])
    else:
        lb = np.sqrt(p_max) * np.maximum(0.0, norms - slack_diag)
        per_user = np.log2(1.0 + lb ** 2 / noise[None, :])
    mf_arg = np.argmax(per_user, axis=1)
    mf_vals = per_user[np.arange(c_draws), mf_arg]

    # family 1: zero forcing over user subsets, powers water-filled on
    # the nominal interference-free gains
    subsets = _zf_subsets(k_users, channels.shape[2])
    zf_vals = np.full(c_draws, -np.inf)
    zf_arg = np.zeros(c_draws, dtype=int)
    for s_id, subset in enumerate(subsets):
        raw, inv_diag, powers, bad = _zf_solve(channels, subset, noise,
                                               p_max)
        if uncertainty is None:
            levels = noise[list(subset)][None, :] * inv_diag
            vals = np.sum(np.log2(1.0 + powers / levels), axis=1)
        else:
            fr = np.einsum("nm,cnt->cmt", np.conj(bs_irs), raw)
            ref = (np.sqrt(np.einsum("cmt,cmt->ct", fr.conj(), fr).real)
                   / np.sqrt(inv_diag))
            sub = list(subset)
            su = (d_direct[sub][None, :, None]
                  + d_reflect[sub][None, :, None] * ref[:, None, :])
            sig = powers * np.maximum(
                0.0, 1.0 / np.sqrt(inv_diag)
                - su[:, np.arange(len(sub)), np.arange(len(sub))]) ** 2
            itf = off[np.ix_(sub, sub)][None] * powers[:, None, :] * su ** 2
            den = np.sum(itf, axis=2) + noise[sub][None, :]
            vals = np.sum(np.log2(1.0 + sig / den), axis=1)
        vals = np.where(bad, -np.inf, vals)
        better = vals > zf_vals
        zf_vals = np.where(better, vals, zf_vals)
        zf_arg = np.where(better, s_id, zf_arg)

    # family 2: matched-filter superposition over the split grid
    fracs = power_splits(k_users, split_step)
    cross = np.einsum("ckn,crn->ckr", channels.conj(), channels)
    amp = np.abs(cross) / safe[:, None, :]
    amp_diag = amp[:, diag_idx, diag_idx]
    if uncertainty is None:
        eff_sig = amp_diag ** 2
        eff_itf = off[None] * amp ** 2
    else:
        eff_sig = np.maximum(0.0, amp_diag - slack_diag) ** 2
        eff_itf = off[None] * (amp + slack_unit) ** 2
    num = p_max * np.einsum("ck,sk->csk", eff_sig, fracs)
    den = (p_max * np.einsum("ckr,sr->csk", eff_itf, fracs)
           + noise[None, None, :])
    per_split = np.sum(np.log2(1.0 + num / den), axis=2)
    noma_arg = np.argmax(per_split, axis=1)
    noma_vals = per_split[np.arange(c_draws), noma_arg]

    stacked = np.stack([mf_vals, zf_vals, noma_vals])
    family = np.argmax(stacked, axis=0)
    values = stacked[family, np.arange(c_draws)]
    arg = np.choose(family, [mf_arg, zf_arg, noma_arg])
    return values, family, arg


def batch_best_values(channels, gate, power_budget, noise_vars,
                      split_step=0.1, uncertainty=None):
    """Kernel values for a stack of channel draws: [C, K, N] -> [C].

    Same family and tie-break order as best_allocation, evaluated for
    every draw at once; re-solving the argmax draw with
    best_allocation reproduces its value exactly.
    """
    channels = np.asarray(channels, dtype=complex)
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float),
                            (channels.shape[1],))
    values, _, _ = _family_scores(channels, gate, power_budget, noise,
                                  split_step, uncertainty)
    return values


def best_allocation(channels, gate, power_budget, noise_vars,
                    split_step=0.1, uncertainty=None):
    """Best (value, beams) over the kernel's strategy family.

    Args:
        channels: [K, N] effective channels.
        gate: [K, K] SIC gate from the decoding order.
        power_budget: total transmit power (linear).
        noise_vars: [K] or scalar noise powers.
        split_step: simplex grid step for superposition fractions.
        uncertainty: optional error-ball triple (bs_irs, delta_direct,
            delta_reflect); switches the score to the worst-case bound.

    Returns:
        (value, beams [N, K]); ties resolve toward the earlier family.
    """
    channels = np.asarray(channels, dtype=complex)
    k_users, n_ant = channels.shape
    noise = np.broadcast_to(np.asarray(noise_vars, dtype=float), (k_users,))
    values, family, arg = _family_scores(channels[None], gate, power_budget,
                                         noise, split_step, uncertainty)
    value, fam, idx = float(values[0]), int(family[0]), int(arg[0])
    norms = np.linalg.norm(channels, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    beams = np.zeros((n_ant, k_users), dtype=complex)
    if fam == 0:
        beams[:, idx] = np.sqrt(power_budget) * channels[idx] / safe[idx]
    elif fam == 1:
        subset = _zf_subsets(k_users, n_ant)[idx]
        raw, inv_diag, powers, _ = _zf_solve(channels[None], subset, noise,
                                             float(power_budget))
        for slot, user in enumerate(subset):
            direction = raw[0, :, slot] / np.linalg.norm(raw[0, :, slot])
            beams[:, user] = np.sqrt(powers[0, slot]) * direction
    else:
        frac = power_splits(k_users, split_step)[idx]
        directions = (channels / safe[:, None]).T
        beams = directions * np.sqrt(power_budget * frac)[None, :]
    return value, beams
