"""Channel generation for the scenarios covered by the toolkit.

Conventions used throughout:

- distances in meters, carrier frequency in Hz, powers in mW, noise in mW;
- large-scale pathloss is ``ref_gain * d^(-pathloss_exp)`` with ``ref_gain``
  the linear gain at 1 m (default -30 dB);
- small-scale fading is Rician: sqrt(k/(1+k)) * LoS + sqrt(1/(1+k)) * CN(0,1),
  so the per-entry mean power equals the pathloss for any Rician factor;
- complex vectors are 1-D numpy arrays, matrices are 2-D [rows, cols].
"""

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 299792458.0


@dataclass
class DdPath:
    """One propagation path on a delay-Doppler grid.

    Attributes:
        delay: integer delay tap, 0 <= delay < m_delay.
        doppler: integer Doppler bin, |doppler| < n_doppler / 2.
        gain: complex path gain (twist phases folded in).
    """

    delay: int
    doppler: int
    gain: complex


def gen_rician(rng, rows, cols, distance_m, pathloss_exp, rician_k,
               ref_gain_db=-30.0, los_direction=None):
    """Draw a Rician-faded channel matrix with distance pathloss.

    Args:
        rng: numerics.Rng stream.
        rows, cols: matrix shape (cols=1 gives a column for vector links).
        distance_m: link distance in meters (> 0).
        pathloss_exp: pathloss exponent (e.g. 3).
        rician_k: Rician factor kappa >= 0 (0 = pure Rayleigh).
        ref_gain_db: pathloss at 1 m reference distance, in dB.
        los_direction: optional [rows] unit-modulus vector for the LoS
            component; default is the all-ones rank-1 LoS.

    Returns:
        [rows, cols] complex matrix; E|entry|^2 = ref_gain * d^(-exp).
    """
    if distance_m <= 0:
        raise ValueError("distance_m must be positive")
    if rician_k < 0:
        raise ValueError("rician_k must be non-negative")
    pathloss = 10.0 ** (ref_gain_db / 10.0) * distance_m ** (-pathloss_exp)
    if los_direction is None:
        los = np.ones((rows, cols), dtype=complex)
    else:
        los_direction = np.asarray(los_direction, dtype=complex)
        if los_direction.shape != (rows,):
            raise ValueError("los_direction must have shape (rows,)")
        los = np.repeat(los_direction[:, None], cols, axis=1)
    nlos = rng.complex_normal((rows, cols))
    w_los = np.sqrt(rician_k / (1.0 + rician_k))
    w_nlos = np.sqrt(1.0 / (1.0 + rician_k))
    return np.sqrt(pathloss) * (w_los * los + w_nlos * nlos)


def upa_steering(nx, ny, spacing_m, carrier_hz, theta, phi):
    """Steering vector of an (nx x ny) uniform planar array.

    Element (ix, iy) has phase
        -2*pi*spacing*fc/c * sin(theta) * (ix*cos(phi) + iy*sin(phi)),
    ix = 0..nx-1, iy = 0..ny-1.  The flat output has the x index varying
    fastest (element n = iy*nx + ix), i.e. kron(y-progression, x-progression).

    Args:
        nx, ny: elements along the two array axes.
        spacing_m: inter-element spacing in meters.
        carrier_hz: carrier frequency.
        theta: polar angle from boresight (radians).
        phi: azimuth angle (radians).

    Returns:
        [nx*ny] unit-modulus complex steering vector.
    """
    unit = 2.0 * np.pi * spacing_m * carrier_hz / SPEED_OF_LIGHT
    ax = np.exp(-1j * unit * np.sin(theta) * np.cos(phi) * np.arange(nx))
    ay = np.exp(-1j * unit * np.sin(theta) * np.sin(phi) * np.arange(ny))
    return np.kron(ay, ax)


def uav_user_channel(uav_pos, user_pos, nx, ny, spacing_m, carrier_hz):
    """LoS channel from a UAV-mounted UPA down to a ground user.

    The magnitude is sqrt(rho)/d with rho = (c / (4*pi*fc))^2 (free-space
    reference gain) and d the 3-D distance; angles are taken from the
    UAV's nadir: theta = arctan(horizontal distance / height difference),
    phi = atan2(uav_y - user_y, uav_x - user_x).

    Args:
        uav_pos: [3] UAV position (z above the user plane).
        user_pos: [3] user position.
        nx, ny, spacing_m, carrier_hz: array geometry, see upa_steering.

    Returns:
        [nx*ny] complex channel vector.
    """
    uav_pos = np.asarray(uav_pos, dtype=float)
    user_pos = np.asarray(user_pos, dtype=float)
    delta = uav_pos - user_pos
    height = delta[2]
    if height <= 0:
        raise ValueError("UAV must be above the user plane")
    horizontal = np.hypot(delta[0], delta[1])
    dist = np.linalg.norm(delta)
    theta = np.arctan2(horizontal, height)
    phi = np.arctan2(delta[1], delta[0])
    rho = (SPEED_OF_LIGHT / (4.0 * np.pi * carrier_hz)) ** 2
    return (np.sqrt(rho) / dist) * upa_steering(nx, ny, spacing_m, carrier_hz,
                                                theta, phi)


def irs_effective_channel(h_direct, bs_irs, irs_user, psi):
    """Effective BS-to-user channel through a reflecting surface.

    h_eff = h_direct + F diag(e^{j psi}) h_r, where F is the BS-IRS matrix
    and h_r the IRS-user vector.  psi holds the per-element phase shifts in
    radians (continuous, or drawn from a discrete codebook such as the 2-bit
    set {0, pi/2, pi, 3pi/2}).

    Args:
        h_direct: [n] direct BS-user channel.
        bs_irs: [n, m] BS-IRS matrix.
        irs_user: [m] IRS-user channel.
        psi: [m] phase shifts in radians.

    Returns:
        [n] effective channel vector.
    """
    h_direct = np.asarray(h_direct)
    bs_irs = np.asarray(bs_irs)
    irs_user = np.asarray(irs_user)
    psi = np.asarray(psi, dtype=float)
    if bs_irs.shape != (h_direct.shape[0], irs_user.shape[0]) \
            or psi.shape != irs_user.shape:
        raise ValueError("inconsistent shapes for the cascaded link")
    return h_direct + bs_irs @ (np.exp(1j * psi) * irs_user)


def mfa_channel(candidates, picks_per_port, selection):
    """Channel realised by discrete movable/fluid-antenna position picks.

    Each of the N ports owns a block of `picks_per_port` candidate positions;
    column n of the result is the candidate column selected for port n:
    H = C T with T the block one-hot selection matrix.

    Args:
        candidates: [k, n*picks_per_port] candidate channel columns.
        picks_per_port: candidate positions per port (Q).
        selection: [n] integer picks, each in [0, picks_per_port).

    Returns:
        [k, n] channel matrix of the selected positions.
    """
    candidates = np.asarray(candidates)
    selection = np.asarray(selection, dtype=int)
    if candidates.shape[1] % picks_per_port != 0:
        raise ValueError("candidate count is not a multiple of picks_per_port")
    n_ports = candidates.shape[1] // picks_per_port
    if selection.shape != (n_ports,):
        raise ValueError(f"selection must have shape ({n_ports},)")
    if np.any(selection < 0) or np.any(selection >= picks_per_port):
        raise ValueError("selection index out of range")
    cols = np.arange(n_ports) * picks_per_port + selection
    return candidates[:, cols]


def mfa_selection_matrix(n_ports, picks_per_port, selection):
    """Block one-hot selection matrix T with T[n*Q + sel[n], n] = 1."""
    selection = np.asarray(selection, dtype=int)
    t = np.zeros((n_ports * picks_per_port, n_ports))
    t[np.arange(n_ports) * picks_per_port + selection, np.arange(n_ports)] = 1.0
    return t


def dd_channel(paths, m_delay, n_doppler):
    """Effective delay-Doppler channel matrix on a flattened grid.

    H = sum_i g_i * Delta^{k_i} * Pi^{l_i}, where Pi is the cyclic shift on
    the flattened grid (size m_delay*n_doppler) and Delta the Doppler phase
    ramp diag(exp(2j*pi*n/(m_delay*n_doppler))).  Doppler bins are integer;
    twisted-convolution phases are assumed folded into the path gains.

    Args:
        paths: iterable of DdPath.
        m_delay: delay taps per Doppler bin (M).
        n_doppler: Doppler bins (N).

    Returns:
        [M*N, M*N] complex matrix; unitary for a single unit-gain path.
    """
    size = m_delay * n_doppler
    ramp = np.exp(2j * np.pi * np.arange(size) / size)
    h = np.zeros((size, size), dtype=complex)
    for path in paths:
        if not (0 <= path.delay < m_delay):
            raise ValueError(f"delay {path.delay} outside [0, {m_delay})")
        if abs(path.doppler) >= n_doppler / 2:
            raise ValueError(f"Doppler bin {path.doppler} outside "
                             f"(-{n_doppler / 2}, {n_doppler / 2})")
        shifted = np.roll(np.eye(size), path.delay, axis=0)
        h += path.gain * (ramp ** path.doppler)[:, None] * shifted
    return h


def ddma_indicator(delay_row, m_delay, n_doppler):
    """Resource-indicator matrix placing one stream per Doppler bin.

    Column j selects flat grid index j*m_delay + delay_row (Doppler-major
    flattening: the Doppler bin is the slow axis).

    Args:
        delay_row: delay tap used by this user, 0 <= delay_row < m_delay.
        m_delay, n_doppler: grid dimensions.

    Returns:
        [m_delay*n_doppler, n_doppler] binary matrix with orthonormal columns.
    """
    if not (0 <= delay_row < m_delay):
        raise ValueError(f"delay_row {delay_row} outside [0, {m_delay})")
    pi = np.zeros((m_delay * n_doppler, n_doppler))
    pi[np.arange(n_doppler) * m_delay + delay_row, np.arange(n_doppler)] = 1.0
    return pi


def perturb_csi(rng, h, radius, kind="uniform"):
    """Add a norm-bounded estimation error to a channel vector.

    Args:
        rng: numerics.Rng stream.
        h: [n] nominal channel.
        radius: error-ball radius delta >= 0 (Frobenius over entries).
        kind: "uniform" draws uniformly inside the ball; "gaussian" draws
            CN with per-entry variance radius^2/(2n), projected back onto
            the sphere if the draw lands outside the ball.

    Returns:
        [n] perturbed channel with ||out - h|| <= radius.
    """
    h = np.asarray(h, dtype=complex)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if radius == 0:
        return h.copy()
    n = h.size
    direction = rng.complex_normal(n)
    norm = np.linalg.norm(direction)
    if norm == 0:
        return h.copy()
    if kind == "uniform":
        # Uniform in a 2n-real-dimensional ball: radius ~ U^(1/(2n)).
        r = radius * rng.uniform() ** (1.0 / (2 * n))
        delta = direction / norm * r
    elif kind == "gaussian":
        delta = direction * (radius / np.sqrt(2.0 * n))
        excess = np.linalg.norm(delta)
        if excess > radius:
            delta *= radius / excess
    else:
        raise ValueError(f"unknown perturbation kind: {kind!r}")
    return h + delta.reshape(h.shape)
