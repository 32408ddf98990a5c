"""Dense complex linear-algebra kernels and deterministic random streams.

The Hermitian eigensolver is a cyclic Jacobi iteration (no LAPACK driver
dependence, deterministic rotation order).  Two lanes provide it:

- a compiled Cython extension (``_eig_core``), built by ``setup.py``;
- a pure-numpy fallback (``_eig_fallback``) with the same rotation schedule.

The compiled lane is preferred when importable; set ``NGMA_OPT_FORCE_PY=1``
to force the fallback.  ``backend()`` reports which lane is active.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import _eig_fallback

if os.environ.get("NGMA_OPT_FORCE_PY") == "1":
    _impl = _eig_fallback
else:
    try:
        from . import _eig_core as _impl
    except ImportError:
        _impl = _eig_fallback

_BACKEND = "compiled" if _impl.__name__.endswith("_eig_core") else "python"

_MASK64 = (1 << 64) - 1


def backend():
    """Return the active eigensolver lane: ``"compiled"`` or ``"python"``."""
    return _BACKEND


@dataclass
class HermitianEig:
    """Eigendecomposition of a Hermitian matrix.

    Attributes:
        values: [n] real eigenvalues in ascending order.
        vectors: [n, n] unitary matrix; column i pairs with values[i].
    """

    values: np.ndarray
    vectors: np.ndarray


def _check_hermitian(a, tol=1e-10):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(np.linalg.norm(a), 1.0)
    if np.linalg.norm(a - a.conj().T) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return a


def eig_hermitian(a):
    """Eigendecompose a Hermitian matrix with cyclic Jacobi rotations.

    Args:
        a: [n, n] complex Hermitian matrix (validated to 1e-10 relative).

    Returns:
        HermitianEig with ascending eigenvalues and orthonormal eigenvectors;
        the reconstruction residual ||A V - V diag(w)||_F stays below
        1e-8 ||A||_F.

    Raises:
        ValueError: if `a` is not square or not Hermitian within tolerance.
    """
    a = _check_hermitian(a)
    w, v = _impl.jacobi_eigh(a)
    order = np.argsort(w, kind="stable")
    return HermitianEig(values=w[order], vectors=np.ascontiguousarray(v[:, order]))


def psd_project(a):
    """Project a matrix onto the positive-semidefinite cone.

    The input is first symmetrized to (A + A^H)/2, then negative eigenvalues
    are clipped to zero.  This is the Frobenius-nearest PSD matrix.

    Args:
        a: [n, n] complex matrix (need not be Hermitian).

    Returns:
        [n, n] Hermitian PSD matrix.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    h = 0.5 * (a + a.conj().T)
    w, v = _impl.jacobi_eigh(h)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return 0.5 * (out + out.conj().T)


def dominant_eigvec(a):
    """Unit eigenvector of the largest eigenvalue, with a fixed phase.

    The global phase is chosen so the largest-modulus entry is real positive
    (ties broken by the lowest index), making the output deterministic.

    Args:
        a: [n, n] complex Hermitian matrix.

    Returns:
        (value, vector): the largest eigenvalue and its unit eigenvector.
    """
    eig = eig_hermitian(a)
    v = eig.vectors[:, -1].copy()
    k = int(np.argmax(np.abs(v)))
    pivot = v[k]
    if np.abs(pivot) > 0:
        v *= np.conj(pivot) / np.abs(pivot)
    return float(eig.values[-1]), v


def db_to_linear(x):
    """Convert a dB (or dBm) value to linear scale: 10^(x/10)."""
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a positive linear value to dB: 10 log10(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear_to_db requires strictly positive input")
    return 10.0 * np.log10(x)


def mix64(*parts):
    """Deterministically hash integers/strings into a 64-bit stream key.

    splitmix64 finalizer folded over the parts; stable across platforms and
    Python processes (unlike built-in `hash`).  Used to derive independent
    RNG streams, e.g. per (seed, scheme, power index, trial).
    """
    x = 0x9E3779B97F4A7C15
    for part in parts:
        if isinstance(part, str):
            chunks = [int.from_bytes(part.encode("utf-8")[i:i + 8], "little")
                      for i in range(0, len(part.encode("utf-8")), 8)] or [0]
        else:
            chunks = [int(part) & _MASK64]
        for c in chunks:
            x = (x + c) & _MASK64
            x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
            x = x ^ (x >> 31)
    return x


class Rng:
    """Deterministic, splittable random stream.

    Wraps a counter-based Philox generator keyed by a 64-bit seed, so the
    same seed yields the same sequence on every platform.  `split` derives
    independent child streams from hashable labels without consuming state
    from the parent.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def split(self, *labels):
        """Child stream keyed by (seed, *labels); parent state untouched."""
        return Rng(mix64(self.seed, *labels))

    def standard_normal(self, shape=None):
        return self._gen.standard_normal(shape) if shape is not None \
            else self._gen.standard_normal()

    def complex_normal(self, shape=None):
        """CN(0, 1) samples: unit-variance circularly-symmetric Gaussian."""
        re = self._gen.standard_normal(shape)
        im = self._gen.standard_normal(shape)
        return (re + 1j * im) / np.sqrt(2.0)

    def uniform(self, low=0.0, high=1.0, shape=None):
        return self._gen.uniform(low, high, shape)

    def integers(self, low, high=None, shape=None):
        return self._gen.integers(low, high, shape)

    def permutation(self, n):
        return self._gen.permutation(n)
