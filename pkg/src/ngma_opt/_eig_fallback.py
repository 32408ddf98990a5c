"""Pure-numpy cyclic Jacobi eigensolver for complex Hermitian matrices.

Same rotation schedule as the compiled extension (row-cyclic sweeps, one
complex Givens rotation per off-diagonal pair), so both lanes agree to
rounding error.  Column/row updates are vectorised; the pair loop itself is
Python, which is why the compiled lane exists.
"""

import numpy as np


def jacobi_eigh(a, tol=1e-13, max_sweeps=60):
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Args:
        a: [n, n] complex Hermitian matrix (not modified).
        tol: stop when the off-diagonal Frobenius norm drops below
            tol * ||a||_F.
        max_sweeps: hard cap on full sweeps.

    Returns:
        (w, v): unsorted real eigenvalue vector [n] and unitary matrix [n, n]
        whose columns are the corresponding eigenvectors.
    """
    n = a.shape[0]
    A = np.array(a, dtype=np.complex128, order="C")
    V = np.eye(n, dtype=np.complex128)
    if n == 1:
        return A.real.reshape(1).copy(), V

    norm_a = np.linalg.norm(A)
    if norm_a == 0.0:
        return np.zeros(n), V
    thresh = tol * norm_a

    for _ in range(max_sweeps):
        # Off-diagonal norm computed entry-wise: the ||A||^2 - ||diag||^2
        # form cancels catastrophically once the matrix is nearly diagonal.
        strict = A - np.diag(np.diag(A))
        if np.linalg.norm(strict) <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                b = abs(apq)
                if b <= 1e-300:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                phase = apq / b
                tau = (aqq - app) / (2.0 * b)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0.0 \
                    else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                pc = np.conj(phase)

                # A <- J^H A J with the 2x2 block J = [[c, s], [-s*pc, c*pc]].
                col_p = A[:, p].copy()
                col_q = A[:, q].copy()
                A[:, p] = c * col_p - s * pc * col_q
                A[:, q] = s * col_p + c * pc * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :].copy()
                A[p, :] = c * row_p - s * phase * row_q
                A[q, :] = s * row_p + c * phase * row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = app - t * b
                A[q, q] = aqq + t * b

                col_p = V[:, p].copy()
                col_q = V[:, q].copy()
                V[:, p] = c * col_p - s * pc * col_q
                V[:, q] = s * col_p + c * pc * col_q

    return np.real(np.diag(A)).copy(), V
