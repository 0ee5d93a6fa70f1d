"""Dense complex linear algebra for small Hilbert spaces (dim <= 16).

Matrices and state vectors are plain complex ndarrays.  The Hermitian
eigensolver is a cyclic Jacobi iteration; the unitary eigendecomposition
diagonalises the commuting Hermitian pair (U+U')/2 and (U-U')/(2i) with a
re-diagonalisation inside degenerate subspaces.  At these dimensions the
simple algorithms comfortably reach the 1e-8 reconstruction tolerances the
rest of the package relies on.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "NotHermitianError",
    "NotUnitaryError",
    "check_matrix",
    "kron",
    "hermitian_eig",
    "unitary_eig",
    "normalize_state",
]

HERMITICITY_TOL = 1e-10
UNITARITY_TOL = 1e-8
_JACOBI_SWEEPS = 50


class NotHermitianError(ValueError):
    pass


class NotUnitaryError(ValueError):
    pass


def check_matrix(m: np.ndarray) -> np.ndarray:
    """Validate a dense complex matrix: 2-D, finite entries."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix contains NaN or Inf entries")
    return m


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the left factor is the most significant subsystem."""
    return np.kron(check_matrix(a), check_matrix(b))


def normalize_state(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def _jacobi_hermitian(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalisation of a Hermitian matrix.

    Returns (eigenvalues unsorted, eigenvector columns).
    """
    n = a.shape[0]
    a = a.astype(complex).copy()
    v = np.eye(n, dtype=complex)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(_JACOBI_SWEEPS):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off < 1e-15 * n * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r < 1e-18 * scale:
                    continue
                phase = apq / r
                tau = (a[q, q].real - a[p, p].real) / (2.0 * r)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # column rotation: new_p = c*col_p - s*conj(phase)*col_q,
                #                  new_q = s*phase*col_p + c*col_q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                vc_p = v[:, p].copy()
                vc_q = v[:, q].copy()
                v[:, p] = c * vc_p - s * np.conj(phase) * vc_q
                v[:, q] = s * phase * vc_p + c * vc_q
    return np.real(np.diag(a)), v


def hermitian_eig(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector columns) with
    m @ v[:, k] = w[k] * v[:, k] and orthonormal columns, both to 1e-8.

    Raises NotHermitianError if max|m - m'| exceeds 1e-10 (relative to the
    matrix scale).
    """
    m = check_matrix(m)
    scale = max(np.abs(m).max(), 1.0)
    defect = np.abs(m - m.conj().T).max()
    if defect > HERMITICITY_TOL * scale:
        raise NotHermitianError(f"asymmetry {defect:.3e} exceeds tolerance")
    w, v = _jacobi_hermitian(0.5 * (m + m.conj().T))
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def unitary_eig(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a unitary matrix.

    Returns (phases in (-pi, pi], eigenvector columns) with
    u @ v[:, k] = exp(i*theta_k) * v[:, k] to 1e-7.

    The real part (u+u')/2 is diagonalised first; its degenerate subspaces
    are re-diagonalised against the imaginary part (u-u')/(2i), which makes
    the decomposition well defined for any normal u.
    """
    u = check_matrix(u)
    n = u.shape[0]
    defect = np.abs(u @ u.conj().T - np.eye(n)).max()
    if defect > UNITARITY_TOL:
        raise NotUnitaryError(f"u u' deviates from identity by {defect:.3e}")
    a = 0.5 * (u + u.conj().T)
    b = (u - u.conj().T) / 2j
    wa, v = hermitian_eig(a)

    # re-diagonalise b inside each (near-)degenerate eigenspace of a
    groups: list[list[int]] = [[0]]
    for k in range(1, n):
        if wa[k] - wa[groups[-1][0]] < 1e-8:
            groups[-1].append(k)
        else:
            groups.append([k])
    for g in groups:
        if len(g) == 1:
            continue
        sub = v[:, g]
        b_sub = sub.conj().T @ b @ sub
        _, vb = hermitian_eig(b_sub)
        v[:, g] = sub @ vb

    cos_t = np.real(np.einsum("ik,ij,jk->k", v.conj(), a, v))
    sin_t = np.real(np.einsum("ik,ij,jk->k", v.conj(), b, v))
    phases = np.arctan2(sin_t, cos_t)
    phases[phases <= -np.pi + 1e-15] = np.pi
    order = np.argsort(phases, kind="stable")
    return phases[order], v[:, order]
