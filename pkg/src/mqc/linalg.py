"""Dense real/complex matrix kernel used by every other module.

Matrices are plain numpy arrays (complex128, 2-D, row-major).  The routines
here add the contract checks the rest of the library relies on; the numerical
work itself is delegated to LAPACK through numpy (eigh / svd / LU).
"""

from __future__ import annotations

import numpy as np

from .config import TOLS, Tolerances


class LinalgError(ValueError):
    """Shape or symmetry contract violation, or solver non-convergence."""


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise LinalgError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def require_square(a) -> np.ndarray:
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    return m


def herm_defect(a: np.ndarray) -> float:
    """max |A - A^dag|, the distance from being Hermitian."""
    return float(np.abs(a - a.conj().T).max()) if a.size else 0.0


def require_hermitian(a, tol: float | None = None) -> np.ndarray:
    """Validate Hermiticity within tol and return the symmetrized matrix."""
    m = require_square(a)
    tol = TOLS.hermitian_input if tol is None else tol
    defect = herm_defect(m)
    if defect > tol:
        raise LinalgError(f"matrix is not Hermitian: max|A - A^dag| = {defect:.3e} > {tol:.1e}")
    return (m + m.conj().T) / 2.0


def herm_eig(a, tol: float | None = None, tols: Tolerances = TOLS):
    """Eigendecomposition of a Hermitian matrix.

    Returns (w, V) with eigenvalues w sorted descending and V unitary such
    that A = V diag(w) V^dag.  Raises LinalgError on non-square input,
    non-Hermitian input beyond tolerance, or LAPACK non-convergence.
    """
    h = require_hermitian(a, tol)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise LinalgError(f"eigensolver failed to converge: {exc}") from exc
    order = np.argsort(w)[::-1]
    return np.real(w[order]), v[:, order]


def trace_norm(a) -> float:
    """Trace norm ||A||_1 = sum of singular values."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False).sum())


def op_norm(a) -> float:
    """Operator norm (largest singular value)."""
    m = as_matrix(a)
    if m.size == 0:
        return 0.0
    return float(np.linalg.svd(m, compute_uv=False).max())


def psd_project(h, tol: float | None = None) -> np.ndarray:
    """Frobenius-nearest positive semidefinite matrix to Hermitian h.

    Eigenvalues are clipped at zero and the matrix rebuilt; the result is
    re-symmetrized so the projection is exactly idempotent in floating point.
    """
    w, v = herm_eig(h, tol)
    w = np.maximum(w, TOLS.psd_clip)
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2.0


def det(a) -> complex:
    """Determinant via pivoted LU (LAPACK).  Real input gives a real result."""
    m = require_square(np.asarray(a))
    if m.shape[0] == 0:
        return 1.0
    d = np.linalg.det(m)
    if np.isrealobj(m):
        return float(np.real(d))
    return complex(d)


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def kron_all(mats) -> np.ndarray:
    """Kronecker product of a sequence of matrices, left to right."""
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, np.asarray(m, dtype=np.complex128))
    return out
