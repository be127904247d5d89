"""Dense complex linear-algebra kernels.

Everything in this module is physics-agnostic: matrices in, matrices out.
Eigendecompositions, exponentials and SVD-based routines delegate to
LAPACK through numpy/scipy; the contracts here are residual bounds, not
algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .policy import POLICY, DeskScaleError, NumericsError

__all__ = [
    "EigenDecomposition",
    "kron",
    "expm",
    "eig",
    "trace_norm",
    "null_space",
    "dag",
    "is_hermitian",
    "spectral_multiset_distance",
]


def dag(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def is_hermitian(a: np.ndarray, tol: float | None = None) -> bool:
    tol = POLICY.hermiticity_tol if tol is None else tol
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return bool(np.abs(a - dag(a)).max(initial=0.0) <= tol * scale)


def _require_square(a: np.ndarray, who: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{who}: expected a square matrix, got shape {a.shape}")


@dataclass
class EigenDecomposition:
    """Eigenvalues sorted by descending real part, with optional right vectors.

    For Hermitian input the values are real and the vectors orthonormal;
    column k of ``right_vectors`` belongs to ``values[k]``.
    """

    values: np.ndarray
    right_vectors: np.ndarray | None
    is_hermitian_input: bool


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor (Kronecker) product with a desk-scale dimension guard."""
    a = np.asarray(a)
    b = np.asarray(b)
    out_rows = a.shape[0] * b.shape[0]
    out_cols = (a.shape[1] if a.ndim > 1 else 1) * (b.shape[1] if b.ndim > 1 else 1)
    if max(out_rows, out_cols) > POLICY.max_operator_dim:
        raise DeskScaleError(
            f"kron result {out_rows}x{out_cols} exceeds the configured maximum "
            f"operator dimension {POLICY.max_operator_dim}"
        )
    return np.kron(a, b)


def expm(a: np.ndarray, hermitian_generator: bool = False) -> np.ndarray:
    """Matrix exponential.

    With ``hermitian_generator`` set, ``a`` is interpreted as -i*H with H
    Hermitian and the result is computed by diagonalizing H, which keeps the
    output unitary to machine precision.  Otherwise the scaling-and-squaring
    routine from scipy is used.
    """
    a = np.asarray(a, dtype=complex)
    _require_square(a, "expm")
    if hermitian_generator:
        h = 1j * a
        if not is_hermitian(h):
            raise ValueError("expm: hermitian_generator set but i*a is not Hermitian")
        w, v = np.linalg.eigh(h)
        return (v * np.exp(-1j * w)) @ dag(v)
    out = scipy.linalg.expm(a)
    if not np.all(np.isfinite(out)):
        raise NumericsError("expm: scaling-and-squaring produced non-finite entries")
    return out


def eig(a: np.ndarray, hermitian: bool = False, vectors: bool = True) -> EigenDecomposition:
    """Eigendecomposition with values sorted by descending real part."""
    a = np.asarray(a, dtype=complex)
    _require_square(a, "eig")
    try:
        if hermitian:
            if vectors:
                w, v = np.linalg.eigh(a)
                w = w.astype(complex)
            else:
                w = np.linalg.eigvalsh(a).astype(complex)
                v = None
        else:
            if vectors:
                w, v = np.linalg.eig(a)
            else:
                w = np.linalg.eigvals(a)
                v = None
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(a)) if a.size and np.all(np.isfinite(a)) else np.inf
        raise NumericsError(f"eig failed to converge (dim={a.shape[0]}, cond~{cond:.3e})") from exc
    order = np.argsort(-w.real, kind="stable")
    w = w[order]
    if v is not None:
        v = v[:, order]
    return EigenDecomposition(values=w, right_vectors=v, is_hermitian_input=hermitian)


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values (Schatten 1-norm)."""
    a = np.asarray(a, dtype=complex)
    _require_square(a, "trace_norm")
    return float(np.linalg.svd(a, compute_uv=False).sum())


def spectral_multiset_distance(a: np.ndarray, b: np.ndarray, k: int = 64) -> float:
    """Greedy bipartite matching distance between two eigenvalue multisets.

    Robust against the ordering ambiguity of (near-)degenerate complex
    spectra: each value of ``a`` is matched to its nearest unused partner in
    ``b``; the returned number is the worst matched distance.  Multiplicity
    mismatches surface as a large distance.
    """
    from scipy.spatial import cKDTree

    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("spectra must have equal size")
    tree = cKDTree(np.column_stack([b.real, b.imag]))
    k = min(k, b.size)
    dists, idxs = tree.query(np.column_stack([a.real, a.imag]), k=k)
    if k == 1:
        dists = dists[:, None]
        idxs = idxs[:, None]
    used = np.zeros(b.size, dtype=bool)
    worst = 0.0
    for i in np.argsort(dists[:, 0]):
        for jp in range(k):
            j = idxs[i, jp]
            if not used[j]:
                used[j] = True
                worst = max(worst, float(dists[i, jp]))
                break
        else:
            rem = np.flatnonzero(~used)
            dd = np.abs(a[i] - b[rem])
            jloc = int(np.argmin(dd))
            used[rem[jloc]] = True
            worst = max(worst, float(dd[jloc]))
    return worst


def null_space(a: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Orthonormal basis of the right null space, as columns.

    Vectors whose singular values fall below ``tol * sigma_max`` are kept.
    An empty (dim, 0) result is a valid return.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValueError("null_space: expected a 2-d matrix")
    if tol is None:
        tol = POLICY.zero_rtol
    if tol <= 0:
        raise ValueError("null_space: tol must be positive")
    _, s, vh = np.linalg.svd(a)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > tol * smax))
    return dag(vh)[:, rank:]
