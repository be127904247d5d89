"""Lindbladian superoperators: assembly, spectra, steady states, evolution.

Vectorization is column-stacking throughout: vec(A rho B) = (B^T kron A) vec(rho),
so the generator reads

    L = -i (I kron H  -  H^T kron I)
        + sum_mu Gamma_mu [ conj(L_mu) kron L_mu
                            - 1/2 I kron (Ldag L)_mu
                            - 1/2 (Ldag L)_mu^T kron I ].

Trace preservation is the statement that vec(I) is a left null vector.

Superoperators are stored sparse; spectra are computed by splitting the
matrix into its exactly decoupled blocks (connected components of the
sparsity pattern; weak symmetries such as parity produce them) and running
the dense eigensolver per block, which is exact for the full multiset of
eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .linalg import dag, eig, is_hermitian, null_space
from .policy import POLICY, DeskScaleError, NumericsError

__all__ = [
    "LindbladModel",
    "Superoperator",
    "SpectralData",
    "DegenerateDarkSpaceError",
    "build_superoperator",
    "spectral_data",
    "steady_state_dark",
    "stationary_state_from",
    "evolve",
    "fidelity",
    "variance_rate_bound",
    "vec",
    "unvec",
]


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(rho, dtype=complex).reshape(-1, order="F")


def unvec(x: np.ndarray) -> np.ndarray:
    d = int(round(np.sqrt(x.size)))
    return np.asarray(x, dtype=complex).reshape((d, d), order="F")


class DegenerateDarkSpaceError(RuntimeError):
    """The joint kernel of the jump operators has dimension > 1."""

    def __init__(self, dimension: int, basis: np.ndarray):
        super().__init__(
            f"joint jump-operator kernel is {dimension}-dimensional; "
            "the pure steady state is not unique"
        )
        self.dimension = dimension
        self.basis = basis


@dataclass
class LindbladModel:
    """Hamiltonian plus (jump operator, rate) pairs on a declared register.

    ``register`` only needs a ``dim`` attribute (QubitRegister, DickeSpace,
    TensorSpace).  H must be Hermitian within tolerance and all matrices
    share the register dimension.
    """

    h: np.ndarray
    jumps: list[tuple[np.ndarray, float]]
    register: object

    def __post_init__(self):
        d = self.register.dim
        self.h = np.asarray(self.h, dtype=complex)
        if self.h.shape != (d, d):
            raise ValueError(f"H has shape {self.h.shape}, register dimension is {d}")
        if not is_hermitian(self.h):
            raise ValueError("H is not Hermitian within tolerance")
        checked = []
        for op, rate in self.jumps:
            op = np.asarray(op, dtype=complex)
            if op.shape != (d, d):
                raise ValueError("jump operator dimension mismatch")
            if rate < 0:
                raise ValueError("jump rates must be nonnegative")
            checked.append((op, float(rate)))
        self.jumps = checked

    @property
    def dim(self) -> int:
        return self.register.dim

    def effective_hamiltonian(self) -> np.ndarray:
        """H - (i/2) sum Gamma Ldag L, the no-jump generator."""
        heff = self.h.astype(complex).copy()
        for op, rate in self.jumps:
            heff -= 0.5j * rate * (dag(op) @ op)
        return heff


@dataclass
class Superoperator:
    """Sparse D^2 x D^2 matrix representation of the generator."""

    matrix: sp.csr_matrix
    dim: int  # Hilbert-space dimension D

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def side(self) -> int:
        return self.dim * self.dim


def build_superoperator(model: LindbladModel) -> Superoperator:
    d = model.dim
    if d * d > POLICY.max_superoperator_dim:
        raise DeskScaleError(
            f"superoperator side {d * d} exceeds the desk-scale limit "
            f"{POLICY.max_superoperator_dim}"
        )
    ident = sp.identity(d, dtype=complex, format="csr")
    h = sp.csr_matrix(model.h)
    mat = -1j * (sp.kron(ident, h) - sp.kron(h.T, ident))
    for op, rate in model.jumps:
        if rate == 0.0:
            continue
        ls = sp.csr_matrix(op)
        ldl = (ls.conj().T @ ls).tocsr()
        mat = mat + rate * (
            sp.kron(ls.conj(), ls)
            - 0.5 * sp.kron(ident, ldl)
            - 0.5 * sp.kron(ldl.T, ident)
        )
    mat = mat.tocsr()
    mat.eliminate_zeros()
    return Superoperator(matrix=mat, dim=d)


def _blocks(matrix: sp.csr_matrix) -> list[np.ndarray]:
    """Index sets of the exactly decoupled diagonal blocks."""
    coo = matrix.tocoo()
    ones = np.ones(coo.nnz, dtype=np.int8)
    pattern = sp.coo_matrix((ones, (coo.row, coo.col)), shape=matrix.shape)
    n_comp, labels = connected_components(pattern, directed=False)
    return [np.flatnonzero(labels == c) for c in range(n_comp)]


@dataclass
class SpectralData:
    """Spectrum of a superoperator with its zero modes and dissipative gap.

    ``gap`` is the smallest |Re lambda| over eigenvalues with |Re lambda|
    beyond ``ztol``; it is 0.0 (with ``no_relaxation`` set) when no decaying
    eigenvalue exists.  ``zero_modes`` are vectorized operators with
    |lambda| <= ztol.
    """

    eigenvalues: np.ndarray
    zero_modes: list[np.ndarray]
    gap: float
    ztol: float
    no_relaxation: bool = False
    dim: int = 0

    @property
    def n_zero_modes(self) -> int:
        return len(self.zero_modes)

    def steady_states(self) -> list[np.ndarray]:
        """Hermitian, unit-trace representatives of the trace-carrying zero modes."""
        states = []
        for v in self.zero_modes:
            m = unvec(v)
            m = 0.5 * (m + dag(m))
            t = np.trace(m)
            if abs(t) > 1e-10:
                states.append(m / t)
        return states


def spectral_data(
    sop: Superoperator, ztol: float | None = None, want_vectors: bool = True
) -> SpectralData:
    """Full spectrum, zero modes and dissipative gap of a superoperator."""
    blocks = _blocks(sop.matrix)
    all_vals = []
    per_block = []  # (indices, values, vectors or None)
    for idx in blocks:
        n = idx.size
        if n > POLICY.max_dense_eig_dim:
            raise DeskScaleError(
                f"superoperator block of size {n} exceeds the dense eigensolver "
                f"limit {POLICY.max_dense_eig_dim}; reduce the system size"
            )
        if n == 1:
            val = np.array([sop.matrix[idx[0], idx[0]]], dtype=complex)
            vec_ = np.ones((1, 1), dtype=complex) if want_vectors else None
            per_block.append((idx, val, vec_))
            all_vals.append(val)
            continue
        sub = sop.matrix[np.ix_(idx, idx)].toarray()
        dec = eig(sub, vectors=want_vectors)
        per_block.append((idx, dec.values, dec.right_vectors))
        all_vals.append(dec.values)
    values = np.concatenate(all_vals)
    order = np.argsort(-values.real, kind="stable")
    values = values[order]

    scale = float(np.abs(values).max(initial=0.0))
    if ztol is None:
        ztol = 1e-9 * scale if scale > 0 else 1e-15

    decaying = np.abs(values.real) > ztol
    if np.any(decaying):
        gap = float(np.abs(values.real[decaying]).min())
        no_relax = False
    else:
        gap = 0.0
        no_relax = True

    zero_modes: list[np.ndarray] = []
    if want_vectors:
        for idx, vals, vecs in per_block:
            for k in np.flatnonzero(np.abs(vals) <= ztol):
                full = np.zeros(sop.side, dtype=complex)
                full[idx] = vecs[:, k]
                zero_modes.append(full)
        if not zero_modes:
            raise NumericsError(
                "no zero mode found within tolerance; superoperator assembly is suspect"
            )
    return SpectralData(
        eigenvalues=values,
        zero_modes=zero_modes,
        gap=gap,
        ztol=ztol,
        no_relaxation=no_relax,
        dim=sop.dim,
    )


def steady_state_dark(model: LindbladModel) -> np.ndarray | None:
    """Pure dark steady state: L_mu |psi> = 0 for all mu and H|psi> ~ |psi>.

    The joint jump kernel is shrunk to its largest H-invariant subspace
    (boundary-driven models have large kernels of which only H eigenstates
    are stationary); diagonalizing H there yields the dark states.  Returns
    the state when exactly one exists, None when there is none, and raises
    DegenerateDarkSpaceError when the stationary dark space has dimension
    greater than one.
    """
    if not model.jumps:
        return None
    stacked = np.vstack([np.sqrt(rate) * op for op, rate in model.jumps])
    basis = null_space(stacked)
    scale = max(1.0, float(np.abs(model.h).max(initial=0.0)))
    # shrink to the H-invariant part of the kernel: psi with H psi still inside
    for _ in range(stacked.shape[1]):
        if basis.shape[1] == 0:
            return None
        hv = model.h @ basis
        resid = hv - basis @ (dag(basis) @ hv)
        if np.abs(resid).max(initial=0.0) <= 1e-10 * scale:
            break
        shrink = null_space(resid)
        if shrink.shape[1] == basis.shape[1]:
            break
        basis = basis @ shrink
    if basis.shape[1] == 0:
        return None
    if basis.shape[1] > 1:
        raise DegenerateDarkSpaceError(basis.shape[1], basis)
    psi = basis[:, 0]
    psi = psi / np.linalg.norm(psi)
    hpsi = model.h @ psi
    e = np.vdot(psi, hpsi)
    if np.linalg.norm(hpsi - e * psi) > 1e-8 * scale:
        return None
    return psi


def stationary_state_from(model_or_sop, rho0: np.ndarray) -> np.ndarray:
    """Long-time limit of rho0: projection of vec(rho0) onto the zero modes.

    Uses left/right eigenvectors per decoupled block; correct also when the
    stationary manifold is degenerate (the limit depends on rho0).
    """
    sop = model_or_sop if isinstance(model_or_sop, Superoperator) else build_superoperator(model_or_sop)
    x0 = vec(rho0)
    out = np.zeros_like(x0)
    for idx in _blocks(sop.matrix):
        if np.abs(x0[idx]).max(initial=0.0) < 1e-15:
            continue  # rho0 has no weight here, so neither does the limit
        if idx.size > POLICY.max_dense_eig_dim:
            raise DeskScaleError("block too large for dense spectral projection")
        sub = sop.matrix[np.ix_(idx, idx)].toarray()
        dec = eig(sub)
        vals, vr = dec.values, dec.right_vectors
        ztol = 1e-9 * max(np.abs(vals).max(initial=0.0), 1e-6)
        keep = np.abs(vals) <= ztol
        if not np.any(keep):
            continue
        vl = np.linalg.inv(vr)  # rows are left eigenvectors
        coeffs = vl[keep] @ x0[idx]
        out[idx] += vr[:, keep] @ coeffs
    rho = unvec(out)
    rho = 0.5 * (rho + dag(rho))
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise NumericsError("stationary projection has vanishing trace")
    return rho / tr


def _check_density_matrix(rho: np.ndarray, d: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError("rho has the wrong dimension")
    if not is_hermitian(rho):
        raise ValueError("rho is not Hermitian within tolerance")
    if abs(np.trace(rho) - 1.0) > 1e-8:
        raise ValueError("rho is not unit trace")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-6:
        raise ValueError(f"rho has a negative eigenvalue {w.min():.3e}")
    return rho


# spectral propagation is used up to this vectorized dimension, fixed-step
# RK4 beyond it; both paths are cross-validated in the tests
SPECTRAL_EVOLVE_MAX_SIDE = 4096


def evolve(model: LindbladModel, rho0: np.ndarray, times) -> list[np.ndarray]:
    """Density matrices exp(L t) rho0 at the requested times."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    d = model.dim
    rho0 = _check_density_matrix(rho0, d)
    sop = build_superoperator(model)
    if sop.side <= SPECTRAL_EVOLVE_MAX_SIDE:
        out = _evolve_spectral(sop, rho0, times)
    else:
        out = _evolve_rk4(sop, rho0, times)
    cleaned = []
    for rho in out:
        rho = 0.5 * (rho + dag(rho))
        drift = abs(np.trace(rho).real - 1.0)
        if drift > 1e-8:
            raise NumericsError(f"trace drift {drift:.2e} exceeds tolerance")
        w = np.linalg.eigvalsh(rho)
        if w.min() < -1e-6:
            raise NumericsError(f"evolved state has negative eigenvalue {w.min():.2e}")
        cleaned.append(rho)
    return cleaned


def _evolve_spectral(sop: Superoperator, rho0: np.ndarray, times: np.ndarray) -> list[np.ndarray]:
    x0 = vec(rho0)
    sol = np.zeros((times.size, sop.side), dtype=complex)
    for idx in _blocks(sop.matrix):
        sub = sop.matrix[np.ix_(idx, idx)].toarray()
        dec = eig(sub)
        vl = np.linalg.inv(dec.right_vectors)
        coeffs = vl @ x0[idx]
        phases = np.exp(np.outer(times, dec.values))  # (nt, n)
        sol[:, idx] = (phases * coeffs) @ dec.right_vectors.T
    return [unvec(sol[k]) for k in range(times.size)]


def _evolve_rk4(sop: Superoperator, rho0: np.ndarray, times: np.ndarray) -> list[np.ndarray]:
    mat = sop.matrix
    scale = float(np.max(np.abs(mat).sum(axis=1)))  # infinity norm estimate
    dt0 = 0.05 / max(scale, 1e-12)
    order = np.argsort(times)
    out: list[np.ndarray | None] = [None] * times.size
    dt_base = dt0
    while True:
        x = vec(rho0)
        t = 0.0
        ok = True
        for k in order:
            target = times[k]
            span = target - t
            if span > 0:
                n_steps = max(1, int(np.ceil(span / dt_base)))
                h = span / n_steps
                for _ in range(n_steps):
                    k1 = mat @ x
                    k2 = mat @ (x + 0.5 * h * k1)
                    k3 = mat @ (x + 0.5 * h * k2)
                    k4 = mat @ (x + h * k3)
                    x = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
                t = target
            drift = abs(np.trace(unvec(x)).real - 1.0)
            if drift > 1e-8:
                ok = False
                break
            out[k] = unvec(x)
        if ok:
            return [out[k] for k in range(times.size)]
        dt_base *= 0.5
        if dt_base < 1e-12 * max(times.max(), 1.0):
            raise NumericsError("evolve: step size underflow while controlling trace drift")


def fidelity(rho: np.ndarray, psi_ss: np.ndarray) -> float:
    """<psi|rho|psi> for a pure reference state; the value lies in [0, 1]."""
    psi = np.asarray(psi_ss, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
        raise ValueError("reference state is not normalized")
    val = float(np.real(np.vdot(psi, rho @ psi)))
    return min(1.0, max(0.0, val))


def variance_rate_bound(op: np.ndarray, psi: np.ndarray) -> float:
    """Variance of (L + Ldag) in a dark state psi; bounds the fidelity slope.

    Also recomputed with L -> e^{i pi/3} L as a built-in gauge-invariance
    check (the two must agree because psi is annihilated by L).
    """
    psi = np.asarray(psi, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
        raise ValueError("psi must be normalized")
    op = np.asarray(op, dtype=complex)
    scale = max(1.0, float(np.abs(op).max(initial=0.0)))
    if np.linalg.norm(op @ psi) > 1e-8 * scale:
        raise ValueError("psi is not annihilated by the jump operator within tolerance")

    def var_real_part(l_op):
        x = l_op + dag(l_op)
        mean = np.vdot(psi, x @ psi).real
        second = np.vdot(psi, x @ (x @ psi)).real
        return second - mean**2

    v0 = var_real_part(op)
    v1 = var_real_part(np.exp(1j * np.pi / 3.0) * op)
    if abs(v0 - v1) > 1e-10 * max(1.0, abs(v0)):
        raise NumericsError("gauge-invariance check failed for the variance bound")
    return float(v0)
