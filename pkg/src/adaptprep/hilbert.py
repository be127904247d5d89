"""Operators on qubit registers and the collective-spin (Dicke) space.

Basis convention
----------------
Each qubit's local basis is ordered (|1>, |0>), i.e. the *excited* state
first, so that

    sigma_z = diag(1, -1),   n = (sigma_z + 1)/2 = diag(1, 0),

the raising operator is the upper-triangular matrix and the joint vacuum
|00...0> is the *last* computational basis vector.  Total parity
(-1)^n then has eigenvalue +1 on the vacuum.  Multi-qubit indices follow
the register layout with the first label as the most significant factor.

The Dicke basis |S, m> is ordered by descending m (m = S first).  The
returned S+ and S- carry the ladder normalization sqrt(S(S+1) - m(m+-1));
Sx, Sy, Sz are the sums of single-site Pauli operators and are therefore a
factor SPIN_CONVENTION_SCALE = 2 larger than the ladder generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import dag, is_hermitian
from .policy import POLICY, DeskScaleError

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "SIGMA_PLUS",
    "SIGMA_MINUS",
    "ID2",
    "SPIN_CONVENTION_SCALE",
    "QubitRegister",
    "chain_register",
    "FermionMap",
    "DickeSpace",
    "DickeOperators",
    "TensorSpace",
    "embed",
    "jw_annihilation",
    "number_operator",
    "total_parity",
    "partial_trace",
    "partial_transpose",
    "dicke_operators",
    "vacuum_state",
    "basis_state",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)

# Sx = Sum sigma_x is twice the ladder generator Jx; ratio kept as a named
# constant so metric code can state which convention it assumes.
SPIN_CONVENTION_SCALE = 2.0


@dataclass(frozen=True)
class QubitRegister:
    """Ordered collection of labelled qubits; label order fixes the tensor layout."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("register labels must be unique")
        if 2 ** len(self.labels) > POLICY.max_operator_dim:
            raise DeskScaleError(
                f"register of {len(self.labels)} qubits exceeds the desk-scale limit"
            )

    @property
    def n_qubits(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"label {label!r} not in register {self.labels}") from None


def chain_register(n: int, aux: bool = False) -> QubitRegister:
    """Canonical double-chain layout A1..An, B1..Bn, optional trailing aux qubit."""
    labels = [f"A{i}" for i in range(1, n + 1)] + [f"B{i}" for i in range(1, n + 1)]
    if aux:
        labels.append("P")
    return QubitRegister(tuple(labels))


@dataclass(frozen=True)
class FermionMap:
    """Jordan-Wigner ordering: string runs along ``order`` (defaults to layout order)."""

    register: QubitRegister
    order: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.order:
            object.__setattr__(self, "order", self.register.labels)
        if sorted(self.order) != sorted(self.register.labels):
            raise ValueError("FermionMap order must be a permutation of the register labels")

    @property
    def n_sites(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class DickeSpace:
    """Maximum angular-momentum sector of N spins; basis |S, m>, m descending."""

    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("DickeSpace needs N >= 1")

    @property
    def S(self) -> float:
        return self.N / 2.0

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def m_values(self) -> np.ndarray:
        return self.S - np.arange(self.N + 1)


@dataclass(frozen=True)
class TensorSpace:
    """Product of simple factors (e.g. an aux qubit in front of a Dicke space)."""

    dims: tuple[int, ...]
    name: str = ""

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))


def embed(op: np.ndarray, sites, reg: QubitRegister) -> np.ndarray:
    """Embed an operator on the given sites into the full register, identity elsewhere.

    ``op`` must be 2^k x 2^k for k sites; its factor order follows ``sites``.
    """
    if isinstance(sites, str):
        sites = [sites]
    sites = list(sites)
    positions = [reg.position(s) for s in sites]
    if len(set(positions)) != len(positions):
        raise ValueError("embed: sites must be distinct")
    k = len(positions)
    op = np.asarray(op, dtype=complex)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"embed: operator shape {op.shape} does not match {k} site(s)")
    nq = reg.n_qubits
    if reg.dim > POLICY.max_operator_dim:
        raise DeskScaleError("embed: register exceeds dense desk-scale limit")
    rest = [p for p in range(nq) if p not in positions]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # current factor order is sites + rest; permute to register layout
    current = positions + rest
    perm = np.argsort(current)
    t = full.reshape((2,) * (2 * nq))
    t = t.transpose(list(perm) + [nq + p for p in perm])
    return np.ascontiguousarray(t.reshape(reg.dim, reg.dim))


def jw_annihilation(i: int, fmap: FermionMap) -> np.ndarray:
    """Fermionic annihilation operator c_i = (prod_{j<i} sigma_z_j) sigma^-_i.

    ``i`` is 1-based along the map's ordering.
    """
    if not 1 <= i <= fmap.n_sites:
        raise IndexError(f"fermion site index {i} out of range 1..{fmap.n_sites}")
    reg = fmap.register
    out = embed(SIGMA_MINUS, fmap.order[i - 1], reg)
    for j in range(i - 1):
        out = embed(SIGMA_Z, fmap.order[j], reg) @ out
    return out


def _bit_counts(nq: int) -> np.ndarray:
    idx = np.arange(2**nq, dtype=np.int64)
    counts = np.zeros(2**nq, dtype=np.int64)
    for k in range(nq):
        counts += (idx >> k) & 1
    return counts


def number_operator(reg: QubitRegister) -> np.ndarray:
    """Total excitation number n = Sum (sigma_z + 1)/2, diagonal in the layout basis."""
    # bit value 0 marks the excited local state, so n = n_qubits - popcount
    n_exc = reg.n_qubits - _bit_counts(reg.n_qubits)
    return np.diag(n_exc.astype(complex))


def total_parity(reg: QubitRegister) -> np.ndarray:
    """(-1)^n with n the total excitation number; +1 on the all-|0> state."""
    n_exc = reg.n_qubits - _bit_counts(reg.n_qubits)
    return np.diag(((-1.0) ** n_exc).astype(complex))


def parity_diagonal(reg: QubitRegister) -> np.ndarray:
    """Diagonal of ``total_parity`` as a real vector (cheap form for projections)."""
    n_exc = reg.n_qubits - _bit_counts(reg.n_qubits)
    return (-1.0) ** n_exc


def vacuum_state(reg: QubitRegister) -> np.ndarray:
    """|00...0>: every qubit in its ground state (last basis vector)."""
    psi = np.zeros(reg.dim, dtype=complex)
    psi[-1] = 1.0
    return psi


def basis_state(reg: QubitRegister, excited=()) -> np.ndarray:
    """Product state with the listed labels excited and the rest in |0>."""
    idx = reg.dim - 1
    for label in excited:
        p = reg.position(label)
        idx -= 1 << (reg.n_qubits - 1 - p)
    psi = np.zeros(reg.dim, dtype=complex)
    psi[idx] = 1.0
    return psi


def _positions(labels, reg: QubitRegister) -> list[int]:
    if isinstance(labels, str):
        labels = [labels]
    return [reg.position(s) for s in labels]


def partial_trace(rho: np.ndarray, keep, reg: QubitRegister) -> np.ndarray:
    """Reduced density matrix on the ``keep`` labels (in register layout order)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (reg.dim, reg.dim):
        raise ValueError("partial_trace: rho dimension does not match the register")
    if not is_hermitian(rho):
        raise ValueError("partial_trace: rho is not Hermitian within tolerance")
    keep_pos = sorted(_positions(keep, reg))
    nq = reg.n_qubits
    traced = [p for p in range(nq) if p not in keep_pos]
    t = rho.reshape((2,) * (2 * nq))
    # move kept row/col axes to the front, traced axes to the back
    perm = keep_pos + traced
    t = t.transpose([p for p in perm] + [nq + p for p in perm])
    dk = 2 ** len(keep_pos)
    dt = 2 ** len(traced)
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("arbr->ab", t)


def partial_transpose(rho: np.ndarray, subsystem, reg: QubitRegister) -> np.ndarray:
    """Transpose the row/column indices of the given subsystem labels."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (reg.dim, reg.dim):
        raise ValueError("partial_transpose: rho dimension does not match the register")
    pos = _positions(subsystem, reg)
    nq = reg.n_qubits
    t = rho.reshape((2,) * (2 * nq))
    axes = list(range(2 * nq))
    for p in pos:
        axes[p], axes[nq + p] = axes[nq + p], axes[p]
    return np.ascontiguousarray(t.transpose(axes).reshape(reg.dim, reg.dim))


@dataclass(frozen=True)
class DickeOperators:
    sp: np.ndarray
    sm: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    space: DickeSpace = field(repr=False, default=None)


def dicke_operators(N: int) -> DickeOperators:
    """Collective spin operators on DickeSpace(N).

    ``sp``/``sm`` are ladder-normalized; ``sx``/``sy``/``sz`` follow the
    sum-of-Pauli convention (twice the ladder generators), so
    [sp, sm] = sz and [sz, sp] = 2 sp.
    """
    space = DickeSpace(N)
    S = space.S
    m = space.m_values
    # raising element <m+1|S+|m> on the super-diagonal (m descending)
    off = np.sqrt(S * (S + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((N + 1, N + 1), dtype=complex)
    sp[np.arange(N), np.arange(1, N + 1)] = off
    sm = dag(sp)
    sx = sp + sm
    sy = -1j * (sp - sm)
    sz = np.diag((SPIN_CONVENTION_SCALE * m).astype(complex))
    return DickeOperators(sp=sp, sm=sm, sx=sx, sy=sy, sz=sz, space=space)
