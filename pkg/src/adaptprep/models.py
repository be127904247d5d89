"""Builders for the concrete models: boundary-driven chains, their
string-operator and adaptive variants, collective-spin squeezing, and
random Lindbladians with a prescribed steady-state entanglement.

Chains live on the layout A1..An, B1..Bn (adaptive variant appends one aux
qubit "P").  All rates are quoted in units of the bath rate Gamma; J and
Delta share those units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    DickeSpace,
    FermionMap,
    TensorSpace,
    chain_register,
    dicke_operators,
    embed,
    jw_annihilation,
    total_parity,
    vacuum_state,
)
from .linalg import dag, null_space
from .lindblad import LindbladModel
from .policy import DeskScaleError, NumericsError

__all__ = [
    "ChainParams",
    "SqueezeParams",
    "RandomModelParams",
    "fermion_chain",
    "spin_chain",
    "string_spin_model",
    "adaptive_continuous",
    "adaptive_jump_sets",
    "squeezing_standard",
    "squeezing_adaptive",
    "squeezing_jump_sets",
    "random_lindbladian",
    "chain_dark_state",
    "squeezing_dark_state",
    "dark_state_entropy",
]

MAX_CHAIN_QUBITS = 12  # 2n limit for dense chain models


@dataclass(frozen=True)
class ChainParams:
    """Parameters of the double-chain models; u^2 + v^2 = 1."""

    n: int
    u: float
    v: float
    J: float = 1.0
    delta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one site per chain")
        if abs(self.u**2 + self.v**2 - 1.0) > 1e-12:
            raise ValueError("bath amplitudes must satisfy u^2 + v^2 = 1")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")

    @classmethod
    def from_v2(cls, n: int, v2: float, J: float = 1.0, delta: float = 0.0,
                gamma: float = 1.0) -> "ChainParams":
        if not 0.0 <= v2 <= 1.0:
            raise ValueError("v2 must lie in [0, 1]")
        return cls(n=n, u=math.sqrt(1.0 - v2), v=math.sqrt(v2), J=J,
                   delta=delta, gamma=gamma)


@dataclass(frozen=True)
class SqueezeParams:
    """Collective-spin squeezing model parameters; N must be even."""

    N: int
    r: float
    gamma: float = 1.0

    def __post_init__(self):
        if self.N < 2 or self.N % 2 != 0:
            raise ValueError("squeezing models need an even spin count N >= 2")
        if self.r < 0:
            raise ValueError("squeezing parameter r must be nonnegative")


@dataclass(frozen=True)
class RandomModelParams:
    """Random Lindbladian with a target Renyi-2 steady-state entanglement."""

    N: int
    s2_target: float
    seed: int
    m: int = 2
    with_aux: bool = False

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("local dimension N must be at least 2")
        if self.m < 2:
            raise ValueError("need m > 1 jump operators for a unique steady state")
        if not 0.0 <= self.s2_target <= math.log(self.N) + 1e-12:
            raise ValueError("s2_target must lie in [0, ln N]")


def _check_chain_size(n: int) -> None:
    if 2 * n > MAX_CHAIN_QUBITS:
        raise DeskScaleError(f"chain models are limited to 2n <= {MAX_CHAIN_QUBITS} qubits")


def _chain_sites(n: int):
    return [f"A{i}" for i in range(1, n + 1)], [f"B{i}" for i in range(1, n + 1)]


def fermion_chain(p: ChainParams) -> LindbladModel:
    """Two tight-binding fermion chains with boundary pairing dissipation.

    The fermion operators are Jordan-Wigner matrices on the chain layout;
    the quartic density-density interaction is built string-free from
    n = c^dag c.  Jumps: u c_A1 + v c^dag_B1 and u c_B1 - v c^dag_A1.
    """
    _check_chain_size(p.n)
    reg = chain_register(p.n)
    fmap = FermionMap(reg)
    n = p.n
    c = {}
    for k, label in enumerate(reg.labels, start=1):
        c[label] = jw_annihilation(k, fmap)

    dim = reg.dim
    h_half = np.zeros((dim, dim), dtype=complex)
    for sign, chain in ((1.0, "A"), (-1.0, "B")):
        for i in range(1, n):
            a, b = c[f"{chain}{i}"], c[f"{chain}{i + 1}"]
            h_half += sign * p.J * (dag(a) @ b)
            if p.delta != 0.0:
                na = dag(a) @ a
                nb = dag(b) @ b
                h_half += sign * (p.delta / 2.0) * (na @ nb)
    h = h_half + dag(h_half)

    l1 = p.u * c["A1"] + p.v * dag(c["B1"])
    l2 = p.u * c["B1"] - p.v * dag(c["A1"])
    return LindbladModel(h=h, jumps=[(l1, p.gamma), (l2, p.gamma)], register=reg)


def spin_chain(p: ChainParams) -> LindbladModel:
    """Pair of anisotropic XXZ spin chains with local boundary pairing jumps."""
    _check_chain_size(p.n)
    reg = chain_register(p.n)
    n = p.n
    dim = reg.dim
    h_half = np.zeros((dim, dim), dtype=complex)
    for sign, chain in ((1.0, "A"), (-1.0, "B")):
        for i in range(1, n):
            site, nxt = f"{chain}{i}", f"{chain}{i + 1}"
            h_half += sign * p.J * (
                embed(SIGMA_PLUS, site, reg) @ embed(SIGMA_MINUS, nxt, reg)
            )
            if p.delta != 0.0:
                h_half += sign * (p.delta / 2.0) * (
                    embed(SIGMA_Z, site, reg) @ embed(SIGMA_Z, nxt, reg)
                )
    h = h_half + dag(h_half)

    l1 = p.u * embed(SIGMA_MINUS, "A1", reg) + p.v * embed(SIGMA_PLUS, "B1", reg)
    l2 = p.u * embed(SIGMA_MINUS, "B1", reg) + p.v * embed(SIGMA_PLUS, "A1", reg)
    return LindbladModel(h=h, jumps=[(l1, p.gamma), (l2, p.gamma)], register=reg)


def string_spin_model(p: ChainParams) -> LindbladModel:
    """Qubit chains whose boundary jumps carry the total-parity string.

    Spectrally equivalent to ``fermion_chain`` at Delta = 0; nonzero Delta
    is rejected.
    """
    if p.delta != 0.0:
        raise ValueError("the string model is defined for Delta = 0 only")
    _check_chain_size(p.n)
    reg = chain_register(p.n)
    n = p.n
    dim = reg.dim
    h_half = np.zeros((dim, dim), dtype=complex)
    for sign, chain in ((1.0, "A"), (-1.0, "B")):
        for i in range(1, n):
            h_half += sign * p.J * (
                embed(SIGMA_PLUS, f"{chain}{i}", reg)
                @ embed(SIGMA_MINUS, f"{chain}{i + 1}", reg)
            )
    h = h_half + dag(h_half)

    parity = total_parity(reg)
    l1 = p.u * embed(SIGMA_MINUS, "A1", reg) - p.v * embed(SIGMA_PLUS, "B1", reg) @ parity
    l2 = p.u * embed(SIGMA_MINUS, "B1", reg) @ parity - p.v * embed(SIGMA_PLUS, "A1", reg)
    return LindbladModel(h=h, jumps=[(l1, p.gamma), (l2, p.gamma)], register=reg)


def adaptive_continuous(p: ChainParams) -> LindbladModel:
    """String model with the parity bit promoted to an auxiliary qubit.

    The register gains one trailing qubit "P"; each jump flips it and its
    sigma_z eigenvalue stands in for the parity string.
    """
    if p.delta != 0.0:
        raise ValueError("the adaptive chain model is defined for Delta = 0 only")
    _check_chain_size(p.n)
    reg = chain_register(p.n, aux=True)
    n = p.n
    dim = reg.dim
    h_half = np.zeros((dim, dim), dtype=complex)
    for sign, chain in ((1.0, "A"), (-1.0, "B")):
        for i in range(1, n):
            h_half += sign * p.J * (
                embed(SIGMA_PLUS, f"{chain}{i}", reg)
                @ embed(SIGMA_MINUS, f"{chain}{i + 1}", reg)
            )
    h = h_half + dag(h_half)

    xp = embed(SIGMA_X, "P", reg)
    zp = embed(SIGMA_Z, "P", reg)
    l1 = xp @ (
        p.u * embed(SIGMA_MINUS, "A1", reg) + p.v * embed(SIGMA_PLUS, "B1", reg) @ zp
    )
    l2 = xp @ (
        p.u * embed(SIGMA_MINUS, "B1", reg) @ zp + p.v * embed(SIGMA_PLUS, "A1", reg)
    )
    return LindbladModel(h=h, jumps=[(l1, p.gamma), (l2, p.gamma)], register=reg)


def adaptive_jump_sets(p: ChainParams, frame: str = "conserving",
                       ) -> tuple[LindbladModel, LindbladModel]:
    """Jump-set pair (P = +1, P = -1) for the classically tracked chain protocol.

    The ``"conserving"`` frame (hopping with equal signs, boundary operators
    u sm_A1 -+ v sm_B1 and u sp_B1 -+ v sp_A1) keeps per-trajectory
    entanglement growth monotone; the ``"paired"`` frame carries the jump
    operators in their pair-creation form with the sign-split Hamiltonian
    (the direct classical reduction of the string model).  The frames are
    related by inverting the B-chain basis and share all spectral and
    entanglement observables.
    """
    if p.delta != 0.0:
        raise ValueError("the adaptive chain protocol is defined for Delta = 0 only")
    _check_chain_size(p.n)
    reg = chain_register(p.n)
    dim = reg.dim
    split = frame == "paired"
    h_half = np.zeros((dim, dim), dtype=complex)
    for sign, chain in ((1.0, "A"), (-1.0 if split else 1.0, "B")):
        for i in range(1, p.n):
            h_half += sign * p.J * (
                embed(SIGMA_PLUS, f"{chain}{i}", reg)
                @ embed(SIGMA_MINUS, f"{chain}{i + 1}", reg)
            )
    h = h_half + dag(h_half)

    sm_a1 = embed(SIGMA_MINUS, "A1", reg)
    sp_a1 = embed(SIGMA_PLUS, "A1", reg)
    sm_b1 = embed(SIGMA_MINUS, "B1", reg)
    sp_b1 = embed(SIGMA_PLUS, "B1", reg)
    sets = {}
    for pval in (+1, -1):
        if frame == "conserving":
            l1 = p.u * sm_a1 - pval * p.v * sm_b1
            l2 = p.u * sp_b1 - pval * p.v * sp_a1
        elif frame == "paired":
            l1 = p.u * sm_a1 - pval * p.v * sp_b1
            l2 = p.u * sm_b1 - pval * p.v * sp_a1
        else:
            raise ValueError("frame must be 'conserving' or 'paired'")
        sets[pval] = LindbladModel(
            h=h, jumps=[(l1, p.gamma), (l2, p.gamma)], register=reg
        )
    return sets[+1], sets[-1]


def squeezing_standard(p: SqueezeParams) -> LindbladModel:
    """Single collective jump S+ + tanh(r) S- on the Dicke space, H = 0."""
    ops = dicke_operators(p.N)
    jump = ops.sp + math.tanh(p.r) * ops.sm
    dim = p.N + 1
    return LindbladModel(
        h=np.zeros((dim, dim), dtype=complex),
        jumps=[(jump, p.gamma)],
        register=DickeSpace(p.N),
    )


def squeezing_jump_sets(p: SqueezeParams) -> tuple[LindbladModel, LindbladModel]:
    """Jump-set pair for the discretely toggled squeezing protocol.

    Each detected jump switches S+ + tanh(r) S-  <->  S+ - tanh(r) S-,
    i.e. the squeezed quadrature alternates between x and y.
    """
    ops = dicke_operators(p.N)
    t = math.tanh(p.r)
    dim = p.N + 1
    h = np.zeros((dim, dim), dtype=complex)
    space = DickeSpace(p.N)
    plus = LindbladModel(h=h, jumps=[(ops.sp + t * ops.sm, p.gamma)], register=space)
    minus = LindbladModel(h=h, jumps=[(ops.sp - t * ops.sm, p.gamma)], register=space)
    return plus, minus


def squeezing_adaptive(p: SqueezeParams) -> LindbladModel:
    """Squeezing jump dressed with an auxiliary qubit that flips on every jump.

    Jump operator sigma_x_aux (S+ + sigma_z_aux tanh(r) S-) on the aux (x) Dicke
    register, aux factor first.
    """
    ops = dicke_operators(p.N)
    t = math.tanh(p.r)
    jump = np.kron(SIGMA_X, ops.sp) + t * np.kron(SIGMA_X @ SIGMA_Z, ops.sm)
    space = TensorSpace((2, p.N + 1), name=f"aux*dicke(N={p.N})")
    dim = space.dim
    return LindbladModel(
        h=np.zeros((dim, dim), dtype=complex),
        jumps=[(jump, p.gamma)],
        register=space,
    )


def _renyi2_of_probs(q: np.ndarray) -> float:
    return float(-np.log(np.sum(q * q)))


def _schmidt_probs_for_target(rng: np.random.Generator, N: int, target: float,
                              tol: float = 1e-6, max_draws: int = 1000) -> np.ndarray:
    """Squared Schmidt coefficients with Renyi-2 entropy pinned to ``target``.

    Draws from the flat simplex, then interpolates toward the uniform
    distribution and bisects the mixing weight.  Redraws until the sample
    brackets the target from below.
    """
    uniform = np.full(N, 1.0 / N)
    for _ in range(max_draws):
        q = rng.dirichlet(np.ones(N))
        if _renyi2_of_probs(q) <= target + tol:
            break
    else:
        raise NumericsError(
            f"could not bracket S2 target {target:.4f} from below in {max_draws} draws"
        )
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = _renyi2_of_probs((1.0 - mid) * q + mid * uniform)
        if abs(val - target) <= tol:
            lo = hi = mid
            break
        if val < target:
            lo = mid
        else:
            hi = mid
    lam = 0.5 * (lo + hi)
    return (1.0 - lam) * q + lam * uniform


def random_lindbladian(p: RandomModelParams) -> tuple[LindbladModel, np.ndarray]:
    """Random jump operators annihilating a bipartite state of chosen entanglement.

    Each jump is A kron 1 - 1 kron Psi A^T Psi^{-1} with Ginibre A, built in
    the Schmidt basis (transposition is plain matrix transpose there).  With
    ``with_aux`` the jumps gain sigma_x / i sigma_y auxiliary-qubit factors and
    the target state an aux factor pinned to the sigma_z = +1 state.
    Returns (model, target_state); every jump annihilates the target.
    """
    rng = np.random.default_rng(p.seed)
    N = p.N
    probs = _schmidt_probs_for_target(rng, N, p.s2_target)
    psi_coeffs = np.sqrt(probs)
    psi_mat = np.diag(psi_coeffs)
    psi_inv = np.diag(1.0 / psi_coeffs)

    target = np.zeros(N * N, dtype=complex)
    target[np.arange(N) * N + np.arange(N)] = psi_coeffs  # sum_i psi_i |ii>

    ident = np.eye(N, dtype=complex)
    jumps = []
    for _ in range(p.m):
        a = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / np.sqrt(2.0)
        mirrored = psi_mat @ a.T @ psi_inv
        if p.with_aux:
            op = np.kron(SIGMA_X, np.kron(a, ident)) + np.kron(
                1j * SIGMA_Y, np.kron(ident, mirrored)
            )
        else:
            op = np.kron(a, ident) - np.kron(ident, mirrored)
        jumps.append((op, 1.0))

    if p.with_aux:
        aux_up = np.array([1.0, 0.0], dtype=complex)  # sigma_z = +1
        target = np.kron(aux_up, target)
        space = TensorSpace((2, N, N), name=f"aux*bipartite({N})")
    else:
        space = TensorSpace((N, N), name=f"bipartite({N})")

    dim = space.dim
    model = LindbladModel(
        h=np.zeros((dim, dim), dtype=complex), jumps=jumps, register=space
    )
    return model, target


def chain_dark_state(p: ChainParams, pairing_sign: float = -1.0,
                     fermionic: bool = False) -> np.ndarray:
    """Paired dark state prod_i (u + pairing_sign * v * adag_Ai adag_Bi) |0>.

    ``pairing_sign=-1`` matches the boundary jumps of ``spin_chain`` and
    ``fermion_chain``; the string and circuit variants use +1.  Creation
    operators are sigma+ embeddings, or Jordan-Wigner c^dag when
    ``fermionic`` is set.
    """
    reg = chain_register(p.n)
    fmap = FermionMap(reg) if fermionic else None
    psi = vacuum_state(reg)
    for i in range(1, p.n + 1):
        if fermionic:
            ca = jw_annihilation(reg.position(f"A{i}") + 1, fmap)
            cb = jw_annihilation(reg.position(f"B{i}") + 1, fmap)
            pair = dag(ca) @ dag(cb)
        else:
            pair = embed(SIGMA_PLUS, f"A{i}", reg) @ embed(SIGMA_PLUS, f"B{i}", reg)
        psi = p.u * psi + pairing_sign * p.v * (pair @ psi)
    return psi / np.linalg.norm(psi)


def squeezing_dark_state(N: int, r: float, axis: str = "x") -> np.ndarray:
    """Kernel state of S+ + tanh(r) S- (axis "x") or S+ - tanh(r) S- ("y")."""
    ops = dicke_operators(N)
    t = math.tanh(r)
    sign = {"x": 1.0, "y": -1.0}[axis]
    kernel = null_space(ops.sp + sign * t * ops.sm)
    if kernel.shape[1] != 1:
        raise NumericsError(
            f"squeezing jump kernel has dimension {kernel.shape[1]} (need N even)"
        )
    psi = kernel[:, 0]
    # fix the overall phase: largest-|m| component real positive
    k = int(np.argmax(np.abs(psi)))
    psi = psi * np.exp(-1j * np.angle(psi[k]))
    return psi / np.linalg.norm(psi)


def dark_state_entropy(p: ChainParams) -> float:
    """Interchain S_vN of the paired dark state: n Schmidt pairs (u, v)."""
    total = 0.0
    for w in (p.u**2, p.v**2):
        if w > 1e-300:
            total -= w * math.log(w)
    return p.n * total
