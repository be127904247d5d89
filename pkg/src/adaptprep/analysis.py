"""Entanglement and metrology metrics: entropies, negativity, Schmidt data,
Wineland squeezing, quantum Fisher information, relaxation fits, and the
mixed-state squeezing-loss formula with its explicit-mixture cross check.

Entropies are natural-log by default; log-negativity is the one log2
quantity, matching its usual normalization (one Bell pair -> 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hilbert import DickeSpace, dicke_operators
from .linalg import is_hermitian, trace_norm
from .models import squeezing_dark_state

__all__ = [
    "SchmidtSpectrum",
    "FitResult",
    "schmidt_coefficients",
    "entanglement_entropy",
    "entropy_from_probabilities",
    "renyi2_and_delta_e2",
    "log_negativity",
    "wineland",
    "qfi_check",
    "fit_relaxation",
    "mixed_squeezing_ratio",
    "trace_out_aux",
]

_LOG_BASE = {"e": 1.0, 2: math.log(2.0), "2": math.log(2.0)}


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Non-negative Schmidt coefficients, descending, with sum of squares 1."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float)
        if np.any(c < -1e-12) or np.any(np.diff(c) > 1e-12):
            raise ValueError("Schmidt coefficients must be nonnegative and descending")
        if abs(np.sum(c * c) - 1.0) > 1e-12:
            raise ValueError("Schmidt coefficients must have unit sum of squares")
        object.__setattr__(self, "coefficients", c)

    @property
    def probabilities(self) -> np.ndarray:
        c = self.coefficients
        return c * c


@dataclass(frozen=True)
class FitResult:
    """Saturation-curve fit S(d) = a (1 - exp(-d/xi))."""

    amplitude: float
    xi: float
    residual: float


def _subsystem_split(psi: np.ndarray, subsystem) -> np.ndarray:
    """Reshape a qubit-register state to a (dim_A, dim_B) matrix."""
    psi = np.asarray(psi, dtype=complex)
    nq = int(round(math.log2(psi.size)))
    if 2**nq != psi.size:
        raise ValueError("state dimension is not a power of two")
    pos = list(subsystem)
    if not pos or any(p < 0 or p >= nq for p in pos) or len(set(pos)) != len(pos):
        raise ValueError(f"invalid bipartition {subsystem} for {nq} qubits")
    rest = [q for q in range(nq) if q not in pos]
    t = psi.reshape((2,) * nq).transpose(pos + rest)
    return t.reshape(2 ** len(pos), 2 ** len(rest))


def schmidt_coefficients(psi: np.ndarray, subsystem) -> SchmidtSpectrum:
    """Schmidt coefficients across (subsystem qubit positions | rest)."""
    mat = _subsystem_split(psi, subsystem)
    s = np.linalg.svd(mat, compute_uv=False)
    norm = np.linalg.norm(s)
    if norm == 0:
        raise ValueError("zero state has no Schmidt decomposition")
    return SchmidtSpectrum(np.sort(s / norm)[::-1])


def entropy_from_probabilities(p: np.ndarray, base="e") -> float:
    scale = _LOG_BASE[base]
    p = np.asarray(p, dtype=float)
    p = p[p > 1e-14]
    return float(-np.sum(p * np.log(p)) / scale)


def entanglement_entropy(psi: np.ndarray, subsystem, base="e") -> float:
    """Bipartite von Neumann entropy of a pure qubit-register state.

    ``subsystem`` lists the qubit positions of one side; eigenvalues of the
    reduced state below 1e-14 are dropped.
    """
    psi = np.asarray(psi, dtype=complex)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("state must be normalized")
    spec = schmidt_coefficients(psi, subsystem)
    return entropy_from_probabilities(spec.probabilities, base=base)


def renyi2_and_delta_e2(rho_a: np.ndarray, n_local: int) -> tuple[float, float]:
    """Renyi-2 entropy of a reduced state and the gap to maximal entanglement.

    Returns (S2, deltaE2) with S2 = -ln tr(rho^2) and
    deltaE2 = exp(-S2) - 1/N = tr(rho^2) - 1/N, N the local dimension.
    """
    rho_a = np.asarray(rho_a, dtype=complex)
    if not is_hermitian(rho_a):
        raise ValueError("reduced state must be Hermitian")
    if abs(np.trace(rho_a).real - 1.0) > 1e-8:
        raise ValueError("reduced state must have unit trace")
    purity = float(np.real(np.trace(rho_a @ rho_a)))
    s2 = -math.log(purity)
    return s2, purity - 1.0 / n_local


def log_negativity(rho: np.ndarray, dim_a: int) -> float:
    """log2 of the trace norm of the partial transpose on the leading factor.

    ``rho`` lives on a bipartite space of dimensions (dim_a, D/dim_a) with
    the A factor contiguous and leading.  PPT states give 0.
    """
    rho = np.asarray(rho, dtype=complex)
    d = rho.shape[0]
    if d % dim_a != 0:
        raise ValueError("dim_a does not divide the total dimension")
    dim_b = d // dim_a
    t = rho.reshape(dim_a, dim_b, dim_a, dim_b).transpose(2, 1, 0, 3)
    rho_pt = t.reshape(d, d)
    return max(0.0, math.log2(trace_norm(rho_pt)))


def _as_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def trace_out_aux(state: np.ndarray, inner_dim: int, aux_first: bool = True) -> np.ndarray:
    """Reduce a (2 x inner) register state over the auxiliary qubit."""
    rho = _as_density(state)
    if rho.shape[0] != 2 * inner_dim:
        raise ValueError("state dimension does not match 2 * inner_dim")
    if aux_first:
        t = rho.reshape(2, inner_dim, 2, inner_dim)
        return np.einsum("aiaj->ij", t)
    t = rho.reshape(inner_dim, 2, inner_dim, 2)
    return np.einsum("iaja->ij", t)


def _spin_moments(rho: np.ndarray, ops) -> dict:
    def ex(op):
        return complex(np.trace(rho @ op))

    return {
        "x": ex(ops.sx).real,
        "y": ex(ops.sy).real,
        "z": ex(ops.sz).real,
        "xx": ex(ops.sx @ ops.sx).real,
        "yy": ex(ops.sy @ ops.sy).real,
        "xy": ex(ops.sx @ ops.sy),
    }


def wineland(state: np.ndarray, space: DickeSpace, axis: str = "x") -> float:
    """Wineland squeezing parameter N var(S_axis) / |<S>|^2.

    ``axis="x"`` uses the x quadrature; ``axis="min"`` minimizes the variance
    over in-plane quadratures (useful for mixtures where the squeezed axis
    rotates).  The ratio is scale-invariant in the spin convention.  Returns
    +inf when |<S>| vanishes (parameter undefined).
    """
    rho = _as_density(state)
    if rho.shape[0] != space.dim:
        raise ValueError("state does not live in the given Dicke space")
    ops = dicke_operators(space.N)
    m = _spin_moments(rho, ops)
    denom = m["x"] ** 2 + m["y"] ** 2 + m["z"] ** 2
    if math.sqrt(max(denom, 0.0)) < 1e-10:
        return math.inf
    if axis == "x":
        var = m["xx"] - m["x"] ** 2
    elif axis == "min":
        vxx = m["xx"] - m["x"] ** 2
        vyy = m["yy"] - m["y"] ** 2
        vxy = m["xy"].real - m["x"] * m["y"]  # symmetrized cross covariance
        cov = np.array([[vxx, vxy], [vxy, vyy]])
        var = float(np.linalg.eigvalsh(cov)[0])
    else:
        raise ValueError("axis must be 'x' or 'min'")
    return float(space.N * var / denom)


def qfi_check(state: np.ndarray, space: DickeSpace, r: float) -> tuple[float, float]:
    """Quantum Fisher information of a squeezing dark state, with its Wineland pair.

    The state must be annihilated by S+ + tanh(r) S-.  F_Q is computed from
    the transverse variance in ladder units, 4 var(S_y / 2), for which
    F_Q * xi_R^2 = N holds exactly on these states.
    """
    psi = np.asarray(state, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("qfi_check expects a pure state vector")
    ops = dicke_operators(space.N)
    jump = ops.sp + math.tanh(r) * ops.sm
    if np.linalg.norm(jump @ psi) > 1e-8 * max(1.0, float(np.abs(jump).max())):
        raise ValueError("state is not annihilated by the squeezing jump")
    rho = np.outer(psi, psi.conj())
    m = _spin_moments(rho, ops)
    var_sy_ladder = (m["yy"] - m["y"] ** 2) / 4.0
    f_q = 4.0 * var_sy_ladder
    xi = wineland(psi, space, axis="x")
    return float(f_q), float(xi)


def fit_relaxation(cycles, values, n: int | None = None) -> FitResult:
    """Least-squares fit of S(d) = a (1 - exp(-d/xi)) to a saturation curve.

    One-dimensional golden-section search on xi with the closed-form optimal
    amplitude at each xi.  Needs at least 8 strictly increasing abscissae.
    """
    d = np.asarray(cycles, dtype=float)
    s = np.asarray(values, dtype=float)
    if d.size < 8:
        raise ValueError("need at least 8 points to fit the relaxation curve")
    if np.any(np.diff(d) <= 0):
        raise ValueError("abscissae must be strictly increasing")
    if float(np.ptp(s)) < 1e-12 * max(1.0, float(np.abs(s).max())):
        raise ValueError("degenerate series: values are constant")

    span = d[-1] - d[0]

    def rss(log_xi: float) -> tuple[float, float]:
        xi = math.exp(log_xi)
        f = 1.0 - np.exp(-d / xi)
        ff = float(f @ f)
        a = float(s @ f) / ff if ff > 0 else 0.0
        res = s - a * f
        return float(res @ res), a

    lo = math.log(max(span * 1e-3, 1e-6))
    hi = math.log(span * 100.0)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - invphi * (hi - lo)
    g = lo + invphi * (hi - lo)
    fc, _ = rss(c)
    fg, _ = rss(g)
    for _ in range(200):
        if hi - lo < 1e-10:
            break
        if fc < fg:
            hi, g, fg = g, c, fc
            c = hi - invphi * (hi - lo)
            fc, _ = rss(c)
        else:
            lo, c, fc = c, g, fg
            g = lo + invphi * (hi - lo)
            fg, _ = rss(g)
    best = 0.5 * (lo + hi)
    final_rss, a = rss(best)
    return FitResult(amplitude=a, xi=math.exp(best), residual=math.sqrt(final_rss))


def mixed_squeezing_ratio(alpha: float, r: float, N: int) -> tuple[float, float]:
    """Squeezing loss ratio xi^2(alpha)/xi^2(0) for an x/y-squeezed mixture.

    Returns (closed_form, direct) where the closed form is
    1 + (exp(4 r) - 1) alpha and the direct value is computed from the
    explicit mixture (1-alpha)|psi_x><psi_x| + alpha |psi_y><psi_y|.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    closed = 1.0 + (math.exp(4.0 * r) - 1.0) * alpha
    space = DickeSpace(N)
    psi_x = squeezing_dark_state(N, r, axis="x")
    psi_y = squeezing_dark_state(N, r, axis="y")
    rho = (1.0 - alpha) * np.outer(psi_x, psi_x.conj()) + alpha * np.outer(
        psi_y, psi_y.conj()
    )
    direct = wineland(rho, space, axis="x") / wineland(psi_x, space, axis="x")
    return closed, float(direct)
