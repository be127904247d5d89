"""Statevector simulator of the adaptive brickwork circuit.

One cycle applies the two Hamiltonian brickwork layers, then two jump
blocks.  Each jump block entangles the boundary sites with an auxiliary
qubit through a unitary built from the current parity bit P, measures the
auxiliary qubit projectively, records the outcome (a click is missed with
probability epsilon), updates P on a recorded click, and physically resets
the auxiliary qubit (the projection outcome is known, so the reset is a
conditional bit flip and never wrong).

Register layout: A1..An, B1..Bn, aux last.  The cycle order
U_H1, U_H2, jump-1, jump-2 is fixed and documented here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import entanglement_entropy, log_negativity
from .hilbert import (
    ID2,
    SIGMA_MINUS,
    SIGMA_PLUS,
    QubitRegister,
    chain_register,
    embed,
    parity_diagonal,
    vacuum_state,
)
from .linalg import dag, expm
from .policy import DeskScaleError
from .results import ResultTable

__all__ = [
    "BrickworkGates",
    "CircuitState",
    "CycleReport",
    "build_gates",
    "run_cycle",
    "run_circuit",
]

MAX_CIRCUIT_QUBITS = 13  # 2n + 1


def apply_gate(psi: np.ndarray, gate: np.ndarray, positions, nq: int) -> np.ndarray:
    """Apply a 2^k x 2^k gate to the listed qubit positions of a statevector."""
    k = len(positions)
    t = psi.reshape((2,) * nq)
    t = np.moveaxis(t, positions, range(k))
    t = gate @ t.reshape(2**k, -1)
    t = np.moveaxis(t.reshape((2,) * nq), range(k), positions)
    return np.ascontiguousarray(t).reshape(-1)


@dataclass
class BrickworkGates:
    """Factored circuit gates plus dense full-register forms for testing.

    ``layer1``/``layer2`` hold (positions, 4x4 gate) bond terms; ``jump1``
    and ``jump2`` map the parity value to (positions, 8x8 gate).
    """

    n: int
    J: float
    u: float
    v: float
    theta: float
    sign_split: bool
    jump_frame: str
    register: QubitRegister
    layer1: list
    layer2: list
    jump1: dict
    jump2: dict

    def _dense_layer(self, layer) -> np.ndarray:
        out = np.eye(self.register.dim, dtype=complex)
        for (labels, gate) in layer:
            out = embed(gate, labels, self.register) @ out
        return out

    def u_h1(self) -> np.ndarray:
        return self._dense_layer(self.layer1)

    def u_h2(self) -> np.ndarray:
        return self._dense_layer(self.layer2)

    def u_jump(self, block: int, p: int) -> np.ndarray:
        labels, gate = (self.jump1 if block == 1 else self.jump2)[p]
        return embed(gate, labels, self.register)


def _bond_gate(J: float, theta: float, sign: float) -> np.ndarray:
    gen = sign * J * (np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS))
    return expm(-1j * theta * gen, hermitian_generator=False)


def _jump_gate(m_sys: np.ndarray, theta: float) -> np.ndarray:
    gen = np.kron(SIGMA_PLUS, m_sys) + np.kron(SIGMA_MINUS, dag(m_sys))
    return expm(-1j * theta * gen, hermitian_generator=False)


def build_gates(n: int, J: float, u: float, v: float, theta: float = 1.0,
                sign_split: bool = False,
                jump_frame: str = "conserving") -> BrickworkGates:
    """Brickwork layer and jump-block gates for the 2n + 1 qubit circuit.

    The hopping layers are parity independent; the jump gates are built for
    both parity values, differing by a sigma_z conjugation on the partner
    boundary site.  ``theta`` scales every generator, which is useful for
    checking consistency with the continuous-time limit.

    Two gauge-related jump conventions are supported.  The default
    ``"conserving"`` frame pairs the boundary operators as
    (u sm_A1 - v P sm_B1) and (u sp_B1 - v P sp_A1): each block conserves
    the boundary excitation number apart from a single +-1 click, which is
    what makes per-trajectory entanglement growth monotone.  The
    ``"paired"`` frame uses (u sm_A1 - v P sp_B1) and (u sm_B1 - v P sp_A1),
    i.e. the jump operators written with explicit pair creation; combined
    with ``sign_split=True`` it is the direct time discretization of the
    continuous adaptive chain model.  The two frames are related by
    inverting the B chain site basis and give identical entanglement
    statistics at their respective fixed points.
    """
    if abs(u * u + v * v - 1.0) > 1e-12:
        raise ValueError("need u^2 + v^2 = 1")
    if 2 * n + 1 > MAX_CIRCUIT_QUBITS:
        raise DeskScaleError(f"circuit limited to 2n + 1 <= {MAX_CIRCUIT_QUBITS} qubits")
    if jump_frame not in ("conserving", "paired"):
        raise ValueError("jump_frame must be 'conserving' or 'paired'")
    reg = chain_register(n, aux=True)

    layer1, layer2 = [], []
    for chain, sign in (("A", 1.0), ("B", -1.0 if sign_split else 1.0)):
        gate = _bond_gate(J, theta, sign)
        for i in range(1, n, 2):  # odd bonds (1,2), (3,4), ...
            layer1.append(((f"{chain}{i}", f"{chain}{i + 1}"), gate))
        for i in range(2, n, 2):  # even bonds (2,3), (4,5), ...
            layer2.append(((f"{chain}{i}", f"{chain}{i + 1}"), gate))

    sm, sp, ii = SIGMA_MINUS, SIGMA_PLUS, ID2
    jump1, jump2 = {}, {}
    for p in (+1, -1):
        if jump_frame == "conserving":
            m1 = u * np.kron(sm, ii) - v * p * np.kron(ii, sm)   # on (A1, B1)
            m2 = u * np.kron(ii, sp) - v * p * np.kron(sp, ii)
        else:
            m1 = u * np.kron(sm, ii) - v * p * np.kron(ii, sp)
            m2 = u * np.kron(ii, sm) - v * p * np.kron(sp, ii)
        jump1[p] = (("P", "A1", "B1"), _jump_gate(m1, theta))
        jump2[p] = (("P", "A1", "B1"), _jump_gate(m2, theta))
    return BrickworkGates(
        n=n, J=J, u=u, v=v, theta=theta, sign_split=sign_split,
        jump_frame=jump_frame, register=reg,
        layer1=layer1, layer2=layer2, jump1=jump1, jump2=jump2,
    )


@dataclass
class CycleReport:
    cycle: int
    measured: tuple[int, int]
    recorded: tuple[int, int]
    p_after: int
    svn: float


@dataclass
class CircuitState:
    """Statevector over 2n system qubits plus the aux qubit, with the classical bit P."""

    psi: np.ndarray
    p: int
    cycle: int
    rng: np.random.Generator
    n: int

    @classmethod
    def initial(cls, n: int, seed: int, traj_index: int = 0, p0: int = +1) -> "CircuitState":
        reg = chain_register(n, aux=True)
        return cls(
            psi=vacuum_state(reg),
            p=p0,
            cycle=0,
            rng=np.random.default_rng([seed, traj_index, 2]),
            n=n,
        )

    @property
    def nq(self) -> int:
        return 2 * self.n + 1

    def aux_excited_weight(self) -> float:
        # aux is the last (least significant) register site; even indices
        # carry aux |1>
        return float(np.sum(np.abs(self.psi[0::2]) ** 2))

    def system_state(self) -> np.ndarray:
        """State of the 2n system qubits; requires the aux qubit in |0>."""
        if self.aux_excited_weight() > 1e-9:
            raise RuntimeError("aux qubit is not in |0>")
        chunk = self.psi[1::2]
        return chunk / np.linalg.norm(chunk)

    def system_parity_expectation(self) -> float:
        reg = chain_register(self.n)
        diag = parity_diagonal(reg)
        sys = self.system_state()
        return float(np.sum(diag * np.abs(sys) ** 2))


def _measure_and_reset_aux(psi: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Projective aux measurement in the computational basis, then reset to |0>."""
    pairs = psi.reshape(-1, 2)  # column 0: aux |1>, column 1: aux |0>
    p1 = float(np.sum(np.abs(pairs[:, 0]) ** 2))
    outcome = 1 if rng.random() < p1 else 0
    out = np.zeros_like(pairs)
    if outcome == 1:
        out[:, 1] = pairs[:, 0]  # project onto aux |1>, then flip aux back to |0>
        norm = math.sqrt(p1)
    else:
        out[:, 1] = pairs[:, 1]
        norm = math.sqrt(max(1.0 - p1, 0.0))
    if norm < 1e-9:
        raise RuntimeError("measurement projected onto a numerically empty branch")
    return out.reshape(-1) / norm, outcome


def run_cycle(state: CircuitState, gates: BrickworkGates, eps: float = 0.0,
              adaptive: bool = True, svn_base="e") -> CycleReport:
    """Advance one full cycle in place and report its outcomes.

    Each jump block uses the parity value current at its entry, so a
    recorded click in block 1 already changes the block-2 gate.
    """
    nq = state.nq
    reg = gates.register
    if state.aux_excited_weight() > 1e-9:
        raise RuntimeError("aux qubit must start the cycle in |0>")
    psi = state.psi

    for labels, gate in gates.layer1 + gates.layer2:
        pos = [reg.position(s) for s in labels]
        psi = apply_gate(psi, gate, pos, nq)

    measured, recorded = [], []
    for block in (gates.jump1, gates.jump2):
        labels, gate = block[state.p]
        pos = [reg.position(s) for s in labels]
        psi = apply_gate(psi, gate, pos, nq)
        psi, outcome = _measure_and_reset_aux(psi, state.rng)
        # detection errors are missed clicks: a measured 1 is recorded as 0
        # with probability eps (false positives are not modeled)
        rec = outcome
        if outcome == 1 and eps > 0.0 and state.rng.random() < eps:
            rec = 0
        measured.append(outcome)
        recorded.append(rec)
        if adaptive and rec == 1:
            state.p = -state.p

    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise RuntimeError(f"norm drift {abs(norm - 1.0):.2e} in cycle {state.cycle}")
    state.psi = psi / norm
    state.cycle += 1
    svn = entanglement_entropy(state.psi, list(range(state.n)), base=svn_base)
    return CycleReport(
        cycle=state.cycle,
        measured=(measured[0], measured[1]),
        recorded=(recorded[0], recorded[1]),
        p_after=state.p,
        svn=svn,
    )


def run_circuit(n: int, J: float, v2: float, d: int, adaptive: bool = True,
                eps: float = 0.0, seed: int = 0, n_traj: int = 1,
                theta: float = 1.0, sign_split: bool = False,
                jump_frame: str = "conserving",
                negativity_cycles=(), keep_trajectories: bool = False,
                svn_base="e") -> ResultTable:
    """Ensemble of circuit runs; per-cycle entanglement statistics.

    Returns a table with per-cycle mean/std of the interchain S_vN (plus a
    long-format per-trajectory table when ``keep_trajectories``).  At the
    cycles listed in ``negativity_cycles`` the ensemble density matrix is
    accumulated and its per-pair logarithmic negativity reported (intended
    for eps > 0, where the ensemble state is mixed).
    """
    if d < 1:
        raise ValueError("need at least one cycle")
    if 2 * n + 1 > MAX_CIRCUIT_QUBITS:
        raise DeskScaleError(f"circuit limited to 2n + 1 <= {MAX_CIRCUIT_QUBITS} qubits")
    gates = build_gates(n, J, math.sqrt(1.0 - v2), math.sqrt(v2), theta=theta,
                        sign_split=sign_split, jump_frame=jump_frame)
    states = [CircuitState.initial(n, seed, k) for k in range(n_traj)]
    neg_set = set(int(c) for c in negativity_cycles)

    svn = np.zeros((n_traj, d + 1))
    neg_rows = []
    for cycle in range(1, d + 1):
        for k, st in enumerate(states):
            rep = run_cycle(st, gates, eps=eps, adaptive=adaptive, svn_base=svn_base)
            svn[k, cycle] = rep.svn
        if cycle in neg_set:
            dim_sys = 2 ** (2 * n)
            stack = np.vstack([st.system_state() for st in states])
            rho = (stack.T @ stack.conj()) / n_traj
            neg_rows.append([cycle, log_negativity(rho, 2**n) / n])

    unit = "nats" if svn_base == "e" else "bits"
    meta = {
        "n": n, "J": J, "v2": v2, "d": d, "adaptive": adaptive, "eps": eps,
        "seed": seed, "n_traj": n_traj, "theta": theta, "sign_split": sign_split,
        "jump_frame": jump_frame,
    }
    if keep_trajectories:
        rows = []
        for k in range(n_traj):
            for cycle in range(d + 1):
                rows.append([k, cycle, float(svn[k, cycle])])
        return ResultTable(
            columns=["trajectory", "cycle", "svn"],
            units=["", "cycles", unit],
            rows=rows,
            metadata=meta,
        )
    rows = [
        [cycle, float(svn[:, cycle].mean()), float(svn[:, cycle].std())]
        for cycle in range(d + 1)
    ]
    table = ResultTable(
        columns=["cycle", "mean_svn", "std_svn"],
        units=["cycles", unit, unit],
        rows=rows,
        metadata=meta,
    )
    if neg_rows:
        table.metadata["negativity"] = {str(c): v for c, v in neg_rows}
    return table
