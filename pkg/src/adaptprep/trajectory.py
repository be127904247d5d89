"""Monte-Carlo wave-function unraveling with a classical feedback bit.

The dynamics alternates deterministic no-jump evolution under
H_eff = H - (i/2) sum Gamma Ldag L of the *active* jump set with stochastic
jumps sampled at first order in dt: per step the jump probability is
sum_mu Gamma_mu ||L_mu psi||^2 dt and the channel is drawn proportionally.
A one-bit controller (the parity record) selects which of two jump sets is
active; detection errors leave the record stale with probability epsilon
while the physical jump still happens.

Trajectory i consumes two private random streams that are pure functions of
(seed, i), so ensembles are reproducible regardless of batching or order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .lindblad import LindbladModel
from .policy import POLICY
from .results import ResultTable

__all__ = [
    "ParityController",
    "UnravelingConfig",
    "TrajectoryRecord",
    "mcwf_run",
    "mcwf_ensemble",
    "postselect",
    "ensemble_stats",
    "constant_pair",
]

_STREAM_STEP = 0
_STREAM_EVENT = 1


@dataclass
class ParityController:
    """Classical one-bit memory P; detected jumps flip it when adaptive.

    The controller also maps P to the index of the active jump-operator set:
    P = +1 selects set 0, P = -1 selects set 1.
    """

    adaptive: bool = True
    initial: int = +1

    def jump_set(self, p: int) -> int:
        return 0 if p == +1 else 1

    def on_detected_jump(self, channel: int, p: int) -> int:
        return -p if self.adaptive else p


@dataclass
class UnravelingConfig:
    dt: float
    t_final: float
    checkpoint_every: float
    epsilon: float = 0.0
    postselect: str = "none"
    observables: dict[str, Callable[[np.ndarray], float]] = field(default_factory=dict)

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.postselect not in ("none", "even_detected_jumps"):
            raise ValueError(f"unknown post-selection rule {self.postselect!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))

    @property
    def checkpoint_stride(self) -> int:
        return max(1, int(round(self.checkpoint_every / self.dt)))


@dataclass
class TrajectoryRecord:
    """One stochastic unraveling: jump log, parity history, checkpoints."""

    index: int
    seed: int
    jump_times: np.ndarray
    jump_channels: np.ndarray
    jump_detected: np.ndarray
    parity_after_jumps: np.ndarray
    checkpoint_times: np.ndarray
    observables: dict[str, np.ndarray]
    parity_checkpoints: np.ndarray
    final_state: np.ndarray
    initial_parity: int = +1

    @property
    def n_jumps(self) -> int:
        return int(self.jump_times.size)

    @property
    def n_detected(self) -> int:
        return int(np.sum(self.jump_detected))


def constant_pair(model: LindbladModel) -> tuple[LindbladModel, LindbladModel]:
    """Use the same jump set for both controller states (non-adaptive dynamics)."""
    return (model, model)


def _validate_pair(models) -> tuple[LindbladModel, LindbladModel]:
    m0, m1 = models
    if m0.dim != m1.dim:
        raise ValueError("the two jump sets must share the register dimension")
    scale = max(1.0, float(np.abs(m0.h).max()))
    if np.abs(m0.h - m1.h).max() > 1e-10 * scale:
        raise ValueError("the two jump sets must share the Hamiltonian")
    return m0, m1


def _no_jump_propagator(model: LindbladModel, dt: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * dt * model.effective_hamiltonian())


def mcwf_run(models, controller: ParityController, psi0: np.ndarray,
             cfg: UnravelingConfig, seed: int, index: int = 0) -> TrajectoryRecord:
    """Single trajectory; identical to member ``index`` of an ensemble run."""
    return mcwf_ensemble(models, controller, psi0, cfg, seed, indices=[index])[0]


def mcwf_ensemble(models, controller: ParityController, psi0: np.ndarray,
                  cfg: UnravelingConfig, seed: int, n_traj: int | None = None,
                  indices=None) -> list[TrajectoryRecord]:
    """Batch of trajectories advanced in lockstep (vectorized over the batch)."""
    m0, m1 = _validate_pair(models)
    if indices is None:
        if n_traj is None:
            raise ValueError("give either n_traj or explicit indices")
        indices = list(range(n_traj))
    indices = list(indices)
    nb = len(indices)
    dim = m0.dim

    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")

    dt = cfg.dt
    sets = []
    for m in (m0, m1):
        u_nj = _no_jump_propagator(m, dt)
        scaled = [np.sqrt(rate) * op for op, rate in m.jumps if rate > 0]
        sets.append((u_nj.T.copy(), [op.T.copy() for op in scaled]))
    n_channels = {len(s[1]) for s in sets}
    if len(n_channels) != 1:
        raise ValueError("both jump sets must have the same number of channels")
    n_ch = n_channels.pop()

    n_steps = cfg.n_steps
    stride = cfg.checkpoint_stride
    cap = POLICY.max_step_jump_probability

    psi = np.tile(psi0, (nb, 1))
    parity = np.full(nb, controller.initial, dtype=np.int64)
    active = np.array([controller.jump_set(p) for p in parity], dtype=np.int64)

    event_rngs = [np.random.default_rng([seed, i, _STREAM_EVENT]) for i in indices]
    step_rngs = [np.random.default_rng([seed, i, _STREAM_STEP]) for i in indices]

    jump_times = [[] for _ in range(nb)]
    jump_channels = [[] for _ in range(nb)]
    jump_detected = [[] for _ in range(nb)]
    parity_trace = [[] for _ in range(nb)]

    checkpoint_steps = sorted(set(range(0, n_steps + 1, stride)) | {n_steps})
    ckpt_times = np.array([k * dt for k in checkpoint_steps])
    obs_names = list(cfg.observables)
    obs_values = {name: np.zeros((nb, len(checkpoint_steps))) for name in obs_names}
    parity_ckpt = np.zeros((nb, len(checkpoint_steps)), dtype=np.int64)
    ckpt_cursor = 0

    def take_checkpoint(cursor: int):
        for name in obs_names:
            fn = cfg.observables[name]
            col = obs_values[name]
            for b in range(nb):
                col[b, cursor] = fn(psi[b])
        parity_ckpt[:, cursor] = parity

    take_checkpoint(0)
    ckpt_cursor = 1

    chunk = 4096
    uniforms = None
    for step in range(n_steps):
        pos = step % chunk
        if pos == 0:
            want = min(chunk, n_steps - step)
            uniforms = np.empty((nb, want))
            for b in range(nb):
                uniforms[b, :] = step_rngs[b].random(want)
        u_step = uniforms[:, pos]

        # per-channel jump probabilities from the pre-step states
        probs = np.zeros((nb, n_ch))
        for s in (0, 1):
            rows = np.flatnonzero(active == s)
            if rows.size == 0:
                continue
            for mu, op_t in enumerate(sets[s][1]):
                amp = psi[rows] @ op_t
                probs[rows, mu] = dt * np.einsum("ij,ij->i", amp, amp.conj()).real
        p_tot = probs.sum(axis=1)
        worst = float(p_tot.max(initial=0.0))
        if worst > cap:
            raise RuntimeError(
                f"per-step jump probability {worst:.3e} exceeds the cap {cap}; "
                f"reduce dt (step {step}, t={step * dt:.4g})"
            )

        jumping = u_step < p_tot
        coasting = np.flatnonzero(~jumping)
        for s in (0, 1):
            rows = coasting[active[coasting] == s]
            if rows.size == 0:
                continue
            phi = psi[rows] @ sets[s][0]
            norms = np.sqrt(np.einsum("ij,ij->i", phi, phi.conj()).real)
            psi[rows] = phi / norms[:, None]

        for b in np.flatnonzero(jumping):
            rng = event_rngs[b]
            s = active[b]
            cum = np.cumsum(probs[b]) / p_tot[b]
            mu = int(np.searchsorted(cum, rng.random(), side="right"))
            mu = min(mu, n_ch - 1)
            post = psi[b] @ sets[s][1][mu]
            psi[b] = post / np.linalg.norm(post)
            detected = bool(rng.random() >= cfg.epsilon)
            if detected:
                parity[b] = controller.on_detected_jump(mu, int(parity[b]))
                active[b] = controller.jump_set(int(parity[b]))
            jump_times[b].append((step + 1) * dt)
            jump_channels[b].append(mu)
            jump_detected[b].append(detected)
            parity_trace[b].append(int(parity[b]))

        if ckpt_cursor < len(checkpoint_steps) and step + 1 == checkpoint_steps[ckpt_cursor]:
            take_checkpoint(ckpt_cursor)
            ckpt_cursor += 1

    records = []
    for b, i in enumerate(indices):
        records.append(
            TrajectoryRecord(
                index=i,
                seed=seed,
                jump_times=np.array(jump_times[b]),
                jump_channels=np.array(jump_channels[b], dtype=np.int64),
                jump_detected=np.array(jump_detected[b], dtype=bool),
                parity_after_jumps=np.array(parity_trace[b], dtype=np.int64),
                checkpoint_times=ckpt_times,
                observables={k: v[b].copy() for k, v in obs_values.items()},
                parity_checkpoints=parity_ckpt[b].copy(),
                final_state=psi[b].copy(),
                initial_parity=controller.initial,
            )
        )
    return records


def postselect(records, rule: str = "none") -> list[TrajectoryRecord]:
    """Filter trajectories by the recorded jump count."""
    if rule == "none":
        return list(records)
    if rule == "even_detected_jumps":
        return [r for r in records if r.n_detected % 2 == 0]
    raise ValueError(f"unknown post-selection rule {rule!r}")


def ensemble_stats(records, rule: str = "none") -> ResultTable:
    """Per-checkpoint mean and standard deviation of every observable.

    Post-selection (if any) is applied first; the survival fraction is
    reported in the metadata.
    """
    records = list(records)
    if not records:
        raise ValueError("no trajectory records given")
    kept = postselect(records, rule)
    if not kept:
        raise ValueError("post-selection removed every trajectory")
    t0 = kept[0].checkpoint_times
    for r in kept[1:]:
        if r.checkpoint_times.shape != t0.shape or np.any(r.checkpoint_times != t0):
            raise ValueError("records do not share a checkpoint schedule")
    names = list(kept[0].observables)
    columns = ["time"] + [f"mean_{n}" for n in names] + [f"std_{n}" for n in names]
    units = ["1/rate"] + [""] * (2 * len(names))
    rows = []
    stacks = {n: np.vstack([r.observables[n] for r in kept]) for n in names}
    for k, t in enumerate(t0):
        row = [float(t)]
        row += [float(stacks[n][:, k].mean()) for n in names]
        row += [float(stacks[n][:, k].std()) for n in names]
        rows.append(row)
    meta = {
        "n_records": len(records),
        "n_kept": len(kept),
        "survival_fraction": len(kept) / len(records),
        "postselect": rule,
    }
    return ResultTable(columns=columns, units=units, rows=rows, metadata=meta)
