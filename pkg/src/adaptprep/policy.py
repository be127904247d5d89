"""Global numeric tolerances and desk-scale size limits.

All modules read the module-level ``POLICY`` instance.  Tests may tighten or
relax fields temporarily, but production code never mutates it.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class NumericPolicy:
    # relative cutoff for null-space vectors and zero-eigenvalue detection
    zero_rtol: float = 1e-10
    # absolute tolerance (relative to matrix scale) for Hermiticity checks
    hermiticity_tol: float = 1e-10
    # largest dense operator dimension kron/embed will produce
    max_operator_dim: int = 1 << 14
    # largest superoperator side we will assemble (sparse)
    max_superoperator_dim: int = 40_000
    # largest connected block handed to the dense eigensolver
    max_dense_eig_dim: int = 6144
    # fixed-dt unraveling: cap on the per-step total jump probability
    max_step_jump_probability: float = 0.01


POLICY = NumericPolicy()


class DeskScaleError(ValueError):
    """A requested computation exceeds the configured desk-scale limits."""


class NumericsError(RuntimeError):
    """A numeric routine failed to converge or produced invalid output."""
