"""adaptprep: adaptive dissipative state-preparation toolkit.

Dense/sparse Lindbladian spectra, quantum-trajectory unraveling with a
classical feedback bit, measured brickwork circuits, and entanglement /
squeezing metrics, plus a CLI that reproduces the reference experiments.
"""

__version__ = "0.1.0"

from . import analysis, circuit, hilbert, linalg, lindblad, models, trajectory
from .policy import POLICY

__all__ = [
    "POLICY",
    "analysis",
    "circuit",
    "hilbert",
    "linalg",
    "lindblad",
    "models",
    "trajectory",
    "__version__",
]
