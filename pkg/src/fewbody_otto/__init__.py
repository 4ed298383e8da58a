"""Quantum Otto engine with a few contact-interacting particles in a harmonic trap."""

from .spectrum import BOSONIC, DISTINGUISHABLE, Spectrum, Truncation, TruncationError, noninteracting_spectrum
from .spectrum2p import TrapInteraction, even_shifts, epsilon_to_gtilde, relative_shifts, two_body_spectrum
from .thermo import ConvergenceError, CycleConfig, CycleResult, curzon_ahlborn, heatmap, run_cycle

__version__ = "0.1.0"

__all__ = [
    "BOSONIC", "DISTINGUISHABLE", "Spectrum", "Truncation", "TruncationError", "noninteracting_spectrum",
    "TrapInteraction", "even_shifts", "epsilon_to_gtilde", "relative_shifts", "two_body_spectrum",
    "ConvergenceError", "CycleConfig", "CycleResult", "curzon_ahlborn", "heatmap", "run_cycle",
    "__version__",
]
