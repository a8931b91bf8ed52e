"""Exact simulator for a CHSH test on the spatial-mode entanglement of one boson."""

from .kernels import BACKEND
from .protocol import (
    ChshResult,
    ChshSettings,
    CoincidenceTable,
    Experiment,
    MixedPrep,
    NumberMixture,
    PostSelectionError,
    ReferenceSpec,
    SystemPrep,
    chsh,
    correlation,
    run_experiment,
    separable_scan,
)

__version__ = "0.1.0"
