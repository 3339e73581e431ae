"""Unitary process characterization from rotation sweeps, with a tomography baseline."""
from .calibration import CalibrationResult, fit_calibration, run_calibration
from .metrics import gauge_aligned_fidelity, process_fidelity, resource_counts
from .ppc import characterize, reconstruct_unitary
from .qcore import ProcessMatrix, chi_from_unitary
from .qpt import run_qpt
from .simulator import CircuitSpec, Gate, NoiseProfile

__all__ = [
    "CalibrationResult", "CircuitSpec", "Gate", "NoiseProfile", "ProcessMatrix", "characterize",
    "chi_from_unitary", "fit_calibration", "gauge_aligned_fidelity", "process_fidelity",
    "reconstruct_unitary", "resource_counts", "run_calibration", "run_qpt",
]
__version__ = "0.1.0"
