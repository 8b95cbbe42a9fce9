"""Toolkit for a three-mode superconducting circuit with always-on ZZ coupling.

Submodules
----------
circuit
    Closed-form device parameters and an exact diagonalization oracle.
gates
    Conditional rotations, virtual-Z frame ledger and composite circuits.
pulses
    Rotating-frame pulse propagation and amplitude calibration.
readout
    Synthetic joint readout with thresholding and heralding.
tomography
    Maximum-likelihood state reconstruction and bootstrap errors.
crossing
    Avoided-crossing spectroscopy fit.
"""

from .circuit import DeviceSpec, ZZModel, derive, exact_spectrum
from .gates import FrameLedger, GateSequence, GateSpec, apply_with_frame
from .pulses import PulseShape, calibrate, propagate, simulate_circuit
from .readout import MeasurementModel, run_tomography
from .tomography import fidelity, mle_reconstruct
from .crossing import fit_avoided_crossing

__version__ = "0.1.0"

__all__ = [
    "DeviceSpec", "ZZModel", "derive", "exact_spectrum",
    "FrameLedger", "GateSequence", "GateSpec", "apply_with_frame",
    "PulseShape", "calibrate", "propagate", "simulate_circuit",
    "MeasurementModel", "run_tomography", "fidelity", "mle_reconstruct",
    "fit_avoided_crossing",
]
