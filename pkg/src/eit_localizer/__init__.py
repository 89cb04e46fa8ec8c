"""Dark-state (EIT) addressing of neutral-atom qubits with a standing-wave coupling field."""

__version__ = "0.1.0"

from .darkstate import dark_state, dressed_eigensystem, mixing_angles, transfer_fwhm_estimate
from .environment import TrapModel, convolve_profile, dipole_field, ground_state_sigma
from .errors import EITError
from .protocols import DetectionModel, ScanProfile, phase_gate_scan, readout_scan
from .pulses import StandingWave, phase_gate_schedule, readout_schedule

__all__ = [
    "DetectionModel",
    "EITError",
    "ScanProfile",
    "StandingWave",
    "TrapModel",
    "convolve_profile",
    "dark_state",
    "dipole_field",
    "dressed_eigensystem",
    "ground_state_sigma",
    "mixing_angles",
    "phase_gate_scan",
    "phase_gate_schedule",
    "readout_scan",
    "readout_schedule",
    "transfer_fwhm_estimate",
]
