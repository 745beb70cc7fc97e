"""Simulator for a photonic controlled-phase gate built from a dynamically coupled nonlinear cavity."""

__version__ = "0.1.0"

from .calibration import CalibrationResult, calibrate, calibrate_chi2, calibrate_chi3
from .control import (CavityConfig, ControlSchedule, EmissionTarget, schedule_spectrum,
                      solve_absorption, solve_emission)
from .dynamics import HamiltonianSpec, InputSpec, SectorState, propagate
from .errors import (CalibrationError, CavityError, ClippedPacketError, ConvergenceError,
                     InfeasibleControlError, InfeasibleEtaError, InvalidArgumentError,
                     UnstableStepError)
from .gate import build_gate_schedule, gate_packet, gate_report, optimize_eta, run_gate
from .materials import MaterialSpec, coupling_rate, error_coefficient, required_Q
from .metrics import (FidelityReport, ScalingFit, fidelity_one, fidelity_two, fit_power_law,
                      phase_condition)
from .wavepacket import (GaussianSpec, TimeGrid, WavePacket, gaussian_packet, make_grid,
                         overlap, shift, spectral_fwhm)
