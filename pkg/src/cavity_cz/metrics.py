"""State fidelities, gate phases and power-law fits."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import diagonal_correction
from .errors import InvalidArgumentError
from .wavepacket import WavePacket, check_same_grid, overlap, shift

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OnePhotonResult:
    F1: float
    phase: float
    norm: float

    @property
    def F1_cond(self) -> float:
        return self.F1 / self.norm if self.norm > 0 else 0.0


@dataclass(frozen=True)
class TwoPhotonResult:
    F11: float
    phase: float
    norm: float

    @property
    def F11_cond(self) -> float:
        return self.F11 / self.norm if self.norm > 0 else 0.0


def fidelity_one(xi_out: WavePacket, xi_in: WavePacket, T: float) -> OnePhotonResult:
    """``F1 = |<shift(xi_in, T) | xi_out>|^2`` with the overlap phase and output norm."""
    check_same_grid(xi_out.grid, xi_in.grid)
    ov = overlap(shift(xi_in, T), xi_out)
    return OnePhotonResult(abs(ov) ** 2, float(np.angle(ov)), xi_out.norm())


def pair_integral(h: np.ndarray, dt: float) -> complex:
    """``int int h(t_m, t_n)`` for a symmetric array, with the diagonal cusp corrected."""
    total = h.sum() * dt * dt
    n = h.shape[0]
    if n >= 3:
        idx = np.arange(2, n)
        total -= diagonal_correction(
            np.stack([h[idx, idx - 2], h[idx, idx - 1], h[idx, idx]]).sum(axis=1), dt)
    return total


def _check_symmetric(record: np.ndarray) -> None:
    if record.ndim != 2 or record.shape[0] != record.shape[1]:
        raise InvalidArgumentError(f"two-photon record must be square, got {record.shape}")
    scale = np.max(np.abs(record)) if record.size else 0.0
    if np.max(np.abs(record - record.T), initial=0.0) > 1e-12 * max(scale, 1e-300):
        raise InvalidArgumentError("two-photon record is not symmetric")


def fidelity_two(record: np.ndarray, xi_in: WavePacket, T: float) -> TwoPhotonResult:
    """``F11`` from a symmetric two-photon record ``S(t_m, t_n)``.

    The record is normalized so that ``S = f(t_m) f(t_n)`` for the ideal
    output ``f`` integrates to one.
    """
    record = np.asarray(record)
    if record.shape != (xi_in.grid.n_bins,) * 2:
        raise InvalidArgumentError("record does not match the packet grid")
    _check_symmetric(record)
    f = shift(xi_in, T).amp
    dt = xi_in.grid.dt
    ov = pair_integral(np.conj(np.outer(f, f)) * record, dt)
    norm = pair_integral(np.abs(record) ** 2, dt).real
    return TwoPhotonResult(abs(ov) ** 2, float(np.angle(ov)), float(norm))


def fidelity_two_from_state(state) -> TwoPhotonResult:
    """Use the overlap accumulated during propagation (``project_onto`` runs)."""
    if state.two_overlap is None:
        raise InvalidArgumentError("state was propagated without a projection target")
    ov = state.two_overlap
    return TwoPhotonResult(abs(ov) ** 2, float(np.angle(ov)), float(state.two_norm))


@dataclass
class FidelityReport:
    F1: float
    F11: float
    F1_cond: float
    F11_cond: float
    phase_0: float
    phase_1: float
    phase_11: float
    norm_1: float
    norm_11: float

    @classmethod
    def from_results(cls, one: OnePhotonResult, two: TwoPhotonResult,
                     phase_0: float = 0.0) -> "FidelityReport":
        return cls(one.F1, two.F11, one.F1_cond, two.F11_cond, phase_0,
                   one.phase, two.phase, one.norm, two.norm)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_json(cls, text: str) -> "FidelityReport":
        return cls(**json.loads(text))


def wrap_phase(x: float) -> float:
    """Map to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def phase_condition(report: FidelityReport) -> float:
    """CZ residual ``wrap(2 phase_1 - (phase_11 + pi))``; zero for a perfect gate."""
    return wrap_phase(2 * report.phase_1 - report.phase_11 - math.pi)


def single_rail_residual(report: FidelityReport) -> float:
    """``wrap(phase_1 - phase_0)``: the one-photon rail must pick up no phase."""
    return wrap_phase(report.phase_1 - report.phase_0)


@dataclass(frozen=True)
class ScalingFit:
    exponent: float
    prefactor: float
    r_squared: float


def fit_power_law(xs, ys) -> ScalingFit:
    """Least-squares line through ``(log x, log y)``; ``y ~ prefactor * x**exponent``."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidArgumentError("xs and ys must be 1-D and the same length")
    if len(x) < 5:
        raise InvalidArgumentError(f"need at least 5 points, got {len(x)}")
    if np.any(x <= 0) or np.any(y <= 0):
        raise InvalidArgumentError("power-law fits need positive data")
    lx, ly = np.log(x), np.log(y)
    if lx.max() - lx.min() < math.log(10) * (1 - 1e-9):
        log.warning("power-law fit spans less than one decade in x")
    (slope, icpt), *_ = np.linalg.lstsq(np.column_stack([lx, np.ones_like(lx)]), ly, rcond=None)
    pred = slope * lx + icpt
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(math.exp(icpt)), r2)
