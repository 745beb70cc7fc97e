"""Coupling schedules that absorb and re-emit single-photon wave packets.

The cavity has a waveguide-coupled mode ``a`` (rate ``gamma``) and a dark
storage mode ``b``; a classical control couples them with the complex rate
``lam(t)``.  For a one-photon input the amplitudes obey

    da/dt = -(gamma/2 + gamma_L/2 + i delta_a) a - i conj(lam) b + sqrt(gamma) xi_in
    db/dt = -(gamma_L/2 + i delta_b) b - i lam a
    xi_out = xi_in - sqrt(gamma) a

Synthesis picks a target for ``a(t)`` (``xi_in/sqrt(gamma)`` to cancel the
reflection, or ``-sqrt(eta) xi_target/sqrt(gamma)`` to emit), integrates the
population and phase that mode ``b`` must have to supply that trajectory, and
reads ``lam`` off the ``a`` equation.  For chi(3) media the control also
shifts both modes by ``delta = kappa_xpm |lam|``; the magnitude of ``lam``
then solves a quadratic and its phase carries the compensation.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (InfeasibleControlError, InfeasibleEtaError,
                     InvalidArgumentError)
from .wavepacket import TimeGrid, WavePacket, check_same_grid

# b-mode populations below this are treated as empty (no division by psi_b)
POP_FLOOR = 1e-12
# bins needing (1 + kappa) |lam| dt above this stay uncontrolled; only the
# first few bins of a chi(3) leading edge ever hit it, and it bounds the
# propagator's sub-step count
LAM_CAP_DT = 2.0
# refuse schedules that leave more than this much input outside control
MAX_PASSIVE_MASS = 0.1


@dataclass(frozen=True)
class CavityConfig:
    gamma: float
    gamma_L: float = 0.0
    order: int = 2
    chi: float = 0.0
    kappa_xpm: float = 2.0
    c_loss_factor: float = 1.0   # mode-c loss rate in units of gamma_L (order 2)

    def __post_init__(self):
        if not self.gamma > 0:
            raise InvalidArgumentError("gamma must be positive")
        if self.gamma_L < 0 or self.chi < 0:
            raise InvalidArgumentError("gamma_L and chi must be non-negative")
        if self.c_loss_factor < 0:
            raise InvalidArgumentError("c_loss_factor must be non-negative")
        if self.order not in (2, 3):
            raise InvalidArgumentError(f"order must be 2 or 3, got {self.order}")

    @property
    def gamma_c(self) -> float:
        return self.c_loss_factor * self.gamma_L

    @property
    def xpm(self) -> float:
        return self.kappa_xpm if self.order == 3 else 0.0

    def replace(self, **changes) -> "CavityConfig":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class EmissionTarget:
    packet: WavePacket
    eta: float = 1.0

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise InvalidArgumentError(f"eta must lie in (0, 1], got {self.eta}")


@dataclass(frozen=True)
class ControlSchedule:
    """Per-bin coupling ``lam`` and control-induced detunings.

    ``psi_b`` is the synthesizer's prediction of the b-mode amplitude (NaN
    outside the synthesis window); ``residual_b`` is the predicted b-mode
    population left at the end of the window.
    """

    grid: TimeGrid
    lam: np.ndarray
    delta_a: np.ndarray
    delta_b: np.ndarray
    psi_b: Optional[np.ndarray] = field(default=None, compare=False)
    residual_b: float = field(default=0.0, compare=False)
    passive_mass: float = field(default=0.0, compare=False)

    def __post_init__(self):
        n = self.grid.n_bins
        for name in ("lam", "delta_a", "delta_b"):
            arr = np.asarray(getattr(self, name),
                             dtype=complex if name == "lam" else float)
            if arr.shape != (n,):
                raise InvalidArgumentError(f"{name} must have length {n}")
            if not np.all(np.isfinite(arr)):
                raise InvalidArgumentError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ControlSchedule":
        z = np.zeros(grid.n_bins)
        return cls(grid, z.astype(complex), z, z)

    def __add__(self, other: "ControlSchedule") -> "ControlSchedule":
        grid = check_same_grid(self.grid, other.grid)
        return ControlSchedule(grid, self.lam + other.lam,
                               self.delta_a + other.delta_a,
                               self.delta_b + other.delta_b)

    def to_csv(self, path) -> None:
        header = "t,re_lambda,im_lambda,delta_a,delta_b"
        data = np.column_stack([self.grid.times, self.lam.real, self.lam.imag,
                                self.delta_a, self.delta_b])
        np.savetxt(Path(path), data, delimiter=",", header=header, comments="",
                   fmt="%.17g")


def load_schedule_csv(path) -> ControlSchedule:
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    grid = TimeGrid(dt=float(t[1] - t[0]), n_bins=len(t), t0=float(t[0]))
    return ControlSchedule(grid, data[:, 1] + 1j * data[:, 2], data[:, 3], data[:, 4])


def derivative(f: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order central difference, second order at the two outer bins."""
    out = np.gradient(f, dt, edge_order=2)
    if len(f) >= 5:
        out[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * dt)
    return out


def bin_integrals(f: np.ndarray, dt: float) -> np.ndarray:
    """``int_{t_n}^{t_{n+1}} f`` from samples, cubic in the interior."""
    out = 0.5 * dt * (f[:-1] + f[1:])
    if len(f) >= 4:
        out[1:-1] = dt * (-f[:-3] + 13 * f[1:-2] + 13 * f[2:-1] - f[3:]) / 24
    return out


def window_indices(grid: TimeGrid, window) -> tuple[int, int]:
    t_start, t_stop = window
    if t_stop <= t_start:
        raise InvalidArgumentError(f"empty window {window}")
    i0 = max(0, math.ceil((t_start - grid.t0) / grid.dt - 1e-9))
    i1 = min(grid.n_bins - 1, math.floor((t_stop - grid.t0) / grid.dt + 1e-9))
    if i1 - i0 < 2:
        raise InvalidArgumentError(f"window {window} holds fewer than 3 bins")
    return i0, i1


def _synthesize(config: CavityConfig, grid: TimeGrid, psi_a: np.ndarray,
                source: np.ndarray, window, pop_b0: float, phase_b0: float):
    """Shared inversion for absorption (pop_b0 = 0) and emission."""
    dt = grid.dt
    i0, i1 = window_indices(grid, window)
    sl = slice(i0, i1 + 1)
    pa = psi_a[sl]
    x0 = derivative(psi_a, dt)[sl] + 0.5 * (config.gamma + config.gamma_L) * pa - source[sl]
    # probability per unit time that must move from a into b
    flux = -2.0 * np.real(np.conj(x0) * pa)

    m = i1 - i0 + 1
    pop = np.empty(m)
    pop[0] = pop_b0
    incr = bin_integrals(flux, dt)
    decay = math.exp(-config.gamma_L * dt)
    half = math.exp(-0.5 * config.gamma_L * dt)
    for j in range(m - 1):
        pop[j + 1] = max(0.0, decay * pop[j] + half * incr[j])
    if pop_b0 > 0:
        # re-run emission bookkeeping backwards from its end value: the small
        # populations near the end then do not carry 1 - (integral) cancellation
        if pop[-1] <= 1e-10 * pop_b0:
            pop[-1] = 0.0
        for j in range(m - 2, -1, -1):
            pop[j] = max(0.0, (pop[j + 1] - half * incr[j]) / decay)

    kappa = config.xpm
    pa2 = np.abs(pa) ** 2
    quad_a = pop - kappa ** 2 * pa2
    solvable = (pop >= POP_FLOOR) & (quad_a > 0)
    quad_b = -kappa * np.imag(np.conj(x0) * pa)
    mag = np.zeros(m)
    qa = quad_a[solvable]
    qb = quad_b[solvable]
    mag[solvable] = (qb + np.sqrt(qb ** 2 + qa * np.abs(x0[solvable]) ** 2)) / qa
    active = solvable & ((1 + kappa) * mag * dt <= LAM_CAP_DT)
    mag[~active] = 0.0
    delta = kappa * mag

    x = x0 + 1j * delta * pa
    rate = np.zeros(m)
    rate[active] = -delta[active] - np.imag(np.conj(x[active]) * pa[active]) / pop[active]
    phase = phase_b0 + np.concatenate([[0.0], np.cumsum(bin_integrals(rate, dt))])

    lam_w = np.zeros(m, dtype=complex)
    lam_w[active] = (-1j * np.conj(x[active]) * np.exp(1j * phase[active])
                     / np.sqrt(pop[active]))

    n = grid.n_bins
    lam = np.zeros(n, dtype=complex)
    lam[sl] = lam_w
    d = np.zeros(n)
    d[sl] = delta
    psi_b = np.full(n, np.nan, dtype=complex)
    psi_b[sl] = np.sqrt(pop) * np.exp(1j * phase)
    return lam, d, psi_b, pop, active, (i0, i1)


def solve_absorption(config: CavityConfig, packet: WavePacket, window) -> ControlSchedule:
    """Schedule that impedance-matches ``packet`` and parks it in mode b."""
    grid = packet.grid
    xi = packet.amp
    peak = float(np.max(np.abs(xi) ** 2)) if len(xi) else 0.0
    if peak > config.gamma:
        raise InfeasibleControlError(
            f"|xi_in|^2 peaks at {peak:.4g} > gamma = {config.gamma:.4g}; "
            "mode a cannot be impedance matched",
            diagnostics={"peak_intensity": peak, "gamma": config.gamma})
    i0, i1 = window_indices(grid, window)
    outside = (np.sum(np.abs(xi[:i0]) ** 2) + np.sum(np.abs(xi[i1 + 1:]) ** 2)) * grid.dt
    if outside > 1e-8:
        raise InvalidArgumentError(
            f"{outside:.3g} of the packet lies outside the absorption window")
    sg = math.sqrt(config.gamma)
    lam, delta, psi_b, pop, active, (i0, i1) = _synthesize(
        config, grid, xi / sg, sg * xi, window, 0.0, 0.0)
    passive = float(np.sum(np.abs(xi[i0:i1 + 1][~active]) ** 2) * grid.dt)
    if passive > MAX_PASSIVE_MASS:
        raise InfeasibleControlError(
            f"{passive:.3g} of the packet arrives before the control can act; "
            "gamma is too small for this packet",
            diagnostics={"passive_mass": passive, "gamma": config.gamma})
    return ControlSchedule(grid, lam, delta, delta, psi_b=psi_b,
                           residual_b=float(pop[-1]), passive_mass=passive)


def max_emission_eta(config: CavityConfig, packet: WavePacket, window,
                     pop_b0: float = 1.0) -> float:
    """Largest ``eta`` for which mode b never runs dry during emission."""
    grid = packet.grid
    i0, i1 = window_indices(grid, window)
    sl = slice(i0, i1 + 1)
    pa = -packet.amp / math.sqrt(config.gamma)
    x0 = derivative(pa, grid.dt)[sl] + 0.5 * (config.gamma + config.gamma_L) * pa[sl]
    flux = -2.0 * np.real(np.conj(x0) * pa[sl])
    incr = bin_integrals(flux, grid.dt)
    decay = math.exp(-config.gamma_L * grid.dt)
    half = math.exp(-0.5 * config.gamma_L * grid.dt)
    q = 0.0
    surv = 1.0
    best = math.inf
    for inc in incr:
        q = decay * q + half * inc
        surv *= decay
        if q < 0:
            best = min(best, pop_b0 * surv / -q)
    return best


def solve_emission(config: CavityConfig, target: EmissionTarget, window,
                   pop_b0: float = 1.0, phase_b0: float = 0.0) -> ControlSchedule:
    """Schedule that releases the photon stored in b as ``sqrt(eta) * target``.

    ``pop_b0`` and ``phase_b0`` describe the b-mode amplitude at the start
    of the window.  The predicted leftover population is ``residual_b``.
    """
    packet = target.packet
    grid = packet.grid
    peak = float(np.max(np.abs(packet.amp) ** 2)) * target.eta
    if peak > config.gamma:
        raise InfeasibleControlError(
            f"eta |xi|^2 peaks at {peak:.4g} > gamma = {config.gamma:.4g}",
            diagnostics={"peak_intensity": peak, "gamma": config.gamma})
    eta_max = max_emission_eta(config, packet, window, pop_b0)
    if target.eta > eta_max * (1 + 1e-10):
        raise InfeasibleEtaError(
            f"eta = {target.eta:.6g} exceeds the loss-limited maximum {eta_max:.6g}",
            eta_max)
    pa = -math.sqrt(target.eta / config.gamma) * packet.amp
    lam, delta, psi_b, pop, _, _ = _synthesize(
        config, grid, pa, np.zeros(grid.n_bins), window, pop_b0, phase_b0)
    return ControlSchedule(grid, lam, delta, delta, psi_b=psi_b,
                           residual_b=float(pop[-1]))


def schedule_spectrum(s: ControlSchedule, omega_g: Optional[float] = None):
    """Centered DFT of ``lam(t)``.

    Returns ``(omega, spectrum)`` with ``omega`` in rad/s, or in units of
    ``omega_g`` when given.  The spectrum is scaled by ``dt`` so it
    approximates the continuous transform.
    """
    dt = s.grid.dt
    spec = np.fft.fftshift(np.fft.fft(s.lam)) * dt
    omega = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(s.grid.n_bins, dt))
    if omega_g is not None:
        omega = omega / omega_g
    return omega, spec


def spectral_centroid(omega: np.ndarray, spectrum: np.ndarray) -> float:
    w = np.abs(spectrum) ** 2
    total = w.sum()
    return float((omega * w).sum() / total) if total > 0 else 0.0


def spectral_rms_width(omega: np.ndarray, spectrum: np.ndarray) -> float:
    w = np.abs(spectrum) ** 2
    c = spectral_centroid(omega, spectrum)
    return float(math.sqrt((((omega - c) ** 2) * w).sum() / w.sum()))
