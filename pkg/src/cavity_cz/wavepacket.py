"""Uniform time grids and single-photon wave packets.

Packets are complex envelopes ``xi(t_n)`` in units of s^-1/2 sampled on a
:class:`TimeGrid`; the discrete norm is ``sum |xi_n|^2 dt``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import erfc

from .errors import ClippedPacketError, InvalidArgumentError

CLIP_TOLERANCE = 1e-8
_FOUR_LN2 = 4.0 * math.log(2.0)


@dataclass(frozen=True)
class TimeGrid:
    dt: float
    n_bins: int
    t0: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if self.n_bins < 2:
            raise InvalidArgumentError(f"need at least 2 bins, got {self.n_bins}")

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_bins)

    @property
    def duration(self) -> float:
        return self.n_bins * self.dt

    def index_of(self, t: float) -> int:
        """Nearest bin index to time ``t`` (not clipped to the grid)."""
        return int(round((t - self.t0) / self.dt))

    def steps(self, delay: float) -> int:
        """Convert ``delay`` to an integer number of bins, refusing fractions."""
        n = int(round(delay / self.dt))
        if abs(n * self.dt - delay) > 1e-9 * max(self.dt, abs(delay)):
            raise InvalidArgumentError(
                f"delay {delay} is not a multiple of dt={self.dt}")
        return n


def check_same_grid(*grids: TimeGrid) -> TimeGrid:
    first = grids[0]
    for g in grids[1:]:
        if g != first:
            raise InvalidArgumentError(f"grid mismatch: {first} vs {g}")
    return first


@dataclass(frozen=True)
class WavePacket:
    grid: TimeGrid
    amp: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amp, dtype=complex)
        if amp.shape != (self.grid.n_bins,):
            raise InvalidArgumentError(
                f"amplitude length {amp.shape} does not match grid ({self.grid.n_bins})")
        amp.flags.writeable = False
        object.__setattr__(self, "amp", amp)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amp) ** 2) * self.grid.dt)

    def normalized(self) -> "WavePacket":
        n = self.norm()
        if n == 0:
            raise InvalidArgumentError("cannot normalize an all-zero packet")
        return WavePacket(self.grid, self.amp / math.sqrt(n))

    def scaled(self, factor: complex) -> "WavePacket":
        return WavePacket(self.grid, self.amp * factor)

    def to_csv(self, path) -> None:
        save_packet_csv(self, path)


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian intensity profile centred at ``center`` with intensity FWHM ``fwhm``."""

    center: float
    fwhm: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise InvalidArgumentError(f"fwhm must be positive, got {self.fwhm}")

    @property
    def sigma_intensity(self) -> float:
        return self.fwhm / math.sqrt(2.0 * _FOUR_LN2)


def make_grid(duration: float, dt: float, t0: float = 0.0) -> TimeGrid:
    """Grid of ``ceil(duration/dt)`` bins covering ``[t0, t0 + duration)``."""
    if not dt > 0 or not duration > 0:
        raise InvalidArgumentError(
            f"duration and dt must be positive (got {duration}, {dt})")
    if duration < 2 * dt:
        raise InvalidArgumentError("duration must span at least two bins")
    # guard against 10.0/0.1 style round-off pushing ceil up by one
    n = math.ceil(duration / dt - 1e-9)
    return TimeGrid(dt=dt, n_bins=n, t0=t0)


def _gaussian_mass_outside(grid: TimeGrid, spec: GaussianSpec) -> float:
    s = spec.sigma_intensity * math.sqrt(2.0)
    lo = grid.t0 - 0.5 * grid.dt
    hi = grid.t0 + (grid.n_bins - 0.5) * grid.dt
    return 0.5 * (erfc((spec.center - lo) / s) + erfc((hi - spec.center) / s))


def gaussian_packet(grid: TimeGrid, spec: GaussianSpec) -> WavePacket:
    """Sampled, discretely normalized Gaussian packet.

    Raises :class:`ClippedPacketError` if more than 1e-8 of the
    probability would fall outside the grid.
    """
    outside = _gaussian_mass_outside(grid, spec)
    if outside > CLIP_TOLERANCE:
        raise ClippedPacketError(
            f"Gaussian at {spec.center} (fwhm {spec.fwhm}) loses {outside:.3g} "
            "of its probability outside the grid")
    t = grid.times
    amp = np.exp(-0.5 * _FOUR_LN2 * ((t - spec.center) / spec.fwhm) ** 2)
    return WavePacket(grid, amp).normalized()


def spectral_fwhm(spec: GaussianSpec | float) -> float:
    """Angular-frequency FWHM of the intensity spectrum, ``4 ln2 / tau``."""
    fwhm = spec.fwhm if isinstance(spec, GaussianSpec) else float(spec)
    if not fwhm > 0:
        raise InvalidArgumentError("fwhm must be positive")
    return _FOUR_LN2 / fwhm


def overlap(p: WavePacket, q: WavePacket) -> complex:
    """Discrete inner product ``sum conj(p_n) q_n dt``."""
    grid = check_same_grid(p.grid, q.grid)
    return complex(np.vdot(p.amp, q.amp) * grid.dt)


def shift(p: WavePacket, delay: float) -> WavePacket:
    """Delay ``p`` by an integer number of bins, zero filling the vacated bins."""
    n = p.grid.steps(delay)
    amp = np.zeros_like(p.amp)
    if n == 0:
        return WavePacket(p.grid, p.amp)
    if abs(n) >= p.grid.n_bins:
        lost = p.norm()
    elif n > 0:
        amp[n:] = p.amp[:-n]
        lost = float(np.sum(np.abs(p.amp[-n:]) ** 2) * p.grid.dt)
    else:
        amp[:n] = p.amp[-n:]
        lost = float(np.sum(np.abs(p.amp[:-n]) ** 2) * p.grid.dt)
    if lost > CLIP_TOLERANCE:
        raise ClippedPacketError(f"shift by {delay} pushes {lost:.3g} off the grid")
    return WavePacket(p.grid, amp)


def save_packet_csv(p: WavePacket, path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# dt={float(p.grid.dt)!r} N={p.grid.n_bins} t0={float(p.grid.t0)!r}\n")
        fh.write("t,re,im\n")
        for t, a in zip(p.grid.times.tolist(), p.amp.tolist()):
            fh.write(f"{t!r},{a.real!r},{a.imag!r}\n")


def load_packet_csv(path) -> WavePacket:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=", 1) for item in header)
        grid = TimeGrid(dt=float(meta["dt"]), n_bins=int(meta["N"]),
                        t0=float(meta.get("t0", 0.0)))
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    return WavePacket(grid, data[:, 1] + 1j * data[:, 2])
