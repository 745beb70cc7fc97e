"""Truncated Fock-sector propagation of the cavity and its waveguide output.

A product input of ``P`` photons with envelope ``xi`` is tracked through the
states ``Phi_j = U(t) (A_past^dagger)^j |0>``, where ``A_past`` creates the
part of the input that has already reached the cavity.  The physical state is

    P = 1:  A_f^dag |0> + Phi_1
    P = 2:  (A_f^dag)^2 |0> / sqrt(2) + sqrt(2) A_f^dag Phi_1 + Phi_2 / sqrt(2)

with ``A_f`` the not-yet-arrived input.  ``Phi_1`` is the single-photon
solution; ``Phi_2`` holds two-photon cavity amplitudes, "one emitted at t_m,
one still inside" slots, and the two-photon emission record ``g(m, n)``
(m <= n).  Emitted records never act back on the cavity, so each slot only
needs the one-photon generator applied to it.

Cavity amplitudes follow explicit RK4 with the schedule and input interpolated
to half steps; records are point samples written once per bin.  Bins where the
schedule is fast are split into equal RK4 sub-steps, composed into one affine
map per bin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .control import CavityConfig, ControlSchedule
from .errors import InvalidArgumentError, UnstableStepError
from .wavepacket import TimeGrid, WavePacket, check_same_grid

SQRT2 = math.sqrt(2.0)
# target bound on |eigenvalue| * h per RK4 sub-step (keeps the scheme ~unitary)
SUBSTEP_RHO_DT = 0.1
MAX_SUBSTEPS = 128


@dataclass(frozen=True)
class HamiltonianSpec:
    config: CavityConfig
    schedule: ControlSchedule

    @property
    def grid(self) -> TimeGrid:
        return self.schedule.grid


@dataclass(frozen=True)
class InputSpec:
    """``photon_count`` photons in ``packet`` (product form for two).

    With ``packet=None`` the photons start inside the cavity with amplitudes
    ``cavity``: ``(a, b)`` for one photon, ``(2a, ab, 2b[, c])`` for two.
    """

    photon_count: int
    packet: Optional[WavePacket] = None
    cavity: Optional[tuple] = None

    def __post_init__(self):
        if self.photon_count not in (0, 1, 2):
            raise InvalidArgumentError("photon_count must be 0, 1 or 2")
        if self.photon_count > 0 and self.packet is None and self.cavity is None:
            raise InvalidArgumentError("photons need either a packet or a cavity state")


@dataclass
class SectorState:
    grid: TimeGrid
    photon_count: int
    vac_amp: complex
    one_cav: np.ndarray            # (psi_a, psi_b) of the one-photon branch
    one_out: np.ndarray            # xi_out(t_n) of the one-photon branch
    two_cav: np.ndarray            # (2a, ab, 2b[, c]) physical amplitudes
    one_out_one_cav: np.ndarray    # (N, 2): photon out at t_m, one in a / b
    two_out: Optional[np.ndarray]  # symmetric (N, N) record, or None
    two_overlap: Optional[complex]
    two_norm: float
    remaining_input: float
    populations: dict = field(default_factory=dict)
    norm_trace: np.ndarray = None
    final_norm: float = 0.0

    def populations_csv(self, path) -> None:
        p = self.populations
        data = np.column_stack([self.grid.times, p["a"], p["b"], p["c"], self.norm_trace])
        np.savetxt(Path(path), data, delimiter=",", header="t,P_a,P_b,P_c,norm",
                   comments="", fmt="%.17g")

    def two_out_csv(self, path) -> None:
        if self.two_out is None:
            raise InvalidArgumentError("two-photon record was not stored")
        t = self.grid.times
        m, n = np.tril_indices(self.grid.n_bins)
        vals = self.two_out[m, n]
        data = np.column_stack([t[m], t[n], vals.real, vals.imag])
        np.savetxt(Path(path), data, delimiter=",", header="t_m,t_n,re,im",
                   comments="", fmt="%.17g")


def interpolate_bins(f: np.ndarray, frac: float) -> np.ndarray:
    """Cubic (4-point Lagrange) interpolation of ``f`` at ``t_n + frac*dt``.

    Returns one value per bin interval (length ``N - 1``); the two outer
    intervals fall back to linear interpolation.
    """
    x = frac
    out = (1 - x) * f[:-1] + x * f[1:]
    if len(f) >= 4 and 0 < x < 1:
        w = (-x * (x - 1) * (x - 2) / 6, (x + 1) * (x - 1) * (x - 2) / 2,
             -(x + 1) * x * (x - 2) / 2, (x + 1) * x * (x - 1) / 6)
        out[1:-1] = w[0] * f[:-3] + w[1] * f[1:-2] + w[2] * f[2:-1] + w[3] * f[3:]
    return out


def interpolate_polar(z: np.ndarray, frac: float) -> np.ndarray:
    """Interpolate magnitude and unwrapped phase of ``z`` separately.

    The chi(3) couplings rotate by up to about a radian per bin; treating the
    phase as its own smooth curve keeps those rotations resolved.  Phases of
    zero bins are filled from their nearest non-zero neighbour.
    """
    mag = np.abs(z)
    nz = np.flatnonzero(mag)
    if len(nz) == 0:
        return np.zeros(len(z) - 1, dtype=complex)
    idx = np.arange(len(z))
    nearest = nz[np.clip(np.searchsorted(nz, idx), 0, len(nz) - 1)]
    prev = nz[np.clip(np.searchsorted(nz, idx, side="right") - 1, 0, len(nz) - 1)]
    use_prev = np.abs(prev - idx) < np.abs(nearest - idx)
    nearest = np.where(use_prev, prev, nearest)
    phase = np.unwrap(np.angle(z[nearest]))
    return interpolate_bins(mag, frac) * np.exp(1j * interpolate_bins(phase, frac))


def midpoints(f: np.ndarray) -> np.ndarray:
    """Cubic interpolation of ``f`` at ``t_n + dt/2``."""
    return interpolate_bins(f, 0.5)


def _one_photon_generator(cfg: CavityConfig, lam, da, db):
    n = len(lam)
    m = np.empty((n, 2, 2), dtype=complex)
    m[:, 0, 0] = -0.5 * (cfg.gamma + cfg.gamma_L) - 1j * da
    m[:, 0, 1] = -1j * np.conj(lam)
    m[:, 1, 0] = -1j * lam
    m[:, 1, 1] = -0.5 * cfg.gamma_L - 1j * db
    return m


def _two_photon_generator(cfg: CavityConfig, lam, da, db, source):
    """Generator of (psi_a, psi_b, c_2a, c_ab, c_2b[, c_c]) with the feed term."""
    n = len(lam)
    with_c = cfg.order == 2
    d = 6 if with_c else 5
    g, gl = cfg.gamma, cfg.gamma_L
    chi3 = cfg.chi if cfg.order == 3 else 0.0
    m = np.zeros((n, d, d), dtype=complex)
    m[:, :2, :2] = _one_photon_generator(cfg, lam, da, db)
    # feed of Phi_2 from Phi_1 as the next input photon enters: 2 sqrt(gamma) xi a^dag
    m[:, 2, 0] = 2 * SQRT2 * source
    m[:, 3, 1] = 2 * source
    h = np.zeros((n, d - 2, d - 2), dtype=complex)
    h[:, 0, 0] = 2 * da + 0.5 * chi3
    h[:, 1, 1] = da + db + chi3
    h[:, 2, 2] = 2 * db + 0.5 * chi3
    h[:, 1, 0] = SQRT2 * lam
    h[:, 0, 1] = SQRT2 * np.conj(lam)
    h[:, 2, 1] = SQRT2 * lam
    h[:, 1, 2] = SQRT2 * np.conj(lam)
    decay = [g + gl, 0.5 * g + gl, gl]
    if with_c:
        h[:, 3, 2] = h[:, 2, 3] = SQRT2 * cfg.chi
        decay.append(0.5 * cfg.gamma_c)
    m[:, 2:, 2:] = -1j * h - np.diag(decay)
    return m


def _rk4_maps(m0, mh, m1, f0, fh, f1, h):
    """Affine one-step maps ``y -> B y + c`` of RK4 for ``y' = M(t) y + f(t)``."""
    d = m0.shape[-1]
    eye = np.eye(d)
    k1 = m0
    k2 = mh @ (eye + 0.5 * h * k1)
    k3 = mh @ (eye + 0.5 * h * k2)
    k4 = m1 @ (eye + h * k3)
    b = eye + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    s1 = f0
    s2 = np.einsum("nij,nj->ni", mh, 0.5 * h * s1) + fh
    s3 = np.einsum("nij,nj->ni", mh, 0.5 * h * s2) + fh
    s4 = np.einsum("nij,nj->ni", m1, h * s3) + f1
    c = (h / 6) * (s1 + 2 * s2 + 2 * s3 + s4)
    return b, c


def step_bound(cfg: CavityConfig, sched: ControlSchedule) -> float:
    """Upper bound on the generator's eigenvalue magnitude over the run."""
    lam = np.max(np.abs(sched.lam)) if sched.grid.n_bins else 0.0
    dmax = max(np.max(np.abs(sched.delta_a)), np.max(np.abs(sched.delta_b)))
    chi_term = SQRT2 * cfg.chi if cfg.order == 2 else cfg.chi
    return math.hypot(cfg.gamma + cfg.gamma_L, 2 * lam + 2 * dmax + chi_term)


def substeps_for(cfg: CavityConfig, sched: ControlSchedule) -> int:
    """RK4 sub-steps per bin needed to keep ``rho * h`` below the target."""
    rho_dt = step_bound(cfg, sched) * sched.grid.dt
    n_sub = max(1, math.ceil(rho_dt / SUBSTEP_RHO_DT - 1e-12))
    if n_sub > MAX_SUBSTEPS:
        raise UnstableStepError(
            f"rate bound times dt = {rho_dt:.4g} would need {n_sub} sub-steps per bin "
            f"(limit {MAX_SUBSTEPS}); refine the grid")
    return n_sub


def _bin_maps(cfg, sched, src, photon_count, n_sub):
    """Per-bin affine maps, composed from ``n_sub`` RK4 sub-steps."""
    lam, da, db = sched.lam, sched.delta_a, sched.delta_b
    h = sched.grid.dt / n_sub

    def generator(frac):
        vals = [interpolate_polar(lam, frac)]
        vals += [interpolate_bins(v, frac) for v in (da, db, src)]
        if photon_count == 1:
            m = _one_photon_generator(cfg, *vals[:3])
        else:
            m = _two_photon_generator(cfg, *vals)
        f = np.zeros(m.shape[:2], complex)
        f[:, 0] = vals[3]
        return m, f

    bmap = cmap = None
    m1, f1 = generator(0.0)
    for j in range(n_sub):
        m0, f0 = m1, f1
        mh, fh = generator((j + 0.5) / n_sub)
        m1, f1 = generator((j + 1.0) / n_sub)
        b, c = _rk4_maps(m0, mh, m1, f0, fh, f1, h)
        if bmap is None:
            bmap, cmap = b, c
        else:
            bmap = b @ bmap
            cmap = np.einsum("nij,nj->ni", b, cmap) + c
    return bmap, cmap


def propagate(h: HamiltonianSpec, inp: InputSpec, record_two_out: bool = True,
              project_onto: Optional[WavePacket] = None) -> SectorState:
    """Sweep the cavity across all time bins and return the final sector state.

    ``project_onto`` (the ideal output packet) makes the propagator accumulate
    the two-photon overlap on the fly, so the O(N^2) record need not be kept.
    """
    cfg, sched = h.config, h.schedule
    grid = sched.grid
    if inp.packet is not None:
        check_same_grid(grid, inp.packet.grid)
    if project_onto is not None:
        check_same_grid(grid, project_onto.grid)
    n_sub = substeps_for(cfg, sched)

    n_bins = grid.n_bins
    dt = grid.dt
    sg = math.sqrt(cfg.gamma)
    pc = inp.photon_count
    n_two = 4 if cfg.order == 2 else 3
    zeros = np.zeros(n_bins, dtype=complex)

    if pc == 0:
        ones = np.ones(n_bins)
        return SectorState(grid, 0, 1.0 + 0j, np.zeros(2, complex), zeros.copy(),
                           np.zeros(n_two, complex), np.zeros((n_bins, 2), complex),
                           None, None, 0.0, 0.0,
                           populations={"a": 0 * ones, "b": 0 * ones, "c": 0 * ones},
                           norm_trace=ones, final_norm=1.0)

    xi = inp.packet.amp if inp.packet is not None else zeros
    y0 = np.zeros(2 if pc == 1 else n_two + 2, complex)
    if inp.cavity is not None:
        cav = np.asarray(inp.cavity, dtype=complex)
        if cav.shape != (len(y0) - 2 if pc == 2 else 2,):
            raise InvalidArgumentError(f"{pc}-photon cavity state has the wrong length")
        if pc == 1:
            y0[:] = cav
        else:
            y0[2:] = SQRT2 * cav

    bmap, cmap = _bin_maps(cfg, sched, sg * xi, pc, n_sub)
    y = np.empty((n_bins, len(y0)), complex)
    y[0] = y0
    for n in range(n_bins - 1):
        y[n + 1] = bmap[n] @ y[n] + cmap[n]

    psi_a, psi_b = y[:, 0], y[:, 1]
    r = xi - sg * psi_a
    # probability of input not yet arrived (trapezoid weight on the current bin)
    xi2 = np.abs(xi) ** 2 * dt
    future = np.cumsum(xi2[::-1])[::-1] - 0.5 * xi2

    if pc == 1:
        pop_a, pop_b = np.abs(psi_a) ** 2, np.abs(psi_b) ** 2
        pop_c = np.zeros(n_bins)
        loss_rate = cfg.gamma_L * (pop_a + pop_b)
        norm_trace = _norm_trace(loss_rate, dt)
        final = float(np.sum(np.abs(r) ** 2) * dt + pop_a[-1] + pop_b[-1] + future[-1])
        return SectorState(grid, 1, 0j, y[-1].copy(), r, np.zeros(n_two, complex),
                           np.zeros((n_bins, 2), complex), None, None, 0.0,
                           float(future[-1]),
                           populations={"a": pop_a, "b": pop_b, "c": pop_c},
                           norm_trace=norm_trace, final_norm=final)

    return _two_photon_records(cfg, grid, xi, y, r, future, bmap, cmap,
                               record_two_out, project_onto)


def _norm_trace(loss_rate: np.ndarray, dt: float) -> np.ndarray:
    lost = np.concatenate([[0.0], np.cumsum(0.5 * dt * (loss_rate[:-1] + loss_rate[1:]))])
    return 1.0 - lost


def diagonal_correction(tail: np.ndarray, dt: float):
    """End correction for the pair integral at ``t_m = t_n``.

    ``tail`` holds the last three lower-triangle values ``h(n-2..n, n)`` of
    row ``n``.  Two-photon records have a cusp across the diagonal (of width
    ~1/gamma, often comparable to dt); the one-sided Euler-Maclaurin term
    removes the resulting O(dt^2) error of the plain double sum.  The full
    square integral is ``sum_{m,n} h dt^2 - sum_n diagonal_correction``.
    """
    if len(tail) < 3:
        return 0.0
    return (dt * dt / 12) * (3 * tail[2] - 4 * tail[1] + tail[0])


def _two_photon_records(cfg, grid, xi, y, r, future, bmap, cmap,
                        record_two_out, project_onto):
    n_bins, dt = grid.n_bins, grid.dt
    sg = math.sqrt(cfg.gamma)
    psi_a, psi_b = y[:, 0], y[:, 1]
    c2a, cab, c2b = y[:, 2], y[:, 3], y[:, 4]
    # slot maps are the one-photon block; the slot feed is twice Phi_1's
    amap = bmap[:, :2, :2]
    feed = 2 * cmap[:, :2]

    ea = np.zeros(n_bins, complex)
    eb = np.zeros(n_bins, complex)
    ea[0] = 2 * xi[0] * psi_a[0] - sg * SQRT2 * c2a[0]
    eb[0] = 2 * xi[0] * psi_b[0] - sg * cab[0]
    ref = None if project_onto is None else np.conj(project_onto.amp)
    two_out = np.zeros((n_bins, n_bins), complex) if record_two_out else None

    slot_pop_a = np.zeros(n_bins)
    slot_pop_b = np.zeros(n_bins)
    overlap = 0j
    norm2 = 0.0

    def write_column(n):
        nonlocal overlap, norm2
        g = 2 * xi[n] * r[: n + 1] - sg * ea[: n + 1]
        if two_out is not None:
            two_out[n, : n + 1] = 0.5 * g
        gn = g[n]
        norm2 += (0.5 * np.vdot(g[:n], g[:n]).real + 0.25 * abs(gn) ** 2) * dt * dt
        norm2 -= diagonal_correction(0.25 * np.abs(g[max(0, n - 2):]) ** 2, dt)
        if ref is not None:
            overlap += ref[n] * (np.dot(ref[:n], g[:n]) + 0.5 * ref[n] * gn) * dt * dt
            lo = max(0, n - 2)
            overlap -= diagonal_correction(0.5 * ref[n] * ref[lo:n + 1] * g[lo:], dt)

    write_column(0)
    slot_pop_a[0] = 0.5 * abs(ea[0]) ** 2 * dt
    slot_pop_b[0] = 0.5 * abs(eb[0]) ** 2 * dt
    for n in range(n_bins - 1):
        k = n + 1
        a00, a01, a10, a11 = amap[n, 0, 0], amap[n, 0, 1], amap[n, 1, 0], amap[n, 1, 1]
        ua, ub = ea[:k], eb[:k]
        rk = r[:k]
        new_a = a00 * ua + a01 * ub + feed[n, 0] * rk
        eb[:k] = a10 * ua + a11 * ub + feed[n, 1] * rk
        ea[:k] = new_a
        ea[k] = 2 * xi[k] * psi_a[k] - sg * SQRT2 * c2a[k]
        eb[k] = 2 * xi[k] * psi_b[k] - sg * cab[k]
        write_column(k)
        wa = np.abs(ea[: k + 1]) ** 2
        wb = np.abs(eb[: k + 1]) ** 2
        slot_pop_a[k] = 0.5 * dt * (wa.sum() - 0.5 * wa[k])
        slot_pop_b[k] = 0.5 * dt * (wb.sum() - 0.5 * wb[k])

    if two_out is not None:
        two_out = two_out + np.tril(two_out, -1).T

    cav_phys = y[-1, 2:] / SQRT2
    one_out_one_cav = np.column_stack([ea, eb]) / SQRT2
    pop_a = 2 * future * np.abs(psi_a) ** 2 + np.abs(c2a) ** 2 + 0.5 * np.abs(cab) ** 2 + slot_pop_a
    pop_b = 2 * future * np.abs(psi_b) ** 2 + 0.5 * np.abs(cab) ** 2 + np.abs(c2b) ** 2 + slot_pop_b
    pop_c = 0.5 * np.abs(y[:, 5]) ** 2 if y.shape[1] > 5 else np.zeros(n_bins)
    norm_trace = _norm_trace(cfg.gamma_L * (pop_a + pop_b) + cfg.gamma_c * pop_c, dt)
    fut = future[-1]
    final = float(norm2 + np.sum(np.abs(cav_phys) ** 2)
                  + 0.5 * dt * (np.sum(np.abs(ea) ** 2) + np.sum(np.abs(eb) ** 2))
                  + fut * fut + 2 * fut * (np.sum(np.abs(r) ** 2) * dt + np.sum(np.abs(y[-1, :2]) ** 2)))
    return SectorState(grid, 2, 0j, y[-1, :2].copy(), r, cav_phys, one_out_one_cav,
                       two_out, overlap if ref is not None else None, float(norm2),
                       float(fut),
                       populations={"a": pop_a, "b": pop_b, "c": pop_c},
                       norm_trace=norm_trace, final_norm=final)
