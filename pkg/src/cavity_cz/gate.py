"""Absorb, store and re-emit: the full controlled-phase gate sequence.

Times are measured in units of the packet FWHM ``tau``.  The input is centred
at ``T_in = 5 tau`` on a grid that starts at 0 and spans ``T_store + 10 tau``;
absorption acts on ``T_in +/- 4 tau`` and emission on ``T_in + T_store +/- 4 tau``
(split at the midpoint when ``T_store < 8 tau``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .control import (CavityConfig, ControlSchedule, EmissionTarget, max_emission_eta,
                      solve_absorption, solve_emission, window_indices)
from .dynamics import HamiltonianSpec, InputSpec, SectorState, propagate
from .errors import InvalidArgumentError
from .metrics import (FidelityReport, OnePhotonResult, fidelity_one,
                      fidelity_two_from_state)
from .wavepacket import GaussianSpec, WavePacket, gaussian_packet, make_grid, overlap, shift

log = logging.getLogger(__name__)

INPUT_OFFSET = 5.0   # T_in in units of tau
WINDOW_HALF = 4.0    # half-width of absorption/emission windows in units of tau
MIN_STORE = 5.0      # shortest storage time in units of tau


@dataclass(frozen=True)
class GateLayout:
    tau: float
    T_store: float
    t_in: float
    absorb_window: tuple
    emit_window: tuple


def gate_layout(tau: float, T_store: float) -> GateLayout:
    """Windows ``T_in +/- 4 tau`` and ``T_in + T_store +/- 4 tau``.

    Storage times shorter than ``8 tau`` split the gap at its midpoint; the
    packet tail beyond ``2.5 tau`` from its centre is below 1e-8.
    """
    if T_store < MIN_STORE * tau:
        raise InvalidArgumentError(
            f"T_store = {T_store} must be at least {MIN_STORE} tau")
    t_in = INPUT_OFFSET * tau
    w = WINDOW_HALF * tau
    split = t_in + 0.5 * T_store
    return GateLayout(tau, T_store, t_in, (t_in - w, min(t_in + w, split)),
                      (max(t_in + T_store - w, split), t_in + T_store + w))


def gate_packet(tau: float, T_store: float, dt: float) -> WavePacket:
    """Gaussian input on the standard gate grid."""
    gate_layout(tau, T_store)
    grid = make_grid(T_store + 2 * INPUT_OFFSET * tau, dt)
    return gaussian_packet(grid, GaussianSpec(INPUT_OFFSET * tau, tau))


@dataclass
class GateSchedule:
    schedule: ControlSchedule
    absorption: ControlSchedule
    emission: ControlSchedule
    layout: GateLayout
    eta: float
    eta_max: float
    stored_pop: float
    stored_phase: float


def _stored_b(config, packet, layout):
    absorb = solve_absorption(config, packet, layout.absorb_window)
    grid = packet.grid
    _, i_end = window_indices(grid, layout.absorb_window)
    i_emit, _ = window_indices(grid, layout.emit_window)
    idle = (i_emit - i_end) * grid.dt
    pop = absorb.residual_b * math.exp(-config.gamma_L * idle)
    phase = float(np.angle(absorb.psi_b[i_end]))
    return absorb, pop, phase


def build_gate_schedule(config: CavityConfig, packet: WavePacket, T_store: float,
                        tau: float = 1.0, eta: Optional[float] = None) -> GateSchedule:
    """Absorption schedule, idle storage, and emission of ``shift(packet, T_store)``.

    ``eta=None`` emits everything that is left (``eta = min(1, eta_max)``);
    use :func:`optimize_eta` to pick the fidelity-optimal value instead.
    """
    layout = gate_layout(tau, T_store)
    absorb, pop, phase = _stored_b(config, packet, layout)
    target = shift(packet, T_store)
    eta_max = max_emission_eta(config, target, layout.emit_window, pop)
    if eta is None:
        eta = min(1.0, eta_max)
    emit = solve_emission(config, EmissionTarget(target, eta), layout.emit_window,
                          pop_b0=pop, phase_b0=phase)
    return GateSchedule(absorb + emit, absorb, emit, layout, eta, eta_max, pop, phase)


@dataclass
class GateOutcome:
    gate: GateSchedule
    state: SectorState
    xi_out_1: Optional[WavePacket]
    xi_out_2d: Optional[np.ndarray]
    populations: dict
    norm: float


def run_gate(config: CavityConfig, inp: InputSpec, T_store: float, tau: float = 1.0,
             eta: Optional[float] = None, gate: Optional[GateSchedule] = None,
             record_two_out: bool = True) -> GateOutcome:
    """Propagate ``inp`` through the gate built for ``inp.packet``.

    Pass a prebuilt ``gate`` to reuse one control for several inputs (the
    gate applies the same schedule regardless of photon number).
    """
    if inp.packet is None:
        raise InvalidArgumentError("run_gate needs an input packet")
    packet = inp.packet
    if gate is None:
        gate = build_gate_schedule(config, packet, T_store, tau, eta)
    target = shift(packet, T_store)
    state = propagate(HamiltonianSpec(config, gate.schedule), inp,
                      record_two_out=record_two_out,
                      project_onto=target if inp.photon_count == 2 else None)
    xi1 = WavePacket(packet.grid, state.one_out) if inp.photon_count >= 1 else None
    if inp.photon_count == 2:
        norm = state.two_norm
    elif inp.photon_count == 1:
        norm = xi1.norm()
    else:
        norm = abs(state.vac_amp) ** 2
    return GateOutcome(gate, state, xi1, state.two_out, state.populations, float(norm))


def one_photon_fidelity(config: CavityConfig, packet: WavePacket, T_store: float,
                        tau: float = 1.0, eta: Optional[float] = None) -> float:
    out = run_gate(config, InputSpec(1, packet), T_store, tau, eta)
    return abs(overlap(out.xi_out_1, shift(packet, T_store))) ** 2


def optimize_eta(config: CavityConfig, packet: WavePacket, T_store: float,
                 tau: float = 1.0, xtol: float = 1e-6) -> float:
    """Emission scale ``eta`` in ``(0, eta_max]`` that maximizes F1.

    Without loss the answer is ``min(1, eta_max)``.
    """
    layout = gate_layout(tau, T_store)
    _, pop, _ = _stored_b(config, packet, layout)
    eta_max = min(1.0, max_emission_eta(config, shift(packet, T_store),
                                        layout.emit_window, pop))
    if config.gamma_L == 0:
        return eta_max

    def cost(eta):
        return -one_photon_fidelity(config, packet, T_store, tau, eta)

    lo = 0.5 * eta_max
    res = minimize_scalar(cost, bounds=(lo, eta_max), method="bounded",
                          options={"xatol": xtol * eta_max})
    best = float(res.x)
    # the bounded search never evaluates the end point itself
    if cost(eta_max) <= res.fun:
        best = eta_max
    log.debug("eta optimum %.8f (eta_max %.8f)", best, eta_max)
    return best


def gate_report(config: CavityConfig, packet: WavePacket, T_store: float, tau: float = 1.0,
                eta: Optional[float] = None, gate: Optional[GateSchedule] = None,
                one: Optional[OnePhotonResult] = None) -> tuple:
    """Run the one- and two-photon inputs through one gate schedule.

    Returns ``(FidelityReport, gate, two_state)``.  A precomputed one-photon
    result can be passed in, since it does not depend on the nonlinearity.
    """
    if gate is None:
        gate = build_gate_schedule(config, packet, T_store, tau, eta)
    if one is None:
        out1 = run_gate(config, InputSpec(1, packet), T_store, tau, gate=gate)
        one = fidelity_one(out1.xi_out_1, packet, T_store)
    out2 = run_gate(config, InputSpec(2, packet), T_store, tau, gate=gate,
                    record_two_out=False)
    two = fidelity_two_from_state(out2.state)
    return FidelityReport.from_results(one, two), gate, out2.state
