"""Tune the nonlinear rate so the stored photon pair picks up the CZ phase.

The control schedule does not depend on chi, so one schedule and one
one-photon run serve every trial value; only the two-photon sector is
re-propagated.
"""
from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .control import CavityConfig
from .dynamics import InputSpec
from .errors import CalibrationError, InvalidArgumentError
from .gate import build_gate_schedule, gate_packet, gate_report, run_gate
from .metrics import FidelityReport, fidelity_one, phase_condition
from .wavepacket import WavePacket, spectral_fwhm

log = logging.getLogger(__name__)

PHASE_TOL = 1e-4
BRACKET_RANGE = (0.1, 10.0)


@dataclass
class CalibrationResult:
    chi: float
    residual: float
    report: FidelityReport
    evaluations: int
    c_population: float = 0.0


def chi3_seed(T_store: float) -> float:
    """|2_b> acquires -chi3 T/2; a phase of -pi needs chi3 = 2 pi / T."""
    return 2 * math.pi / T_store


def chi2_seed(T_store: float) -> float:
    """One full |2_b> -> |1_c> -> -|2_b> Rabi cycle: sqrt(2) chi2 T = pi."""
    return math.pi / (math.sqrt(2) * T_store)


class _GateProbe:
    """Evaluates the gate report for trial chi values on one fixed schedule."""

    def __init__(self, config, packet, T_store, tau, eta):
        self.config = config
        self.packet = packet
        self.T_store = T_store
        self.tau = tau
        self.gate = build_gate_schedule(config, packet, T_store, tau, eta)
        out1 = run_gate(config, InputSpec(1, packet), T_store, tau, gate=self.gate)
        self.one = fidelity_one(out1.xi_out_1, packet, T_store)
        self.calls = 0
        self.cache = {}

    def __call__(self, chi: float):
        if chi not in self.cache:
            cfg = self.config.replace(chi=float(chi))
            report, _, state = gate_report(cfg, self.packet, self.T_store, self.tau,
                                           gate=self.gate, one=self.one)
            self.calls += 1
            self.cache[chi] = (report, state)
        return self.cache[chi]

    def residual(self, chi: float) -> float:
        return phase_condition(self(chi)[0])


def _find_bracket(f, seed: float):
    """Walk outward from ``seed`` in geometric steps looking for a sign change.

    Jumps of the wrapped residual across +-pi are not roots and are skipped.
    """
    lo_lim, hi_lim = seed * BRACKET_RANGE[0], seed * BRACKET_RANGE[1]
    f0 = f(seed)
    if f0 == 0:
        return seed, seed
    ratio = 1.15
    for direction in (1, -1):
        prev_x, prev_f = seed, f0
        x = seed
        while True:
            x = x * ratio ** direction
            if not lo_lim <= x <= hi_lim:
                break
            fx = f(x)
            if np.sign(fx) != np.sign(prev_f) and abs(fx - prev_f) < math.pi:
                return (prev_x, x) if prev_x < x else (x, prev_x)
            prev_x, prev_f = x, fx
    raise CalibrationError(
        f"no sign change of the phase residual within {BRACKET_RANGE} x seed {seed:.4g}")


def calibrate_chi3(config: CavityConfig, packet: WavePacket, T_store: float,
                   tau: float = 1.0, eta: Optional[float] = None,
                   tol: float = PHASE_TOL) -> CalibrationResult:
    """chi3 that zeroes the CZ phase residual (bracketed Brent root search)."""
    if config.order != 3:
        raise InvalidArgumentError("calibrate_chi3 needs an order-3 config")
    probe = _GateProbe(config, packet, T_store, tau, eta)
    seed = chi3_seed(T_store)
    a, b = _find_bracket(probe.residual, seed)
    chi = a if a == b else brentq(probe.residual, a, b, xtol=1e-14 * seed, rtol=1e-13)
    report, _ = probe(chi)
    res = phase_condition(report)
    log.info("chi3 = %.6g (seed %.6g) residual %.2e after %d runs", chi, seed, res, probe.calls)
    if abs(res) > tol:
        raise CalibrationError(f"chi3 root found but residual {res:.3g} exceeds {tol}")
    return CalibrationResult(float(chi), res, report, probe.calls)


def calibrate_chi2(config: CavityConfig, packet: WavePacket, T_store: float,
                   tau: float = 1.0, eta: Optional[float] = None,
                   tol: float = PHASE_TOL) -> CalibrationResult:
    """chi2 maximizing the in-phase two-photon overlap ``Re(-O11 e^{-2i phase_1})``.

    With real couplings the two-photon overlap is real, so the residual is
    pinned at 0 or pi and cannot be root-searched; the optimum of the
    projected overlap is the completed Rabi cycle.
    """
    if config.order != 2:
        raise InvalidArgumentError("calibrate_chi2 needs an order-2 config")
    probe = _GateProbe(config, packet, T_store, tau, eta)
    seed = chi2_seed(T_store)

    def cost(chi):
        report, _ = probe(chi)
        amp = math.sqrt(report.F11)
        return -amp * math.cos(report.phase_11 + math.pi - 2 * report.phase_1)

    lo, hi = 0.5 * seed, 2.0 * seed
    res = minimize_scalar(cost, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * seed})
    chi = float(res.x)
    if not lo * 1.001 < chi < hi * 0.999:
        raise CalibrationError(f"chi2 optimum {chi:.4g} sits on the search bound")
    report, state = probe(chi)
    residual = phase_condition(report)
    c_pop = float(abs(state.two_cav[3]) ** 2) if len(state.two_cav) > 3 else 0.0
    log.info("chi2 = %.6g (seed %.6g) residual %.2e, c left %.2e after %d runs",
             chi, seed, residual, c_pop, probe.calls)
    if abs(residual) > tol:
        raise CalibrationError(f"chi2 optimum has phase residual {residual:.3g} > {tol}")
    return CalibrationResult(chi, residual, report, probe.calls, c_pop)


def calibrate(config: CavityConfig, packet: WavePacket, T_store: float, tau: float = 1.0,
              eta: Optional[float] = None) -> CalibrationResult:
    if config.order == 3:
        return calibrate_chi3(config, packet, T_store, tau, eta)
    return calibrate_chi2(config, packet, T_store, tau, eta)


def calibrate_storage_time(config: CavityConfig, tau: float, dt: float,
                           search_bins: int = 200) -> tuple:
    """Storage time (a whole number of bins) closest to the CZ phase at fixed chi.

    Scans ``search_bins`` bins either side of the analytic estimate and
    returns ``(T_store, residual)``; the residual is limited by the bin size.
    """
    if config.chi <= 0:
        raise InvalidArgumentError("calibrating T needs chi > 0")
    if config.order == 3:
        t_est = 2 * math.pi / config.chi
    else:
        t_est = math.pi / (math.sqrt(2) * config.chi)
    n0 = round(t_est / dt)

    def residual_at(n):
        T = n * dt
        packet = gate_packet(tau, T, dt)
        report, _, _ = gate_report(config, packet, T, tau)
        return phase_condition(report)

    # ternary search on |residual|, which is V-shaped in T near the root
    lo, hi = max(1, n0 - search_bins), n0 + search_bins
    cache = {}

    def f(n):
        if n not in cache:
            cache[n] = abs(residual_at(n))
        return cache[n]

    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    n_best = min(range(lo, hi + 1), key=f)
    return n_best * dt, residual_at(n_best)


def cache_key(config: CavityConfig, T_store: float, tau: float, dt: float) -> str:
    omega = spectral_fwhm(tau)
    parts = (config.order, config.gamma / omega, T_store / tau, config.gamma_L / omega,
             config.kappa_xpm if config.order == 3 else config.c_loss_factor, dt / tau)
    return "|".join(f"{p:.12g}" for p in parts)


class CalibrationCache:
    """JSON table of calibrated chi values.

    Keyed by (k, gamma/Omega_G, T/tau_G, gamma_L/Omega_G, kappa_xpm or the
    mode-c loss factor, dt/tau_G); the grid resolution is part of the key
    because the root moves with it.
    """

    def __init__(self, path):
        self.path = Path(path)
        self.table = {}
        if self.path.exists():
            self.table = json.loads(self.path.read_text())

    def get(self, key: str) -> Optional[dict]:
        return self.table.get(key)

    def put(self, key: str, result: CalibrationResult) -> None:
        self.table[key] = {"chi": result.chi, "residual": result.residual,
                           "c_population": result.c_population,
                           "report": asdict(result.report)}
        tmp = self.path.with_suffix(self.path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.table, indent=1, sort_keys=True))
        os.replace(tmp, self.path)
