import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavity_cz import (FidelityReport, GaussianSpec, InvalidArgumentError, WavePacket,
                       fidelity_one, fidelity_two, fit_power_law, gaussian_packet, make_grid,
                       phase_condition, shift)
from cavity_cz.metrics import (OnePhotonResult, TwoPhotonResult, pair_integral,
                               single_rail_residual, wrap_phase)

T = 4.0


@pytest.fixture
def packet():
    grid = make_grid(14.0, 0.02)
    return gaussian_packet(grid, GaussianSpec(5.0, 1.0))


def test_ideal_one_photon_output(packet):
    res = fidelity_one(shift(packet, T), packet, T)
    assert res.F1 == pytest.approx(1.0, abs=1e-12)
    assert res.phase == pytest.approx(0.0, abs=1e-12)
    assert res.F1_cond == pytest.approx(1.0, abs=1e-12)


@given(st.floats(-math.pi, math.pi), st.floats(0.1, 1.0))
def test_one_photon_phase_and_loss(phi, scale):
    grid = make_grid(14.0, 0.05)
    p = gaussian_packet(grid, GaussianSpec(5.0, 1.0))
    out = shift(p, T).scaled(math.sqrt(scale) * np.exp(1j * phi))
    res = fidelity_one(out, p, T)
    assert res.F1 == pytest.approx(scale, rel=1e-10)
    assert res.norm == pytest.approx(scale, rel=1e-10)
    assert res.F1_cond == pytest.approx(1.0, rel=1e-10)
    assert wrap_phase(res.phase - phi) == pytest.approx(0.0, abs=1e-10)


def test_ideal_two_photon_record(packet):
    f = shift(packet, T).amp
    res = fidelity_two(-np.outer(f, f), packet, T)
    # the diagonal end correction costs O(dt^2) on a smooth record
    assert res.F11 == pytest.approx(1.0, abs=1e-8)
    assert abs(wrap_phase(res.phase - math.pi)) < 1e-10
    assert res.norm == pytest.approx(1.0, abs=1e-8)


def test_two_photon_record_must_be_symmetric(packet):
    n = packet.grid.n_bins
    rec = np.zeros((n, n), complex)
    rec[0, 1] = 1.0
    with pytest.raises(InvalidArgumentError):
        fidelity_two(rec, packet, T)
    with pytest.raises(InvalidArgumentError):
        fidelity_two(np.zeros((3, 3)), packet, T)


def test_pair_integral_removes_diagonal_cusp():
    # exp(-g |x - y|) over the unit square integrates to 2/g - 2(1 - e^-g)/g^2
    g = 7.0
    n = 201
    x = np.linspace(0, 1, n)
    dt = x[1] - x[0]
    h = np.exp(-g * np.abs(x[:, None] - x[None, :]))
    exact = 2 / g - 2 * (1 - math.exp(-g)) / g ** 2
    # the plain sum over this closed grid double-counts edges; trim with trapezoid weights
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    plain = float(np.sum(np.outer(w, w) * h) * dt * dt)
    hw = np.outer(w, w) * h
    corrected = pair_integral(hw, dt).real
    assert abs(corrected - exact) < abs(plain - exact)


def test_phase_condition_for_perfect_cz():
    rep = FidelityReport(1, 1, 1, 1, 0.0, 0.3, 0.6 - math.pi, 1, 1)
    assert phase_condition(rep) == pytest.approx(0.0, abs=1e-14)
    assert single_rail_residual(rep) == pytest.approx(0.3)


@given(st.floats(-50, 50))
def test_wrap_phase_range(x):
    y = wrap_phase(x)
    assert -math.pi < y <= math.pi
    assert math.isclose(math.cos(y), math.cos(x), abs_tol=1e-9)


def test_report_json_round_trip(tmp_path):
    rep = FidelityReport.from_results(OnePhotonResult(0.9, 0.1, 0.95),
                                      TwoPhotonResult(0.8, -3.0, 0.9))
    text = rep.to_json(tmp_path / "r.json")
    assert FidelityReport.from_json(text) == rep
    assert FidelityReport.from_json((tmp_path / "r.json").read_text()) == rep
    assert rep.F11_cond == pytest.approx(0.8 / 0.9)


def test_zero_norm_conditional_is_zero():
    assert OnePhotonResult(0.0, 0.0, 0.0).F1_cond == 0.0
    assert TwoPhotonResult(0.0, 0.0, 0.0).F11_cond == 0.0


@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_power_law_fit_recovers_exact_law(p, a):
    x = np.logspace(0, 2, 7)
    fit = fit_power_law(x, a * x ** p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.prefactor == pytest.approx(a, rel=1e-9)
    if abs(p) > 1e-3:
        assert fit.r_squared == pytest.approx(1.0, abs=1e-9)


def test_power_law_fit_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        fit_power_law([1, 2, 3, 4], [1, 2, 3, 4])
    with pytest.raises(InvalidArgumentError):
        fit_power_law([1, 2, 3, 4, 5], [1, -2, 3, 4, 5])


def test_power_law_fit_short_span_warns(caplog):
    fit_power_law([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
    assert "decade" in caplog.text
