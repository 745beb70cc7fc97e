import math

import pytest

from cavity_cz import (CalibrationError, CavityConfig, InvalidArgumentError, calibrate,
                       calibrate_chi2, calibrate_chi3, gate_packet, phase_condition)
from cavity_cz.calibration import (CalibrationCache, cache_key, calibrate_storage_time,
                                   chi2_seed, chi3_seed)

from conftest import OMEGA_G

DT = 0.02
T = 8.0


@pytest.fixture(scope="module")
def k3_result():
    cfg = CavityConfig(gamma=30 * OMEGA_G, order=3)
    return calibrate(cfg, gate_packet(1.0, T, DT), T)


@pytest.fixture(scope="module")
def k2_result():
    cfg = CavityConfig(gamma=6 * OMEGA_G, order=2)
    return calibrate(cfg, gate_packet(1.0, T, DT), T)


def test_seeds_give_pi_on_a_toy_store():
    # a pair held for T picks up -chi3 T / 2 (k=3) or completes one sqrt(2) chi2 Rabi cycle
    assert chi3_seed(10.0) * 10.0 / 2 == pytest.approx(math.pi)
    assert math.sqrt(2) * chi2_seed(10.0) * 10.0 == pytest.approx(math.pi)


def test_k3_calibration_postconditions(k3_result):
    assert abs(k3_result.residual) < 1e-4
    assert abs(phase_condition(k3_result.report)) < 1e-4
    # absorption and emission take part of the window, so chi exceeds the full-store seed
    assert 0.8 * chi3_seed(T) < k3_result.chi < 2.0 * chi3_seed(T)
    assert k3_result.report.F11 > 0.9


def test_k2_calibration_postconditions(k2_result):
    assert abs(k2_result.residual) < 1e-4
    assert k2_result.c_population < 1e-4
    assert 0.5 * chi2_seed(T) < k2_result.chi < 2.0 * chi2_seed(T)
    assert k2_result.report.F11 > 0.9


def test_calibration_is_idempotent(k3_result):
    cfg = CavityConfig(gamma=30 * OMEGA_G, order=3)
    again = calibrate_chi3(cfg, gate_packet(1.0, T, DT), T)
    assert again.chi == k3_result.chi
    assert again.report == k3_result.report


def test_order_mismatch_rejected():
    packet = gate_packet(1.0, T, DT)
    with pytest.raises(InvalidArgumentError):
        calibrate_chi3(CavityConfig(gamma=20.0, order=2), packet, T)
    with pytest.raises(InvalidArgumentError):
        calibrate_chi2(CavityConfig(gamma=20.0, order=3), packet, T)


def test_unreachable_phase_raises(monkeypatch):
    import cavity_cz.calibration as cal
    monkeypatch.setattr(cal, "BRACKET_RANGE", (0.99, 1.01))
    cfg = CavityConfig(gamma=30 * OMEGA_G, order=3)
    with pytest.raises(CalibrationError):
        cal.calibrate_chi3(cfg, gate_packet(1.0, T, DT), T)


def test_storage_time_search_recovers_calibrated_time(k3_result):
    cfg = CavityConfig(gamma=30 * OMEGA_G, order=3, chi=k3_result.chi)
    T_found, residual = calibrate_storage_time(cfg, 1.0, DT, search_bins=60)
    assert T_found == pytest.approx(T, abs=2 * DT)
    assert abs(residual) < 0.05


def test_storage_time_needs_chi():
    with pytest.raises(InvalidArgumentError):
        calibrate_storage_time(CavityConfig(gamma=20.0, order=3), 1.0, DT)


def test_cache_round_trip(tmp_path, k3_result):
    cfg = CavityConfig(gamma=30 * OMEGA_G, order=3)
    key = cache_key(cfg, T, 1.0, DT)
    cache = CalibrationCache(tmp_path / "cal.json")
    assert cache.get(key) is None
    cache.put(key, k3_result)
    reread = CalibrationCache(tmp_path / "cal.json")
    assert reread.get(key)["chi"] == k3_result.chi


def test_cache_key_separates_parameters():
    base = CavityConfig(gamma=30 * OMEGA_G, order=3)
    keys = {cache_key(base, T, 1.0, DT),
            cache_key(base, T, 1.0, DT / 2),
            cache_key(base.replace(kappa_xpm=1.0), T, 1.0, DT),
            cache_key(base.replace(gamma_L=1e-4), T, 1.0, DT),
            cache_key(base, T + 1, 1.0, DT)}
    assert len(keys) == 5
    k2 = CavityConfig(gamma=6 * OMEGA_G, order=2)
    assert cache_key(k2, T, 1.0, DT) != cache_key(k2.replace(c_loss_factor=2.0), T, 1.0, DT)
