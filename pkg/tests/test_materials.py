import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cavity_cz import InvalidArgumentError, MaterialSpec, coupling_rate, error_coefficient, required_Q
from cavity_cz.materials import BUILTIN, error_from_Q, materials_table

# CODATA values typed in by hand, independent of scipy.constants
HBAR = 1.054571817e-34
EPS0 = 8.8541878128e-12
C0 = 299792458.0


def _chi2_by_hand(n, lam, sus, v):
    w = 2 * math.pi * C0 / lam
    vm = v * (lam / n) ** 3
    return math.sqrt(HBAR * w / EPS0) * w / n ** 3 * sus / math.sqrt(vm)


def _chi3_by_hand(n, lam, sus, v):
    w = 2 * math.pi * C0 / lam
    vm = v * (lam / n) ** 3
    return 1.5 * HBAR * w ** 2 / (n ** 4 * EPS0) * sus / vm


def test_linbo3_rate_against_hand_formula():
    m = BUILTIN["LiNbO3"].with_volume(1e-3)
    assert coupling_rate(m, 2) == pytest.approx(_chi2_by_hand(2.1, 1550e-9, 54e-12, 1e-3),
                                                rel=1e-8)


def test_si_rate_against_hand_formula():
    m = BUILTIN["Si"].with_volume(1e-3)
    assert coupling_rate(m, 3) == pytest.approx(_chi3_by_hand(3.4, 1550e-9, 1.8e-19, 1e-3),
                                                rel=1e-8)


@pytest.mark.parametrize("name,k,expected", [("LiNbO3", 2, 5.0e6), ("GaAs", 2, 8.6e6),
                                             ("Si", 3, 5.9e10)])
def test_error_coefficients(name, k, expected):
    assert error_coefficient(BUILTIN[name], k) == pytest.approx(expected, rel=0.05)


def test_error_coefficient_frozen_values():
    # from the hand formulas above with C = 5.5 / 18.7
    w = 2 * math.pi * C0 / 1550e-9
    ref = 5.5 * w / _chi2_by_hand(2.1, 1550e-9, 54e-12, 1.0)
    assert error_coefficient(BUILTIN["LiNbO3"], 2) == pytest.approx(ref, rel=1e-8)
    ref3 = 18.7 * w / _chi3_by_hand(3.4, 1550e-9, 1.8e-19, 1.0)
    assert error_coefficient(BUILTIN["Si"], 3) == pytest.approx(ref3, rel=1e-8)


def test_required_Q_inverts_error_law():
    for k in (2, 3):
        q = required_Q(4.0e6, 0.02, k, 0.01)
        assert error_from_Q(4.0e6, 0.02, k, q) == pytest.approx(0.01)
    assert required_Q(1e6, 1.0, 2, 0.01, conditional_factor=5.0) == pytest.approx(2e7)


def test_required_Q_validation():
    with pytest.raises(InvalidArgumentError):
        required_Q(1e6, 1.0, 2, 1.5)
    with pytest.raises(InvalidArgumentError):
        required_Q(1e6, 0.0, 2, 0.01)


def test_material_validation():
    with pytest.raises(InvalidArgumentError):
        MaterialSpec("x", n=-1, wavelength=1e-6, chi2_suscept=1e-12)
    with pytest.raises(InvalidArgumentError):
        MaterialSpec("x", n=2, wavelength=1e-6, chi2_suscept=-1e-12)
    with pytest.raises(InvalidArgumentError):
        coupling_rate(BUILTIN["Si"], 2)
    with pytest.raises(InvalidArgumentError):
        BUILTIN["Si"].susceptibility(4)
    with pytest.raises(InvalidArgumentError):
        MaterialSpec.from_dict({"name": "x", "n": 2, "wavelength": 1e-6, "colour": 1})


def test_from_dict():
    m = MaterialSpec.from_dict({"name": "AlN", "n": 2.1, "wavelength": 1.55e-6,
                                "chi2_suscept": 1e-12, "v_norm": 0.1})
    assert m.v_norm == 0.1 and m.susceptibility(2) == 1e-12


def test_table_shape():
    rows = materials_table()
    assert len(rows) == 6
    assert {r["material"] for r in rows} == {"LiNbO3", "GaAs", "Si"}


@given(st.floats(1e-4, 10.0), st.floats(1.2, 4.0), st.floats(0.5e-6, 5e-6))
def test_volume_scaling(v, n, lam):
    m = MaterialSpec("m", n=n, wavelength=lam, chi2_suscept=1e-11, chi3_suscept=1e-19, v_norm=v)
    big = m.with_volume(2 * v)
    assert coupling_rate(big, 3) == pytest.approx(coupling_rate(m, 3) / 2, rel=1e-12)
    assert coupling_rate(big, 2) == pytest.approx(coupling_rate(m, 2) / math.sqrt(2), rel=1e-12)


@given(st.floats(1.2, 4.0), st.floats(0.5e-6, 5e-6))
def test_wavelength_and_index_scaling(n, lam):
    # at fixed normalized volume: chi2 ~ lam^-3 n^-3/2, chi3 ~ lam^-5 n^-1
    m = MaterialSpec("m", n=n, wavelength=lam, chi2_suscept=1e-11, chi3_suscept=1e-19)
    long = MaterialSpec("m", n=n, wavelength=2 * lam, chi2_suscept=1e-11, chi3_suscept=1e-19)
    dense = MaterialSpec("m", n=2 * n, wavelength=lam, chi2_suscept=1e-11, chi3_suscept=1e-19)
    assert coupling_rate(long, 2) == pytest.approx(coupling_rate(m, 2) / 8, rel=1e-12)
    assert coupling_rate(long, 3) == pytest.approx(coupling_rate(m, 3) / 32, rel=1e-12)
    assert coupling_rate(dense, 2) == pytest.approx(coupling_rate(m, 2) * 2 ** -1.5, rel=1e-12)
    assert coupling_rate(dense, 3) == pytest.approx(coupling_rate(m, 3) / 2, rel=1e-12)
