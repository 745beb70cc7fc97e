"""Physical nonlinear coupling rates and the loss budget they imply.

The simulation reports ``1 - F11 = C_k gamma_L / chi_k`` in normalized units.
Writing ``gamma_L = omega / Q_L`` and expressing ``chi_k`` through the
material susceptibility and mode volume turns that into

    1 - F11 = script_C * sqrt(V) / Q_L     (second order)
    1 - F11 = script_C * V / Q_L           (third order)

with ``V`` the mode volume in units of ``(lambda / n)**3``.  Carriers are
taken as degenerate: every mode uses the same ``omega`` and ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from scipy.constants import c as C_LIGHT, epsilon_0, hbar

from .errors import InvalidArgumentError

# fitted optimum-T slope constants and conditional/unconditional ratios
SLOPE_CONSTANT = {2: 5.5, 3: 18.7}
CONDITIONAL_FACTOR = {2: 5.1, 3: 3.0}


@dataclass(frozen=True)
class MaterialSpec:
    """Nonlinear material in a cavity of normalized mode volume ``v_norm``.

    ``chi2_suscept`` is in m/V and ``chi3_suscept`` in m^2/V^2; either may
    be None when the material is only used at the other order.
    """
    name: str
    n: float
    wavelength: float
    chi2_suscept: Optional[float] = None
    chi3_suscept: Optional[float] = None
    v_norm: float = 1.0

    def __post_init__(self):
        for field in ("n", "wavelength", "v_norm"):
            if not getattr(self, field) > 0:
                raise InvalidArgumentError(f"{field} must be positive")
        for field in ("chi2_suscept", "chi3_suscept"):
            val = getattr(self, field)
            if val is not None and not val > 0:
                raise InvalidArgumentError(f"{field} must be positive when given")

    @property
    def omega(self) -> float:
        return 2 * math.pi * C_LIGHT / self.wavelength

    @property
    def mode_volume(self) -> float:
        """``V_m = v_norm (lambda / n)^3`` in m^3."""
        return self.v_norm * (self.wavelength / self.n) ** 3

    def with_volume(self, v_norm: float) -> "MaterialSpec":
        return replace(self, v_norm=v_norm)

    def susceptibility(self, k: int) -> float:
        val = {2: self.chi2_suscept, 3: self.chi3_suscept}.get(k)
        if k not in (2, 3):
            raise InvalidArgumentError(f"order must be 2 or 3, got {k}")
        if val is None:
            raise InvalidArgumentError(f"{self.name} has no order-{k} susceptibility")
        return val

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialSpec":
        known = {"name", "n", "wavelength", "chi2_suscept", "chi3_suscept", "v_norm"}
        extra = set(d) - known
        if extra:
            raise InvalidArgumentError(f"unknown material fields: {sorted(extra)}")
        return cls(**d)


BUILTIN = {
    "LiNbO3": MaterialSpec("LiNbO3", n=2.1, wavelength=1550e-9, chi2_suscept=54e-12),
    "GaAs": MaterialSpec("GaAs", n=3.5, wavelength=3100e-9, chi2_suscept=270e-12),
    "Si": MaterialSpec("Si", n=3.4, wavelength=1550e-9, chi3_suscept=1.8e-19),
}
BUILTIN_ORDER = {"LiNbO3": 2, "GaAs": 2, "Si": 3}


def coupling_rate(mat: MaterialSpec, k: int) -> float:
    """Nonlinear coupling rate chi_k in rad/s.

    ``chi2 = sqrt(hbar w / eps0) (w / n^3) chi^(2) / sqrt(V_m)`` and
    ``chi3 = (3/2) hbar w^2 chi^(3) / (n^4 eps0 V_m)``.
    """
    sus = mat.susceptibility(k)
    w, n, vm = mat.omega, mat.n, mat.mode_volume
    if k == 2:
        return math.sqrt(hbar * w / epsilon_0) * w / n ** 3 * sus / math.sqrt(vm)
    return 1.5 * hbar * w ** 2 / (n ** 4 * epsilon_0) * sus / vm


def error_coefficient(mat: MaterialSpec, k: int, C_k: Optional[float] = None) -> float:
    """Volume-independent prefactor turning ``C_k gamma_L / chi_k`` into a Q_L law.

    ``chi_k`` at ``v_norm = 1`` absorbs all material dependence; the volume
    enters as ``sqrt(v_norm)`` for k=2 and ``v_norm`` for k=3.
    """
    if C_k is None:
        C_k = SLOPE_CONSTANT[k]
    return C_k * mat.omega / coupling_rate(mat.with_volume(1.0), k)


def required_Q(script_C: float, v_norm: float, k: int, target_error: float,
               conditional_factor: Optional[float] = None) -> float:
    """Intrinsic Q_L that brings the gate error down to ``target_error``.

    ``conditional_factor`` divides the error coefficient when the target is
    the conditional (post-selected) error rather than the unconditional one.
    """
    if not 0 < target_error < 1:
        raise InvalidArgumentError("target_error must lie in (0, 1)")
    if v_norm <= 0:
        raise InvalidArgumentError("v_norm must be positive")
    coef = script_C / conditional_factor if conditional_factor else script_C
    vol = math.sqrt(v_norm) if k == 2 else v_norm
    return coef * vol / target_error


def error_from_Q(script_C: float, v_norm: float, k: int, Q_L: float) -> float:
    """Forward form of :func:`required_Q` (unconditional error)."""
    vol = math.sqrt(v_norm) if k == 2 else v_norm
    return script_C * vol / Q_L


def materials_table(materials=None, volumes=(1e-3, 0.5), target_error: float = 0.01,
                    conditional: bool = True) -> list:
    """Rows of (material, k, script_C, v_norm, Q_L) for each material and volume."""
    rows = []
    materials = materials or [(BUILTIN[name], BUILTIN_ORDER[name]) for name in BUILTIN]
    for mat, k in materials:
        coef = error_coefficient(mat, k)
        for v in volumes:
            factor = CONDITIONAL_FACTOR[k] if conditional else None
            rows.append({"material": mat.name, "k": k, "script_C": coef, "v_norm": v,
                         "Q_L": required_Q(coef, v, k, target_error, factor)})
    return rows
