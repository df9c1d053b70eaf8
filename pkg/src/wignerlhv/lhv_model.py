"""Local realities built from the hidden variables.

Apparatus A sees the signal amplitudes

    F+ = E1 cos(theta_a) + E3 sin(theta_a),   F- = E3 cos(theta_a) - E1 sin(theta_a)

and the dark-noise amplitude E5; apparatus B uses E2, E4, E6 and theta_b.
The quadrature reality at phase phi_l (phi_1 = 0, phi_2 = pi/2) of an
amplitude F is ``exp(i phi_l) F + c.c. = 2 Re(exp(i phi_l) F)``.

Two count-rate realities are derived from these:

* ``Representation.EQ3`` (quadrature derived): squared quadratures of the
  signal minus those of the blocked-input (vacuum) channel,
  ``4|F|^2 - 4|E_vac|^2`` per sample.
* ``Representation.EQ4`` (Wigner intensity): ``|F|^2 - 1/2``.

Neither is sign-definite. Angles are used as given, in radians.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .gaussian_core import as_samples

PHASES = (0.0, math.pi / 2)


class Representation(str, enum.Enum):
    EQ3 = "eq3"
    EQ4 = "eq4"

    @classmethod
    def parse(cls, value) -> Representation:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"representation must be 'eq3' or 'eq4', got {value!r}") from None

    @property
    def description(self) -> str:
        return "QuadratureDerived" if self is Representation.EQ3 else "WignerIntensity"


@dataclass(frozen=True)
class AnalyzerSettings:
    theta_a: float
    theta_b: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_a) and math.isfinite(self.theta_b)):
            raise ValueError("analyzer angles must be finite")

    def reduced(self) -> AnalyzerSettings:
        """Both angles taken modulo pi (the rates are pi-periodic)."""
        return AnalyzerSettings(self.theta_a % math.pi, self.theta_b % math.pi)


@dataclass(frozen=True)
class QuadratureRealities:
    """Quadrature values; every field has shape ``(..., 2)`` indexed by l - 1."""

    x_a_plus: np.ndarray
    x_a_minus: np.ndarray
    x_b_plus: np.ndarray
    x_b_minus: np.ndarray
    x_va: np.ndarray
    x_vb: np.ndarray


@dataclass(frozen=True)
class CountRatePair:
    r_a_plus: np.ndarray
    r_a_minus: np.ndarray
    r_b_plus: np.ndarray
    r_b_minus: np.ndarray
    representation: Representation

    def as_tuple(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.r_a_plus, self.r_a_minus, self.r_b_plus, self.r_b_minus

    def scaled(self, factor: float) -> CountRatePair:
        return CountRatePair(*(factor * r for r in self.as_tuple()), representation=self.representation)


RATE_NAMES = ("r_a_plus", "r_a_minus", "r_b_plus", "r_b_minus")


def signal_amplitudes(samples, settings: AnalyzerSettings):
    """(F_A+, F_A-, F_B+, F_B-) for each sample."""
    e = as_samples(samples)
    ca, sa = math.cos(settings.theta_a), math.sin(settings.theta_a)
    cb, sb = math.cos(settings.theta_b), math.sin(settings.theta_b)
    fa_p = e[..., 0] * ca + e[..., 2] * sa
    fa_m = e[..., 2] * ca - e[..., 0] * sa
    fb_p = e[..., 1] * cb + e[..., 3] * sb
    fb_m = e[..., 3] * cb - e[..., 1] * sb
    return fa_p, fa_m, fb_p, fb_m


def _quadratures(f: np.ndarray) -> np.ndarray:
    # exp(i phi_l) is exactly 1 and i: X_1 = 2 Re F, X_2 = -2 Im F
    out = np.empty(f.shape + (2,))
    np.multiply(f.real, 2.0, out=out[..., 0])
    np.multiply(f.imag, -2.0, out=out[..., 1])
    return out


def quadrature_realities(samples, settings: AnalyzerSettings) -> QuadratureRealities:
    e = as_samples(samples)
    fa_p, fa_m, fb_p, fb_m = signal_amplitudes(e, settings)
    return QuadratureRealities(
        x_a_plus=_quadratures(fa_p),
        x_a_minus=_quadratures(fa_m),
        x_b_plus=_quadratures(fb_p),
        x_b_minus=_quadratures(fb_m),
        x_va=_quadratures(e[..., 4]),
        x_vb=_quadratures(e[..., 5]),
    )


def _sq(x: np.ndarray) -> np.ndarray:
    return x[..., 0] ** 2 + x[..., 1] ** 2


def count_rates_eq3(q: QuadratureRealities) -> CountRatePair:
    dark_a = _sq(q.x_va)
    dark_b = _sq(q.x_vb)
    return CountRatePair(
        _sq(q.x_a_plus) - dark_a,
        _sq(q.x_a_minus) - dark_a,
        _sq(q.x_b_plus) - dark_b,
        _sq(q.x_b_minus) - dark_b,
        Representation.EQ3,
    )


def _abs2(f: np.ndarray) -> np.ndarray:
    return f.real**2 + f.imag**2


def count_rates_eq4(samples, settings: AnalyzerSettings) -> CountRatePair:
    fa_p, fa_m, fb_p, fb_m = signal_amplitudes(samples, settings)
    return CountRatePair(
        _abs2(fa_p) - 0.5,
        _abs2(fa_m) - 0.5,
        _abs2(fb_p) - 0.5,
        _abs2(fb_m) - 0.5,
        Representation.EQ4,
    )


def dark_noise_rates(samples) -> CountRatePair:
    """Blocked-input record subtracted by the EQ3 rates.

    Both A entries hold ``(X_va;1)^2 + (X_va;2)^2 = 4|E5|^2``, both B entries
    the same for E6.
    """
    e = as_samples(samples)
    dark_a = _sq(_quadratures(e[..., 4]))
    dark_b = _sq(_quadratures(e[..., 5]))
    return CountRatePair(dark_a, dark_a.copy(), dark_b, dark_b.copy(), Representation.EQ3)


def count_rates(samples, settings: AnalyzerSettings, representation) -> CountRatePair:
    representation = Representation.parse(representation)
    if representation is Representation.EQ3:
        return count_rates_eq3(quadrature_realities(samples, settings))
    return count_rates_eq4(samples, settings)


@dataclass(frozen=True)
class BellAngles:
    """Analyzer angles of a CHSH experiment, radians."""

    theta_a: float = 0.0
    theta_a_prime: float = math.pi / 4
    theta_b: float = math.pi / 8
    theta_b_prime: float = 3 * math.pi / 8

    def __post_init__(self):
        if not all(math.isfinite(t) for t in self.as_tuple()):
            raise ValueError("Bell angles must be finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.theta_a, self.theta_a_prime, self.theta_b, self.theta_b_prime

    def pairs(self) -> tuple[AnalyzerSettings, ...]:
        """Settings in CHSH order (a, b), (a, b'), (a', b), (a', b')."""
        a, ap, b, bp = self.as_tuple()
        return (AnalyzerSettings(a, b), AnalyzerSettings(a, bp), AnalyzerSettings(ap, b), AnalyzerSettings(ap, bp))


CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


def chsh(e_values) -> float:
    """E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    e_ab, e_abp, e_apb, e_apbp = (float(v) for v in e_values)
    return e_ab - e_abp + e_apb + e_apbp
