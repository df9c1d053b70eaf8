"""Exact expectations of the local model, used to check the simulation.

The signal amplitudes are circular complex Gaussians with
``<|F|^2> = (1 + 2 chi^2)/2``, ``<F_A F_B> = chi sqrt(1 + chi^2) cos(delta)``
for equal signs (``sin`` for opposite signs, up to sign) and
``<F_A conj(F_B)> = 0``, where ``delta = theta_a - theta_b``. Isserlis'
theorem then gives every fourth moment needed here in closed form.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DegenerateDenominator
from .gaussian_core import _check_chi
from .lhv_model import BellAngles, Representation, chsh


class Derivation(str, enum.Enum):
    SECOND_MOMENT = "second_moment"
    FOURTH_MOMENT = "fourth_moment"
    CORRELATION_E = "correlation_E"
    BELL_S = "bell_S"
    MEAN_RATE = "mean_rate"
    NEGATIVE_FRACTION = "negative_fraction"


@dataclass(frozen=True)
class OracleResult:
    value: float
    derivation: Derivation

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("oracle values are finite")


def _scale(representation) -> float:
    return 4.0 if Representation.parse(representation) is Representation.EQ3 else 1.0


def mean_intensity(chi) -> float:
    """<|F|^2> for any signal amplitude."""
    chi = _check_chi(chi)
    return 0.5 + chi * chi


def pair_amplitude(chi) -> float:
    """chi sqrt(1 + chi^2) = <E1 E2> = <E3 E4>."""
    chi = _check_chi(chi)
    return chi * math.sqrt(1.0 + chi * chi)


def oracle_mean_rate(chi, representation) -> float:
    """Mean of any single rate; the same for every analyzer angle."""
    chi = _check_chi(chi)
    return _scale(representation) * chi * chi


def oracle_joint_moment(chi, delta: float, signs: tuple[int, int], representation) -> float:
    """<R^i_A R^j_B> at ``delta = theta_a - theta_b``.

    In the Wigner-intensity form this is ``chi^4 + chi^2 (1 + chi^2) cos^2(delta)``
    for i == j and the same with ``sin^2`` otherwise. The quadrature-derived
    rates are exactly four times larger per sample in expectation, so the
    product moment is sixteen times larger.
    """
    chi = _check_chi(chi)
    i, j = signs
    if i not in (1, -1) or j not in (1, -1):
        raise ValueError(f"signs must be +1/-1, got {signs}")
    trig = math.cos(delta) if i == j else math.sin(delta)
    c2 = chi * chi
    value = c2 * c2 + c2 * (1.0 + c2) * trig * trig
    return _scale(representation) ** 2 * value


def oracle_correlation_E(chi, delta: float) -> float:
    """(1 + chi^2) cos(2 delta) / (1 + 3 chi^2); independent of representation."""
    chi = _check_chi(chi)
    if chi == 0.0:
        raise DegenerateDenominator("all product moments vanish at chi = 0")
    c2 = chi * chi
    return (1.0 + c2) * math.cos(2.0 * delta) / (1.0 + 3.0 * c2)


def oracle_bell_S(chi, angles: BellAngles | None = None) -> float:
    angles = angles or BellAngles()
    return chsh(oracle_correlation_E(chi, s.theta_a - s.theta_b) for s in angles.pairs())


def oracle_negative_fraction(chi, representation) -> float:
    """Probability that a single rate is negative.

    ``|F|^2`` is exponential with mean ``m = 1/2 + chi^2``. The Wigner-intensity
    rate is negative when ``|F|^2 < 1/2``: ``1 - exp(-1/(1 + 2 chi^2))``. The
    quadrature-derived rate is negative when ``|F|^2 < |E_vac|^2``, an
    independent exponential with mean 1/2, which happens with probability
    ``1/(1 + 2m) = 1/(2 (1 + chi^2))``.
    """
    chi = _check_chi(chi)
    if Representation.parse(representation) is Representation.EQ4:
        return -math.expm1(-1.0 / (1.0 + 2.0 * chi * chi))
    return 0.5 / (1.0 + chi * chi)


def oracle_dark_noise_mean() -> float:
    """<4 |E5|^2>, the same at every chi."""
    return 2.0


def oracle_sign_correlation(chi, delta: float) -> float:
    """<sign(X_A) sign(X_B)> for the phase-0 quadratures of F_A+ and F_B+.

    The two quadratures are jointly Gaussian with correlation
    ``rho cos(delta)``, ``rho = 2 chi sqrt(1 + chi^2) / (1 + 2 chi^2)``, so the
    arcsine law applies.
    """
    chi = _check_chi(chi)
    rho = 2.0 * pair_amplitude(chi) / (1.0 + 2.0 * chi * chi)
    return 2.0 / math.pi * math.asin(max(-1.0, min(1.0, rho * math.cos(delta))))


def oracle_sign_bell_S(chi, angles: BellAngles | None = None) -> float:
    angles = angles or BellAngles()
    return chsh(oracle_sign_correlation(chi, s.theta_a - s.theta_b) for s in angles.pairs())


def crossing_chi() -> float:
    """Squeezing at which the default-angle S equals 2."""
    u = (math.sqrt(2.0) - 1.0) / (3.0 - math.sqrt(2.0))
    return math.sqrt(u)
