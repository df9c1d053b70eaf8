"""Joint distribution of the six complex hidden variables.

The hidden variables E1..E6 are drawn from

    P(E1..E6) = Wsq(E1, E2) Wsq(E3, E4) Wvac(E5) Wvac(E6)

with the two-mode squeezed Wigner function

    Wsq(E, E') = 4/pi^2 exp[-(2 + 4 chi^2)(|E|^2 + |E'|^2) + 8 chi sqrt(1 + chi^2) Re(E E')]

and the vacuum Wigner function ``Wvac(E) = 2/pi exp(-2 |E|^2)``.

Completing the square gives the moment form used everywhere else: each
real component of E1..E4 has variance (1 + 2 chi^2)/4, Re E1 and Re E2
(likewise Re E3, Re E4) have covariance +chi sqrt(1 + chi^2)/2, the
imaginary parts have the opposite covariance, and each real component of
E5, E6 has variance 1/4. Nothing else is correlated. The variance grows
like chi^2, so large chi is allowed but numerically unremarkable.

Real components are ordered ``[Re E1, Im E1, Re E2, Im E2, ..., Re E6, Im E6]``.
Batches of samples are complex arrays of shape ``(n, 6)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError
from .rng import RandomStream

N_HIDDEN = 6
N_REAL = 12
# ~1.5 GiB of complex128 samples
MAX_BATCH = 2**24
DEFAULT_BLOCK = 2**16


def _check_chi(chi) -> float:
    try:
        chi = float(chi)
    except (TypeError, ValueError):
        raise ValueError(f"chi must be a real number, got {chi!r}") from None
    if not math.isfinite(chi) or chi < 0:
        raise ValueError(f"chi must be finite and >= 0, got {chi}")
    return chi


@dataclass(frozen=True)
class HiddenVariableSample:
    """One draw of the six complex hidden variables."""

    e1: complex
    e2: complex
    e3: complex
    e4: complex
    e5: complex
    e6: complex

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError("hidden variables must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.e1, self.e2, self.e3, self.e4, self.e5, self.e6], dtype=np.complex128)

    def __array__(self, dtype=None, copy=None):
        arr = self.as_array()
        return arr if dtype is None else arr.astype(dtype)

    @classmethod
    def from_array(cls, values) -> HiddenVariableSample:
        values = np.asarray(values, dtype=np.complex128)
        if values.shape != (N_HIDDEN,):
            raise ValueError(f"expected 6 complex values, got shape {values.shape}")
        return cls(*(complex(v) for v in values))


def as_samples(samples) -> np.ndarray:
    """Coerce a sample, a sequence of samples or an array to shape ``(..., 6)``."""
    if isinstance(samples, HiddenVariableSample):
        return samples.as_array()
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], HiddenVariableSample):
        return np.stack([s.as_array() for s in samples])
    arr = np.asarray(samples, dtype=np.complex128)
    if arr.shape[-1:] != (N_HIDDEN,):
        raise ValueError(f"last axis must hold the 6 hidden variables, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class CovarianceModel:
    chi: float
    var_sq: float
    cov_x: float
    cov_y: float
    var_vac: float

    @property
    def cholesky(self) -> tuple[float, float, float]:
        """Closed-form factor of the 2x2 block [[v, c], [c, v]] as (L11, L21/c, L22).

        ``v^2 - c^2 = 1/16`` for every chi, so ``L22 = 1 / (4 sqrt(v))``.
        """
        s = math.sqrt(self.var_sq)
        return s, 1.0 / s, 1.0 / (4.0 * s)


def build_covariance(chi) -> CovarianceModel:
    """Moment parameters of the hidden-variable distribution at squeezing ``chi``."""
    chi = _check_chi(chi)
    c = chi * math.sqrt(1.0 + chi * chi) / 2.0
    # written as 1/4 + chi^2/2 so chi = 0 gives exactly the vacuum model
    return CovarianceModel(chi=chi, var_sq=0.25 + 0.5 * chi * chi, cov_x=c, cov_y=-c, var_vac=0.25)


def log_density(model: CovarianceModel, samples) -> np.ndarray:
    """Natural log of :func:`density`; finite wherever the samples are."""
    e = as_samples(samples)
    chi = model.chi
    a = 2.0 + 4.0 * chi * chi
    b = 8.0 * chi * math.sqrt(1.0 + chi * chi)
    mag2 = e.real**2 + e.imag**2
    out = 2.0 * math.log(4.0 / math.pi**2) + 2.0 * math.log(2.0 / math.pi)
    out = out - a * (mag2[..., 0] + mag2[..., 1]) + b * (e[..., 0] * e[..., 1]).real
    out = out - a * (mag2[..., 2] + mag2[..., 3]) + b * (e[..., 2] * e[..., 3]).real
    return out - 2.0 * mag2[..., 4] - 2.0 * mag2[..., 5]


def w_sq(chi: float, e, e_prime) -> np.ndarray:
    """Two-mode squeezed Wigner function."""
    chi = _check_chi(chi)
    e = np.asarray(e, dtype=np.complex128)
    e_prime = np.asarray(e_prime, dtype=np.complex128)
    expo = -(2 + 4 * chi**2) * (abs(e) ** 2 + abs(e_prime) ** 2) + 8 * chi * math.sqrt(1 + chi**2) * (e * e_prime).real
    return 4.0 * np.exp(expo) / math.pi**2


def w_vac(e) -> np.ndarray:
    """Vacuum Wigner function."""
    e = np.asarray(e, dtype=np.complex128)
    return 2.0 * np.exp(-2.0 * abs(e) ** 2) / math.pi


def density(model: CovarianceModel, samples) -> np.ndarray:
    """Joint density, evaluated literally as the product of the four factors."""
    e = as_samples(samples)
    return (
        w_sq(model.chi, e[..., 0], e[..., 1])
        * w_sq(model.chi, e[..., 2], e[..., 3])
        * w_vac(e[..., 4])
        * w_vac(e[..., 5])
    )


def _transform(model: CovarianceModel, z: np.ndarray) -> np.ndarray:
    """Map rows of 12 standard normals to hidden-variable samples.

    Normal slots per row: (0, 1) -> Re(E1, E2), (2, 3) -> Im(E1, E2),
    (4, 5) -> Re(E3, E4), (6, 7) -> Im(E3, E4), (8, 9) -> E5, (10, 11) -> E6.
    """
    s, inv_s, l22 = model.cholesky
    kx = model.cov_x * inv_s
    ky = model.cov_y * inv_s
    sv = math.sqrt(model.var_vac)
    zt = z.T
    out = np.empty((N_REAL, z.shape[0]))
    for k, col in ((0, 0), (1, 4)):
        np.multiply(s, zt[col], out=out[4 * k])
        np.multiply(s, zt[col + 2], out=out[4 * k + 1])
        out[4 * k + 2] = kx * zt[col] + l22 * zt[col + 1]
        out[4 * k + 3] = ky * zt[col + 2] + l22 * zt[col + 3]
    np.multiply(sv, zt[8:12], out=out[8:12])
    return np.ascontiguousarray(out.T).view(np.complex128)


def iter_sample_blocks(
    model: CovarianceModel, stream: RandomStream, n: int, block: int = DEFAULT_BLOCK
) -> Iterator[np.ndarray]:
    """Yield the draws of ``sample_batch(model, stream, n)`` in blocks of at most ``block``.

    The concatenation does not depend on ``block``.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if block < 1:
        raise ValueError("block must be >= 1")
    src = stream.normal_source()
    done = 0
    while done < n:
        m = min(block, n - done)
        z = src.standard_normal(N_REAL * m).reshape(m, N_REAL)
        yield _transform(model, z)
        done += m


def sample_batch(model: CovarianceModel, stream: RandomStream, n: int) -> np.ndarray:
    """``n`` independent draws, complex array of shape ``(n, 6)``; deterministic in ``stream``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_BATCH:
        raise CapacityError(f"batch of {n} samples exceeds the limit of {MAX_BATCH}; use iter_sample_blocks")
    try:
        return np.concatenate(list(iter_sample_blocks(model, stream, n)))
    except MemoryError as exc:
        raise CapacityError(f"could not allocate {n} samples") from exc


@dataclass(frozen=True)
class SecondMoments:
    """Exact covariance of the 12 real components plus complex-moment helpers."""

    real_covariance: np.ndarray

    def _complex(self, i: int, j: int, conj: bool) -> complex:
        c = self.real_covariance
        rr, ii = c[2 * i, 2 * j], c[2 * i + 1, 2 * j + 1]
        ri, ir = c[2 * i, 2 * j + 1], c[2 * i + 1, 2 * j]
        if conj:
            return complex(rr + ii, ir - ri)
        return complex(rr - ii, ri + ir)

    def product(self, i: int, j: int) -> complex:
        """<E_i E_j> with zero-based indices."""
        return self._complex(i, j, conj=False)

    def product_conj(self, i: int, j: int) -> complex:
        """<E_i conj(E_j)> with zero-based indices."""
        return self._complex(i, j, conj=True)

    def abs2(self, i: int) -> float:
        return self.product_conj(i, i).real


def exact_second_moments(model: CovarianceModel) -> SecondMoments:
    cov = np.zeros((N_REAL, N_REAL))
    for k in range(4):
        cov[2 * k, 2 * k] = cov[2 * k + 1, 2 * k + 1] = model.var_sq
    for k in range(4, 6):
        cov[2 * k, 2 * k] = cov[2 * k + 1, 2 * k + 1] = model.var_vac
    for a, b in ((0, 1), (2, 3)):
        cov[2 * a, 2 * b] = cov[2 * b, 2 * a] = model.cov_x
        cov[2 * a + 1, 2 * b + 1] = cov[2 * b + 1, 2 * a + 1] = model.cov_y
    cov.setflags(write=False)
    return SecondMoments(cov)


def real_components(samples) -> np.ndarray:
    """Interleave real and imaginary parts: shape ``(..., 12)``."""
    e = as_samples(samples)
    out = np.empty(e.shape[:-1] + (N_REAL,))
    out[..., 0::2] = e.real
    out[..., 1::2] = e.imag
    return out
