import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wignerlhv.gaussian_core import build_covariance, sample_batch
from wignerlhv.lhv_model import (
    AnalyzerSettings,
    BellAngles,
    Representation,
    chsh,
    count_rates,
    count_rates_eq3,
    count_rates_eq4,
    dark_noise_rates,
    quadrature_realities,
    signal_amplitudes,
)
from wignerlhv.rng import RandomStream

angles = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
samples6 = st.lists(st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False), min_size=6, max_size=6)


def one(**kw):
    e = np.zeros(6, dtype=complex)
    for k, v in kw.items():
        e[int(k[1]) - 1] = v
    return e


def test_quadratures_signal_only():
    q = quadrature_realities(one(e1=0.5), AnalyzerSettings(0.0, 0.0))
    assert q.x_a_plus.tolist() == [1.0, 0.0]
    assert q.x_a_minus[0] == 0.0
    assert q.x_va[0] == 0.0


def test_quadratures_dark_channel_only():
    q = quadrature_realities(one(e5=0.5), AnalyzerSettings(0.3, 1.1))
    assert q.x_va.tolist() == [1.0, 0.0]
    for x in (q.x_a_plus, q.x_a_minus, q.x_b_plus, q.x_b_minus, q.x_vb):
        assert not np.any(x)


def test_quadratures_imaginary_amplitude():
    q = quadrature_realities(one(e1=0.5j), AnalyzerSettings(0.0, 0.0))
    assert q.x_a_plus.tolist() == [0.0, -1.0]


def test_b_side_uses_e2_e4_e6():
    q = quadrature_realities(one(e2=0.5, e4=0.25j, e6=1.0), AnalyzerSettings(0.0, math.pi / 2))
    # theta_b = pi/2: F_B+ = E4, F_B- = -E2
    np.testing.assert_allclose(q.x_b_plus, [0.0, -0.5], atol=1e-16)
    np.testing.assert_allclose(q.x_b_minus, [-1.0, 0.0], atol=1e-16)
    assert q.x_vb.tolist() == [2.0, 0.0]


def test_eq3_examples():
    r = count_rates_eq3(quadrature_realities(one(e1=0.5), AnalyzerSettings(0.0, 0.0)))
    assert r.r_a_plus == 1.0
    assert r.representation is Representation.EQ3
    r = count_rates_eq3(quadrature_realities(one(e5=0.5), AnalyzerSettings(0.0, 0.0)))
    assert r.r_a_plus == -1.0 and r.r_a_minus == -1.0 and r.r_b_plus == 0.0


def test_eq4_examples():
    r = count_rates_eq4(one(e1=0.5), AnalyzerSettings(0.0, 0.0))
    assert r.r_a_plus == -0.25
    r = count_rates_eq4(np.zeros(6, dtype=complex), AnalyzerSettings(0.4, 0.9))
    assert all(v == -0.5 for v in r.as_tuple())
    assert r.representation is Representation.EQ4


@pytest.fixture(scope="module")
def random_samples():
    return sample_batch(build_covariance(0.7), RandomStream(21), 10_000)


def test_eq3_is_intensity_difference(random_samples):
    s = AnalyzerSettings(0.37, -1.2)
    r = count_rates_eq3(quadrature_realities(random_samples, s))
    e = random_samples
    fa = e[:, 0] * math.cos(0.37) + e[:, 2] * math.sin(0.37)
    expected = 4 * np.abs(fa) ** 2 - 4 * np.abs(e[:, 4]) ** 2
    np.testing.assert_allclose(r.r_a_plus, expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())


def test_eq3_equals_four_eq4_without_vacuum(random_samples):
    e = random_samples.copy()
    e[:, 4:] = 0
    s = AnalyzerSettings(0.8, 2.1)
    r3 = count_rates_eq3(quadrature_realities(e, s))
    r4 = count_rates_eq4(e, s)
    for a, b in zip(r3.as_tuple(), r4.as_tuple()):
        # eq4 carries -1/2 per rate; with no vacuum term eq3 = 4 |F|^2 = 4 (eq4 + 1/2)
        np.testing.assert_allclose(a, 4 * (b + 0.5), rtol=1e-12)


def test_quadrature_identity(random_samples):
    s = AnalyzerSettings(1.3, 0.2)
    q = quadrature_realities(random_samples, s)
    for x, f in zip((q.x_a_plus, q.x_a_minus, q.x_b_plus, q.x_b_minus), signal_amplitudes(random_samples, s)):
        np.testing.assert_allclose(x[:, 0] ** 2 + x[:, 1] ** 2, 4 * np.abs(f) ** 2, rtol=1e-12)


def test_dark_noise_examples():
    d = dark_noise_rates(one(e5=0.5))
    assert d.r_a_plus == 1.0 and d.r_b_plus == 0.0
    assert all(v == 0.0 for v in dark_noise_rates(np.zeros(6, dtype=complex)).as_tuple())


@pytest.mark.parametrize("chi", [0.0, 1.0])
def test_dark_noise_mean(chi):
    e = sample_batch(build_covariance(chi), RandomStream(5, 1), 1_000_000)
    d = dark_noise_rates(e)
    for v in (d.r_a_plus, d.r_b_plus):
        assert abs(v.mean() - 2.0) < 5 * v.std(ddof=1) / 1000


@given(samples6, angles, angles)
def test_angle_shift(vals, ta, tb):
    e = np.array(vals)
    base = AnalyzerSettings(ta, tb)
    shifted = AnalyzerSettings(ta + math.pi / 2, tb + math.pi / 2)
    for rep in Representation:
        r0 = count_rates(e, base, rep)
        r1 = count_rates(e, shifted, rep)
        scale = 1 + sum(abs(complex(v)) ** 2 for v in e) * (4 if rep is Representation.EQ3 else 1)
        for got, want in ((r1.r_a_plus, r0.r_a_minus), (r1.r_a_minus, r0.r_a_plus),
                          (r1.r_b_plus, r0.r_b_minus), (r1.r_b_minus, r0.r_b_plus)):  # fmt: skip
            assert abs(got - want) <= 1e-12 * scale


@given(samples6, samples6, angles, angles, angles)
def test_locality(u, v, ta, tb, tb2):
    a = np.array(u)
    b = a.copy()
    b[[1, 3, 5]] = np.array(v)[[1, 3, 5]]
    for rep in Representation:
        r0 = count_rates(a, AnalyzerSettings(ta, tb), rep)
        r1 = count_rates(b, AnalyzerSettings(ta, tb2), rep)
        assert r0.r_a_plus.tobytes() == r1.r_a_plus.tobytes()
        assert r0.r_a_minus.tobytes() == r1.r_a_minus.tobytes()
    c = a.copy()
    c[[0, 2, 4]] = np.array(v)[[0, 2, 4]]
    for rep in Representation:
        r0 = count_rates(a, AnalyzerSettings(ta, tb), rep)
        r1 = count_rates(c, AnalyzerSettings(tb2, tb), rep)
        assert r0.r_b_plus.tobytes() == r1.r_b_plus.tobytes()
        assert r0.r_b_minus.tobytes() == r1.r_b_minus.tobytes()


@pytest.mark.parametrize("chi", [0.2, 1.0])
def test_mean_rates(chi):
    e = sample_batch(build_covariance(chi), RandomStream(8, int(chi * 10)), 1_000_000)
    s = AnalyzerSettings(0.6, 0.1)
    for rep, expected in ((Representation.EQ4, chi**2), (Representation.EQ3, 4 * chi**2)):
        r = count_rates(e, s, rep).r_a_plus
        assert abs(r.mean() - expected) < 5 * r.std(ddof=1) / 1000


@pytest.mark.parametrize("chi", [0.0, 0.5, 2.0])
def test_negative_values_occur(chi):
    e = sample_batch(build_covariance(chi), RandomStream(4), 20_000)
    for rep in Representation:
        assert np.any(count_rates(e, AnalyzerSettings(0, 0), rep).r_a_plus < 0)


def test_settings_validation():
    with pytest.raises(ValueError):
        AnalyzerSettings(float("inf"), 0.0)
    with pytest.raises(ValueError):
        Representation.parse("eq5")
    assert AnalyzerSettings(4.0, -1.0).reduced().theta_a == pytest.approx(4.0 - math.pi)


def test_bell_angle_pairs_and_chsh():
    pairs = BellAngles().pairs()
    assert [(p.theta_a, p.theta_b) for p in pairs] == [
        (0.0, math.pi / 8), (0.0, 3 * math.pi / 8), (math.pi / 4, math.pi / 8), (math.pi / 4, 3 * math.pi / 8),
    ]  # fmt: skip
    assert chsh([0.5, -0.5, 0.5, 0.5]) == 2.0
