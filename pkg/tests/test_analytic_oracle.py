import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from wignerlhv import analytic_oracle as ao
from wignerlhv.errors import DegenerateDenominator
from wignerlhv.lhv_model import BellAngles

pos_chis = st.floats(min_value=1e-3, max_value=5.0, allow_nan=False)
deltas = st.floats(min_value=-7.0, max_value=7.0, allow_nan=False)
SIGNS = {"a+": 1, "a-": -1, "b+": 1, "b-": -1}


@pytest.mark.parametrize(
    "chi, rep, expected", [(0.0, "eq4", 0.0), (0.2, "eq4", 0.04), (0.2, "eq3", 0.16), (1.0, "eq3", 4.0)]
)
def test_mean_rate(chi, rep, expected):
    assert ao.oracle_mean_rate(chi, rep) == pytest.approx(expected, rel=1e-14, abs=1e-300)


def test_joint_moment_examples():
    for signs in itertools.product((1, -1), repeat=2):
        assert ao.oracle_joint_moment(0.0, 0.3, signs, "eq4") == 0.0
    assert ao.oracle_joint_moment(0.2, 0.0, (1, 1), "eq4") == pytest.approx(0.0432, rel=1e-13)
    assert ao.oracle_joint_moment(0.2, 0.0, (1, -1), "eq4") == pytest.approx(0.0016, rel=1e-13)
    with pytest.raises(ValueError):
        ao.oracle_joint_moment(0.2, 0.0, (1, 0), "eq4")


@pytest.fixture(scope="module")
def isserlis_tables():
    return {chi: (oracles.quadrature_covariance(chi), oracles.isserlis_fourth(oracles.quadrature_covariance(chi)))
            for chi in (0.0, 0.2, 0.5, 1.0)}  # fmt: skip


@pytest.mark.parametrize("chi", [0.0, 0.2, 0.5, 1.0])
@pytest.mark.parametrize("theta_a, theta_b", [(0.0, 0.0), (0.3, -0.2), (math.pi / 4, math.pi / 8), (1.0, 2.5)])
@pytest.mark.parametrize("rep", ["eq3", "eq4"])
def test_joint_moment_matches_pairing_enumeration(isserlis_tables, chi, theta_a, theta_b, rep):
    cov, fourth = isserlis_tables[chi]
    scale = 16 if rep == "eq3" else 1
    for ra in ("a+", "a-"):
        for rb in ("b+", "b-"):
            brute = oracles.brute_joint_moment(cov, fourth, ra, rb, rep, theta_a, theta_b)
            closed = ao.oracle_joint_moment(chi, theta_a - theta_b, (SIGNS[ra], SIGNS[rb]), rep)
            assert closed == pytest.approx(brute, rel=1e-11, abs=1e-12 * scale)


@given(st.floats(min_value=0, max_value=5), deltas, st.sampled_from([1, -1]), st.sampled_from([1, -1]))
def test_representation_factor_is_sixteen(chi, delta, i, j):
    assert ao.oracle_joint_moment(chi, delta, (i, j), "eq3") == 16 * ao.oracle_joint_moment(chi, delta, (i, j), "eq4")


@pytest.mark.parametrize("chi, delta, expected", [(0.2, 0.0, 1.04 / 1.12), (1.0, 0.0, 0.5), (0.7, math.pi / 4, 0.0)])
def test_correlation_examples(chi, delta, expected):
    assert ao.oracle_correlation_E(chi, delta) == pytest.approx(expected, rel=1e-14, abs=1e-16)


def test_correlation_degenerate():
    with pytest.raises(DegenerateDenominator):
        ao.oracle_correlation_E(0.0, 0.0)
    with pytest.raises(DegenerateDenominator):
        ao.oracle_bell_S(0.0)


@given(pos_chis, deltas)
def test_correlation_is_ratio_of_moments(chi, delta):
    m = {s: ao.oracle_joint_moment(chi, delta, s, "eq4") for s in itertools.product((1, -1), repeat=2)}
    ratio = (m[1, 1] + m[-1, -1] - m[1, -1] - m[-1, 1]) / sum(m.values())
    e = ao.oracle_correlation_E(chi, delta)
    assert e == pytest.approx(ratio, rel=1e-14, abs=1e-14)
    assert abs(e) <= 1


@pytest.mark.parametrize(
    "chi, expected", [(1e-3, 2 * math.sqrt(2)), (0.2, 2.6263966158357481), (1.0, math.sqrt(2))]
)
def test_bell_S(chi, expected):
    tol = 1e-5 if chi == 1e-3 else 1e-13
    assert ao.oracle_bell_S(chi) == pytest.approx(expected, rel=tol)


@given(pos_chis)
def test_bell_S_closed_form(chi):
    assert ao.oracle_bell_S(chi, BellAngles()) == pytest.approx(2 * math.sqrt(2) * (1 + chi**2) / (1 + 3 * chi**2), rel=1e-13)


def test_crossing():
    chi = ao.crossing_chi()
    assert chi == pytest.approx(0.5110, abs=1e-4)
    assert ao.oracle_bell_S(chi) == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize(
    "chi, rep, expected",
    [(0.0, "eq4", 1 - math.exp(-1)), (0.2, "eq4", 1 - math.exp(-1 / 1.08)), (2.0, "eq4", 1 - math.exp(-1 / 9)), (0.0, "eq3", 0.5)],
)
def test_negative_fraction_values(chi, rep, expected):
    assert ao.oracle_negative_fraction(chi, rep) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("chi", [0.0, 0.2, 1.0])
def test_negative_fraction_brute_force(chi):
    n = 1_000_000
    f2, v2 = oracles.brute_mc_abs2(chi, n, seed=31)
    for rep, neg in (("eq4", f2 < 0.5), ("eq3", f2 < v2)):
        p = ao.oracle_negative_fraction(chi, rep)
        assert abs(neg.mean() - p) < 5 * math.sqrt(p * (1 - p) / n)


def test_mean_intensity_brute_force():
    n = 1_000_000
    for chi in (0.2, 1.0):
        f2, v2 = oracles.brute_mc_abs2(chi, n, seed=32)
        assert abs(f2.mean() - ao.mean_intensity(chi)) < 5 * f2.std() / math.sqrt(n)
        assert abs(4 * v2.mean() - ao.oracle_dark_noise_mean()) < 5 * 4 * v2.std() / math.sqrt(n)


@pytest.mark.parametrize("chi, delta", [(0.2, 0.0), (1.0, 0.7), (0.5, 2.0)])
def test_sign_correlation_brute_force(chi, delta):
    n = 400_000
    rng = np.random.default_rng(33)
    z = rng.multivariate_normal(np.zeros(12), oracles.quadrature_covariance(chi), size=n, method="eigh")
    ta, tb = delta, 0.0
    xa = z[:, 0] * math.cos(ta) + z[:, 4] * math.sin(ta)
    xb = z[:, 2] * math.cos(tb) + z[:, 6] * math.sin(tb)
    s = np.sign(xa) * np.sign(xb)
    assert abs(s.mean() - ao.oracle_sign_correlation(chi, delta)) < 5 * s.std() / math.sqrt(n)
    assert abs(ao.oracle_sign_bell_S(chi)) <= 2


def test_oracle_result():
    r = ao.OracleResult(0.5, ao.Derivation.CORRELATION_E)
    assert r.derivation.value == "correlation_E"
    with pytest.raises(ValueError):
        ao.OracleResult(float("nan"), ao.Derivation.BELL_S)
