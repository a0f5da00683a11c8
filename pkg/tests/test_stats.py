import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from wristhrv import stats
from wristhrv.errors import DegenerateVariance, EmptyInput, InvalidDf, LengthMismatch


def t_density(x, df):
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return np.exp(log_c - (df + 1) / 2 * np.log1p(x * x / df))


def t_sf_trapezoid(t, df, n=200_001):
    """Two-sided tail as 1 - 2 * integral of the density over [0, |t|] (trapezoid rule)."""
    x = np.linspace(0.0, abs(t), n)
    f = t_density(x, df)
    h = x[1] - x[0]
    area = h * (f.sum() - 0.5 * (f[0] + f[-1]))
    return 1.0 - 2.0 * area


def test_pearson_perfect():
    res = stats.pearson([1, 2, 3], [1, 2, 3])
    assert res.r == 1.0 and res.p_two_sided == 0.0 and res.n == 3


def test_pearson_perfect_anti():
    assert stats.pearson([1, 2, 3], [3, 2, 1]).r == -1.0


def test_pearson_hand_value():
    # covariance sum 3.0 over sqrt(5 * 5)
    res = stats.pearson([1, 2, 3, 4], [2, 1, 4, 3])
    assert res.r == pytest.approx(0.6, abs=1e-12)
    assert res.t_stat == pytest.approx(0.6 * math.sqrt(2 / (1 - 0.36)), abs=1e-12)
    assert res.p_two_sided == pytest.approx(t_sf_trapezoid(res.t_stat, 2), abs=1e-6)


def test_pearson_errors():
    with pytest.raises(LengthMismatch):
        stats.pearson([1, 2, 3], [1, 2])
    with pytest.raises(LengthMismatch):
        stats.pearson([1, 2], [1, 2])
    with pytest.raises(DegenerateVariance):
        stats.pearson([1, 1, 1], [1, 2, 3])


@given(
    st.lists(st.tuples(st.integers(-100, 100), st.integers(-100, 100)), min_size=3, max_size=50),
    st.sampled_from([0.5, 2.0, 3.0, 10.0]),
    st.integers(-1000, 1000),
)
def test_pearson_affine_invariance(pairs, a, b):
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    assume(np.ptp(x) > 0 and np.ptp(y) > 0)
    base = stats.pearson(x, y).r
    assert abs(stats.pearson(a * x + b, y).r - base) < 1e-12
    assert abs(stats.pearson(-a * x + b, y).r + base) < 1e-12


def test_pearson_affine_invariance_fixed():
    rng = np.random.default_rng(0)
    x = rng.normal(size=500)
    y = 0.3 * x + rng.normal(size=500)
    base = stats.pearson(x, y).r
    for a, b in [(2.0, 5.0), (0.5, -3.0), (1e3, 1e-2)]:
        assert abs(stats.pearson(a * x + b, y).r - base) < 1e-12
        assert abs(stats.pearson(-a * x + b, y).r + base) < 1e-12


def test_t_center_and_tail():
    for df in (1, 2, 5, 100):
        assert stats.student_t_sf(0.0, df) == 1.0
        assert stats.student_t_sf(math.inf, df) == 0.0
        assert stats.student_t_sf(1e12, df) < 1e-10


def test_t_reference_value():
    oracle = t_sf_trapezoid(2.0, 10)
    assert oracle == pytest.approx(0.0734, abs=1e-4)
    assert stats.student_t_sf(2.0, 10) == pytest.approx(oracle, abs=1e-6)


@pytest.mark.parametrize("df", [1, 5, 30, 1000])
def test_t_matches_quadrature(df):
    for t in np.linspace(-8, 8, 33):
        assert stats.student_t_sf(float(t), df) == pytest.approx(t_sf_trapezoid(t, df), abs=1e-6)


def test_t_monotone_and_symmetric():
    ts = np.linspace(0, 20, 400)
    for df in (1, 3, 30):
        vals = [stats.student_t_sf(float(t), df) for t in ts]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert stats.student_t_sf(-2.5, df) == stats.student_t_sf(2.5, df)


def test_t_invalid_df():
    with pytest.raises(InvalidDf):
        stats.student_t_sf(1.0, 0)


def test_rmse_values():
    assert stats.rmse([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert stats.rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5), abs=1e-12)
    with pytest.raises(LengthMismatch):
        stats.rmse([1], [1, 2])
    with pytest.raises(EmptyInput):
        stats.rmse([], [])


@given(st.lists(st.tuples(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6)), min_size=1, max_size=50))
def test_rmse_symmetric_and_zero_iff_equal(pairs):
    x = [a / 1000 for a, _ in pairs]
    y = [b / 1000 for _, b in pairs]
    assert stats.rmse(x, y) == stats.rmse(y, x)
    assert (stats.rmse(x, y) == 0.0) == (x == y)
