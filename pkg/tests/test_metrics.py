import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddpce.errors import ConfigurationError, UndefinedDeviationError
from ddpce.metrics import deviation_row, percent_deviation, quantile, summarize


def sorted_interp(values, level):
    """Linear interpolation of order statistics at 1-based position (n-1)*level + 1."""
    s = sorted(values)
    h = (len(s) - 1) * level + 1
    lo = math.floor(h)
    hi = math.ceil(h)
    return s[lo - 1] + (h - lo) * (s[hi - 1] - s[lo - 1])


def test_quantile_examples():
    data = list(range(1, 101))
    assert sorted_interp(data, 0.95) == pytest.approx(95.05)
    assert quantile(data, 0.95) == pytest.approx(95.05, abs=1e-12)
    assert quantile([5.0], 0.3) == 5.0
    assert quantile([1.0, 2.0], 0.5) == 1.5


def test_quantile_errors():
    with pytest.raises(ConfigurationError):
        quantile([], 0.5)
    for level in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigurationError):
            quantile([1.0], level)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60),
    st.floats(0.001, 0.999),
)
def test_quantile_matches_oracle(values, level):
    assert quantile(values, level) == pytest.approx(sorted_interp(values, level), rel=1e-9, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40),
    st.floats(0.01, 0.98),
    st.floats(0.0, 0.01),
    st.floats(-100, 100),
    st.floats(0.01, 100),
)
def test_quantile_equivariance(values, level, step, shift, scale):
    x = np.array(values)
    assert quantile(x, level) <= quantile(x, level + step) + 1e-9
    assert quantile(x + shift, level) == pytest.approx(quantile(x, level) + shift, abs=1e-8)
    assert quantile(scale * x, level) == pytest.approx(scale * quantile(x, level), rel=1e-9, abs=1e-8)


def test_percent_deviation_examples():
    assert percent_deviation(95, 100) == pytest.approx(-5.0)
    assert percent_deviation(3.3, 3.3) == 0.0
    ref = 42.0
    assert percent_deviation(1.93 * ref / 100 + ref, ref) == pytest.approx(1.93)
    assert percent_deviation(-11, -10) == pytest.approx(-10.0)
    with pytest.raises(UndefinedDeviationError):
        percent_deviation(1.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(0.1, 1e4))
def test_percent_deviation_linear(s1, s2, r):
    lhs = percent_deviation(r + s1 + s2, r) 
    rhs = percent_deviation(r + s1, r) + percent_deviation(r + s2, r)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)


def test_summarize_examples():
    s = summarize(np.full(10, 3.5))
    assert (s.mean, s.std, s.q(0.05), s.q(0.95)) == (3.5, 0.0, 3.5, 3.5)
    s = summarize([-1.0, 1.0])
    assert (s.mean, s.std) == (0.0, 1.0)
    s = summarize(np.arange(10.0), levels=(0.5,))
    assert set(s.quantiles) == {0.05, 0.5, 0.95}


def test_summarize_uniform_quantile():
    # binomial standard error of the 0.95 quantile at n=1e6 is ~2.2e-4
    x = np.random.default_rng(17).uniform(size=1_000_000)
    assert abs(summarize(x).q(0.95) - 0.95) < 0.002


def test_deviation_row():
    ref = summarize(np.arange(1.0, 101.0))
    sur = summarize(np.arange(1.0, 101.0) * 1.1)
    row = deviation_row("OLS", 0.0, sur, ref, 0.5)
    assert row.p95_dev == pytest.approx(10.0)
    assert row.std_dev == pytest.approx(10.0)
    assert row.ok
