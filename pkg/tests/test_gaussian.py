import math

import pytest
from hypothesis import given, strategies as st

from macregions.errors import ValidationError
from macregions.gaussian import (GaussianParams, example4_grid_max, example4_max, gaussian_capacity,
                                 golden_section_max, theta, theta_covariance)

pos = st.floats(0.05, 20.0)
rho_st = st.floats(-0.99, 0.99)


def test_plain_sum_oracle():
    out = gaussian_capacity("remark7", {"P1": 1, "P2": 1, "Q": 1, "N": 1})
    assert out["value"] == pytest.approx(0.5 * math.log2(3), abs=1e-12)
    assert out["value"] == pytest.approx(0.7925, abs=1e-4)


def test_coherent_sum_oracle():
    out = gaussian_capacity("remark5", {"P1": 1, "P2": 1, "Q": 1, "N": 1})
    assert out["value"] == pytest.approx(0.5 * math.log2(5), abs=1e-12)


def test_theta_without_second_input():
    for P1, Q, N in [(1, 1, 1), (3, 0.5, 2), (10, 2, 0.1)]:
        assert theta(P1, 0.0, 0.0, Q, N) == pytest.approx(0.5 * math.log2(1 + P1 / Q), abs=1e-12)


@given(pos, pos, rho_st, pos, pos)
def test_theta_matches_covariance_form(P1, P2, rho, Q, N):
    assert theta(P1, P2, rho, Q, N) == pytest.approx(theta_covariance(P1, P2, rho, Q, N), abs=1e-9)


@given(pos, pos, pos, pos, st.floats(0.01, 5.0))
def test_helper_link_monotone_in_power(P1, P2, Q, N, extra):
    base = example4_max(P1, P2, Q, N)[1]
    assert example4_max(P1 + extra, P2, Q, N)[1] >= base - 1e-9
    assert example4_max(P1, P2, Q + extra, N)[1] <= base + 1e-9


@given(pos, pos, pos, pos)
def test_nonnegative_correlation_suffices(P1, P2, Q, N):
    _, full = example4_max(P1, P2, Q, N, lo=-1.0, hi=1.0)
    _, half = example4_max(P1, P2, Q, N)
    assert full == pytest.approx(half, abs=1e-9)


def test_golden_matches_grid():
    for args in [(1, 1, 1, 1), (5, 1, 2, 0.5), (0.5, 4, 1, 3)]:
        r_g, v_g = example4_max(*args)
        r_b, v_b = example4_grid_max(*args, points=200001)
        assert v_g >= v_b - 1e-10
        assert v_g == pytest.approx(v_b, abs=1e-8)


def test_large_helper_noise_tends_to_coherent_sum():
    # as N grows the helper link vanishes and full correlation wins
    p = dict(P1=2.0, P2=3.0, Q=1.0)
    target = gaussian_capacity("remark5", dict(p, N=1.0))["value"]
    gaps = [example4_max(N=N, **p)[1] - target for N in (1e1, 1e3, 1e5)]
    assert gaps[0] > gaps[1] > gaps[2] >= -1e-9
    assert gaps[2] < 1e-3
    assert example4_max(N=1e5, **p)[0] == pytest.approx(1.0, abs=1e-3)


def test_golden_section_boundary():
    x, v = golden_section_max(lambda t: t, 0.0, 1.0)
    assert x == pytest.approx(1.0) and v == pytest.approx(1.0)


def test_zero_noise_is_infinite():
    assert math.isinf(gaussian_capacity("remark7", {"P1": 1, "P2": 1, "Q": 0, "N": 1})["value"])


def test_validation():
    with pytest.raises(ValidationError):
        GaussianParams(-1, 1, 1, 1)
    with pytest.raises(ValidationError):
        GaussianParams(1, 1, 1, 1, rho12=1.5)
    with pytest.raises(ValidationError):
        gaussian_capacity("bogus", {"P1": 1, "P2": 1, "Q": 1, "N": 1})
