import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobex import closedform as cf
from sobex.errors import DomainError


def test_gamma_values():
    assert cf.gamma(1) == pytest.approx(1.0, rel=1e-14)
    assert cf.gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-13)
    assert cf.gamma(5) == pytest.approx(24.0, rel=1e-14)
    for t in (0, -1.5):
        with pytest.raises(DomainError):
            cf.gamma(t)


@given(st.floats(0.05, 60))
def test_gamma_matches_mpmath(t):
    assert cf.gamma(t) == pytest.approx(float(mpmath.gamma(t)), rel=1e-12)


def test_unit_ball_volume():
    assert cf.unit_ball_volume(1) == pytest.approx(2.0, rel=1e-14)
    assert cf.unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-14)
    assert cf.unit_ball_volume(3) == pytest.approx(4 * math.pi / 3, rel=1e-14)


def _sobolev_mp(N, p):
    N, p = mpmath.mpf(N), mpmath.mpf(p)
    g = mpmath.gamma
    ratio = g(N / p) * g(1 + N - N / p) / (g(1 + N / 2) * g(N))
    return N * mpmath.pi ** (p / 2) * ((N - p) / (p - 1)) ** (p - 1) * ratio ** (p / N)


def test_sobolev_constant():
    assert cf.sobolev_constant(3, 2) == pytest.approx(3 * (math.pi / 2) ** (4 / 3), rel=1e-10)
    with mpmath.workdps(30):
        ref = float(_sobolev_mp(4, 2))
    assert cf.sobolev_constant(4, 2) == pytest.approx(ref, rel=1e-10)
    with pytest.raises(DomainError):
        cf.sobolev_constant(3, 3)


def test_lambda_ball_examples():
    assert cf.lambda_ball(2, 4, 1) == pytest.approx(16 * math.pi / 27, rel=1e-13)
    assert cf.lambda_ball(2, 4, 2) == pytest.approx(16 * math.pi / 27 / 4, rel=1e-13)
    assert cf.lambda_ball(2, 2.000001, 1) < 1e-5
    with pytest.raises(DomainError):
        cf.lambda_ball(2, 2, 1)


def test_ball_profile():
    assert cf.ball_profile(2, 4, 1, 0) == 1.0
    assert cf.ball_profile(2, 4, 1, 1) == 0.0
    assert cf.ball_profile(2, 4, 1, 0.5) == pytest.approx(1 - 0.5 ** (2 / 3), rel=1e-14)
    with pytest.raises(DomainError):
        cf.ball_profile(2, 4, 1, 1.5)
    with pytest.raises(DomainError):
        cf.ball_profile(2, 2, 1, 0.5)
    rs = [k / 50 for k in range(51)]
    vals = [cf.ball_profile(2, 5, 1, r) for r in rs]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_talenti_and_inradius():
    assert cf.talenti_lower(2, 4, math.pi) == pytest.approx(cf.lambda_ball(2, 4, 1), rel=1e-13)
    assert cf.talenti_lower(2, 4, 1) == pytest.approx(2 * math.pi ** 2 * 8 / 27, rel=1e-13)
    assert cf.talenti_lower(2, 4, 2 * math.pi) == pytest.approx(16 * math.pi / 27 / 2, rel=1e-13)
    assert cf.inradius_upper(2, 4, 0.5) == pytest.approx(16 * math.pi / 27 * 4, rel=1e-13)
    b = cf.bounds(2, 4, math.pi, 1.0)
    assert b.lower == pytest.approx(b.upper, rel=1e-13)
    with pytest.raises(DomainError):
        cf.inradius_upper(2, 2, 1.0)


def test_limit_constants():
    assert cf.p_to_N_limit_constant(2) == pytest.approx(2 * math.pi, rel=1e-14)
    assert cf.p_to_N_limit_constant(3) == pytest.approx(math.pi, rel=1e-14)
    ratio = cf.lambda_ball(2, 2.001, 1) / 0.001 ** 1.001
    assert abs(ratio - 2 * math.pi) / (2 * math.pi) < 0.01
    assert cf.renwei_constant(2) == pytest.approx(8 * math.pi * math.e, rel=1e-14)
    assert cf.renwei_constant(3) == pytest.approx(81 * math.pi * math.e ** 2, rel=1e-13)
    vals = [cf.renwei_constant(N) for N in (2, 3, 4)]
    assert vals[0] < vals[1] < vals[2]


@settings(max_examples=100)
@given(st.integers(2, 6), st.floats(0.01, 45), st.floats(0.05, 20))
def test_scaling_law(N, dp, R):
    p = N + dp
    lhs = cf.lambda_ball(N, p, R)
    rhs = cf.lambda_ball(N, p, 1.0) * R ** (N - p)
    assert lhs == pytest.approx(rhs, rel=1e-12)


@given(st.integers(2, 6), st.floats(0.01, 40), st.floats(0.1, 5))
def test_ball_saturates_talenti(N, dp, R):
    p = N + dp
    area = cf.unit_ball_volume(N) * R ** N
    assert cf.talenti_lower(N, p, area) == pytest.approx(cf.lambda_ball(N, p, R), rel=1e-12)


@given(st.integers(2, 5), st.floats(0.05, 20), st.floats(0.05, 20))
def test_normalized_ball_constant_increases_in_p(N, d1, d2):
    p1, p2 = N + min(d1, d2), N + max(d1, d2)
    if p2 - p1 < 1e-6:
        return
    wN = cf.unit_ball_volume(N)
    f = lambda p: cf.lambda_ball(N, p, 1.0) ** (1 / p) * wN ** (-1 / p)
    assert f(p2) > f(p1)


def test_large_exponent_no_overflow():
    v = cf.lambda_ball(2, 50, 0.05)
    assert math.isfinite(v) and v > 0
    assert math.isfinite(cf.talenti_lower(2, 50, 1e-3))
