"""Closed-form best constants, bounds and ball profiles.

These are the oracles the grid solvers are checked against.  Products of
large powers are assembled in log space so p-sweeps up to p ~ 50 on small
balls neither overflow nor underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# above this exponent magnitude, powers are combined through logarithms
_LOG_SPACE_EXPONENT = 50.0


@dataclass(frozen=True)
class BoundPair:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper * (1 + 1e-12):
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.lower * (1 - slack) <= value <= self.upper * (1 + slack)


def gamma(t: float) -> float:
    """Euler's Gamma function for ``t > 0``."""
    if not t > 0:
        raise DomainError(f"gamma needs t > 0, got {t}")
    return math.gamma(t)


def unit_ball_volume(N: int) -> float:
    """Volume of the unit ball of R^N, pi^(N/2) / Gamma(N/2 + 1)."""
    if int(N) != N or N < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {N}")
    return math.exp(0.5 * N * math.log(math.pi) - math.lgamma(0.5 * N + 1))


def _check_dim(N):
    if int(N) != N or N < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {N}")


def _check_supercritical(N, p):
    _check_dim(N)
    if not p > N:
        raise DomainError(f"needs p > N (p={p}, N={N})")


def _combine(log_terms, exponents):
    """prod(exp(l)**e), in log space once some |e * l| is large."""
    if any(abs(e) > _LOG_SPACE_EXPONENT for e in exponents):
        return math.exp(sum(l * e for l, e in zip(log_terms, exponents)))
    out = 1.0
    for l, e in zip(log_terms, exponents):
        out *= math.exp(l) ** e
    return out


def sobolev_constant(N: int, p: float) -> float:
    """Sharp Sobolev constant S_p of R^N for 1 < p < N (Aubin-Talenti)."""
    _check_dim(N)
    if not 1 < p < N:
        raise DomainError(f"sobolev_constant needs 1 < p < N (p={p}, N={N})")
    ratio = (math.lgamma(N / p) + math.lgamma(1 + N - N / p)
             - math.lgamma(1 + N / 2) - math.lgamma(N))
    return N * math.exp(0.5 * p * math.log(math.pi)
                        + (p - 1) * math.log((N - p) / (p - 1))
                        + (p / N) * ratio)


def lambda_ball(N: int, p: float, R: float) -> float:
    """Lambda_p of the ball of radius R: N w_N R^(N-p) ((p-N)/(p-1))^(p-1)."""
    _check_supercritical(N, p)
    if not R > 0:
        raise DomainError(f"radius must be > 0, got {R}")
    wN = unit_ball_volume(N)
    return N * wN * _combine([math.log(R), math.log((p - N) / (p - 1))], [N - p, p - 1])


def ball_profile(N: int, p: float, R: float, r: float) -> float:
    """Extremal profile 1 - (r/R)^((p-N)/(p-1)) of Lambda_p on the ball."""
    _check_supercritical(N, p)
    if not 0 <= r <= R:
        raise DomainError(f"radius r={r} outside [0, {R}]")
    return 1.0 - (r / R) ** ((p - N) / (p - 1))


def talenti_lower(N: int, p: float, area: float) -> float:
    """Lower bound N w_N^(p/N) ((p-N)/(p-1))^(p-1) |Omega|^(1-p/N)."""
    _check_supercritical(N, p)
    if not area > 0:
        raise DomainError(f"area must be > 0, got {area}")
    wN = unit_ball_volume(N)
    return N * _combine([math.log(wN), math.log((p - N) / (p - 1)), math.log(area)],
                        [p / N, p - 1, 1 - p / N])


def inradius_upper(N: int, p: float, R_inradius: float) -> float:
    """Upper bound Lambda_p(B_R) with R the inradius."""
    return lambda_ball(N, p, R_inradius)


def bounds(N: int, p: float, area: float, R_inradius: float) -> BoundPair:
    return BoundPair(talenti_lower(N, p, area), inradius_upper(N, p, R_inradius))


def p_to_N_limit_constant(N: int) -> float:
    """Limit of Lambda_p / |p - N|^(p-1) as p -> N: N w_N / (N-1)^(N-1)."""
    _check_dim(N)
    return N * unit_ball_volume(N) / (N - 1) ** (N - 1)


def renwei_constant(N: int) -> float:
    """Limit of q^(N-1) lambda_q at p = N: N^(2N-1) w_N e^(N-1) / (N-1)^(N-1)."""
    _check_dim(N)
    return N ** (2 * N - 1) * unit_ball_volume(N) * math.e ** (N - 1) / (N - 1) ** (N - 1)
