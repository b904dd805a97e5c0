"""Numeric kernels for the F and t tail probabilities: the regularized
incomplete beta function via continued fractions."""

from __future__ import annotations

import math

from ..errors import DomainError

_TINY = 1e-300
_EPS = 1e-16
_MAX_ITER = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise DomainError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def reg_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b), the regularized incomplete beta function.

    Evaluated by continued fraction, switching to the symmetric form
    1 - I_(1-x)(b, a) past the crossover point for fast convergence.
    """
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must be in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    if a == 1.0 and b == 1.0:
        return x  # uniform CDF, exact
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_survival(f_stat: float, df1: int, df2: int) -> float:
    """P(F >= f_stat) for an F distribution with (df1, df2) degrees of
    freedom; 1.0 at f_stat == 0 and strictly decreasing in f_stat."""
    if df1 < 1 or df2 < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    if f_stat < 0 or math.isnan(f_stat):
        raise DomainError(f"F statistic must be >= 0, got {f_stat}")
    if math.isinf(f_stat):
        return 0.0
    x = df2 / (df2 + df1 * f_stat)
    return reg_incomplete_beta(x, df2 / 2.0, df1 / 2.0)


def t_survival_two_sided(t_stat: float, df: float) -> float:
    """Two-sided tail probability for Student's t."""
    if df <= 0:
        raise DomainError(f"df must be > 0, got {df}")
    if math.isnan(t_stat):
        raise DomainError("t statistic must be a number")
    if math.isinf(t_stat):
        return 0.0
    x = df / (df + t_stat * t_stat)
    return reg_incomplete_beta(x, df / 2.0, 0.5)
