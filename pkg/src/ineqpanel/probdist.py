"""Upper-tail probability functions for the test statistics used across the library.

Chi-square, Student t and Fisher F tails are computed from scratch via the
regularized incomplete gamma and beta functions (series expansion below the
standard threshold, continued fraction above it); the normal tail uses the
stdlib erfc. All functions are pure and deterministic.
"""

from __future__ import annotations

import math

__all__ = [
    "chi2_sf",
    "student_t_sf",
    "f_sf",
    "normal_cdf",
    "normal_sf",
    "regularized_gamma_p",
    "regularized_gamma_q",
    "regularized_beta",
    "invert_sf",
]

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 500


class DistributionDomainError(ValueError):
    """Raised when a tail function is called outside its domain."""


def _gamma_p_series(a: float, x: float) -> float:
    # series for P(a, x), valid for x < a + 1
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    return total * math.exp(log_prefactor)


def _gamma_q_contfrac(a: float, x: float) -> float:
    # modified Lentz continued fraction for Q(a, x), valid for x >= a + 1
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    log_prefactor = a * math.log(x) - x - math.lgamma(a)
    return h * math.exp(log_prefactor)


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise DistributionDomainError(f"shape parameter must be positive, got {a}")
    if x < 0:
        raise DistributionDomainError(f"argument must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0:
        raise DistributionDomainError(f"shape parameter must be positive, got {a}")
    if x < 0:
        raise DistributionDomainError(f"argument must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def _beta_contfrac(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise DistributionDomainError(f"shape parameters must be positive, got ({a}, {b})")
    if x < 0.0 or x > 1.0:
        raise DistributionDomainError(f"argument must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_contfrac(a, b, x) / a
    return 1.0 - front * _beta_contfrac(b, a, 1.0 - x) / b


def chi2_sf(x: float, df: float) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if df <= 0:
        raise DistributionDomainError(f"degrees of freedom must be positive, got {df}")
    if x < 0:
        raise DistributionDomainError(f"statistic must be non-negative, got {x}")
    return regularized_gamma_q(df / 2.0, x / 2.0)


def student_t_sf(x: float, df: float) -> float:
    """Upper-tail probability of Student's t distribution, P(T > x)."""
    if df <= 0:
        raise DistributionDomainError(f"degrees of freedom must be positive, got {df}")
    if x != x:
        raise DistributionDomainError("statistic is NaN")
    if x == 0.0:
        return 0.5
    w = df / (df + x * x)
    half_tail = 0.5 * regularized_beta(df / 2.0, 0.5, w)
    return half_tail if x > 0 else 1.0 - half_tail


def f_sf(x: float, df1: float, df2: float) -> float:
    """Upper-tail probability of the Fisher F distribution."""
    if df1 <= 0 or df2 <= 0:
        raise DistributionDomainError(f"degrees of freedom must be positive, got ({df1}, {df2})")
    if x < 0:
        raise DistributionDomainError(f"statistic must be non-negative, got {x}")
    if x == 0.0:
        return 1.0
    return regularized_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))


def normal_cdf(x: float) -> float:
    """Standard normal lower-tail probability."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def normal_sf(x: float) -> float:
    """Standard normal upper-tail probability."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def invert_sf(sf, p: float, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bisection inverse of a decreasing tail function; test tooling only.

    Finds x in [lo, hi] with sf(x) = p. The bracket must satisfy
    sf(lo) >= p >= sf(hi).
    """
    if not (0.0 < p < 1.0):
        raise DistributionDomainError(f"target probability must be in (0, 1), got {p}")
    flo, fhi = sf(lo), sf(hi)
    if not (flo >= p >= fhi):
        raise DistributionDomainError(
            f"bracket [{lo}, {hi}] does not enclose target {p} (sf values {flo}, {fhi})"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sf(mid) >= p:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * max(1.0, abs(lo)):
            break
    return 0.5 * (lo + hi)
