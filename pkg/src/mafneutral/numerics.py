"""Standard-normal and 1-df chi-square tail functions.

Everything is evaluated as an upper tail through the complementary error
function, so far-tail values keep their relative accuracy instead of being
lost in ``1 - cdf`` cancellation.
"""

import math

from .errors import DomainError

__all__ = [
    "std_normal_upper_tail",
    "std_normal_log_upper_tail",
    "std_normal_upper_quantile",
    "two_sided_p",
    "chi2_1df_upper_tail",
    "neg_log10_two_sided_p",
]

_SQRT1_2 = math.sqrt(0.5)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_LN10 = math.log(10.0)

# Above this point the continued fraction for the Mills ratio converges in a
# handful of terms and erfc is close to underflow anyway.
_CF_SWITCH = 8.0


def _check_finite(z):
    z = float(z)
    if not math.isfinite(z):
        raise DomainError(f"argument must be finite, got {z!r}")
    return z


def std_normal_upper_tail(z):
    """P(Z > z) for a standard normal Z.

    Relative error is a few ulps times z**2, i.e. below 1e-12 wherever the
    result is a normal double (z up to about 37.5); past that the value
    underflows gracefully. Use :func:`std_normal_log_upper_tail` when the
    logarithm is what you need.
    """
    z = _check_finite(z)
    return 0.5 * math.erfc(z * _SQRT1_2)


def _log_mills_ratio(z):
    # Lentz evaluation of 1/(z + 1/(z + 2/(z + 3/(z + ...)))), valid for z > 0.
    tiny = 1e-300
    f = z
    c = z
    d = 0.0
    for k in range(1, 500):
        d = z + k * d
        d = 1.0 / (d if d != 0.0 else tiny)
        c = z + k / c
        if c == 0.0:
            c = tiny
        step = c * d
        f *= step
        if abs(step - 1.0) < 1e-16:
            break
    return -math.log(f)


def std_normal_log_upper_tail(z):
    """Natural log of P(Z > z), finite for every finite z."""
    z = _check_finite(z)
    if z < _CF_SWITCH:
        return math.log(std_normal_upper_tail(z))
    return -0.5 * z * z - _LOG_SQRT_2PI + _log_mills_ratio(z)


def _initial_guess(a):
    # Rational approximation with absolute error < 5e-4 for 0 < a <= 0.5.
    t = math.sqrt(-2.0 * math.log(a))
    num = 2.515517 + t * (0.802853 + t * 0.010328)
    den = 1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))
    return t - num / den


def std_normal_upper_quantile(a):
    """The z with P(Z > z) = a, for 0 < a < 1.

    Safeguarded Newton iteration on log P(Z > z) inside a shrinking bracket.
    """
    a = float(a)
    if not (0.0 < a < 1.0):
        raise DomainError(f"tail probability must lie in (0, 1), got {a!r}")
    if a > 0.5:
        return -std_normal_upper_quantile(1.0 - a)
    if a == 0.5:
        return 0.0

    target = math.log(a)
    lo, hi = 0.0, 2.0
    while std_normal_log_upper_tail(hi) > target:
        lo, hi = hi, 2.0 * hi
    z = min(max(_initial_guess(a), lo), hi)

    for _ in range(100):
        log_tail = std_normal_log_upper_tail(z)
        g = log_tail - target
        if g > 0.0:
            lo = z
        else:
            hi = z
        if g == 0.0:
            break
        # d/dz log P(Z > z) = -phi(z) / P(Z > z)
        slope = -math.exp(-0.5 * z * z - _LOG_SQRT_2PI - log_tail)
        step = g / slope
        z_new = z - step
        if not (lo < z_new < hi):
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= 4e-16 * max(1.0, abs(z)):
            z = z_new
            break
        z = z_new
    return z


def two_sided_p(z):
    """2 * P(Z > |z|)."""
    return 2.0 * std_normal_upper_tail(abs(_check_finite(z)))


def neg_log10_two_sided_p(z):
    """-log10 of the two-sided normal p-value, accurate far past underflow."""
    z = abs(_check_finite(z))
    value = -(math.log(2.0) + std_normal_log_upper_tail(z)) / _LN10
    # z = 0 gives -0.0, which would print as "-0"
    return value if value > 0.0 else 0.0


def chi2_1df_upper_tail(x):
    """P(X > x) for X chi-square with one degree of freedom."""
    x = _check_finite(x)
    if x < 0.0:
        raise DomainError(f"chi-square value must be >= 0, got {x!r}")
    return 2.0 * std_normal_upper_tail(math.sqrt(x))
