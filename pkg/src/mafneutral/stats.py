"""Allele-based case-control test statistics and their p-values.

All normal-based statistics are signed so that they are positive when the
controls carry more copies of M1 than the cases. The trend test is oriented
the same way.
"""

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .counts import allele_freq, design_of, freq_pair, hom_minor_freq
from .errors import DomainError, UndefinedStatistic
from .numerics import chi2_1df_upper_tail, neg_log10_two_sided_p, two_sided_p

__all__ = [
    "Method",
    "TestResult",
    "w_statistic",
    "t_statistic",
    "q_hat_factor",
    "chi2_allelic",
    "catt",
    "w_hwd",
    "t_hwd",
    "p_value",
    "neg_log10_p",
    "run_test",
]


class Method(str, enum.Enum):
    W = "W"
    T = "T"
    CHI2 = "CHI2"
    CATT = "CATT"
    W_HWD = "W_HWD"
    T_HWD = "T_HWD"

    @property
    def uses_delta(self):
        return self in (Method.W, Method.W_HWD)


@dataclass(frozen=True)
class TestResult:
    """Outcome of one test on one table.

    When the statistic is undefined, ``statistic`` and ``p_value`` are None,
    ``defined`` is False and ``reason`` holds the code.
    """

    method: Method
    statistic: Optional[float]
    p_value: Optional[float]
    defined: bool = True
    reason: Optional[str] = None

    __test__ = False  # keep pytest from collecting this class


def _check_delta(delta):
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")


def _within_group_variance(f, d):
    qa, qu = f.q1_cases, f.q1_controls
    lam = d.lam
    return lam * qu * (1.0 - qu) + (1.0 - lam) * qa * (1.0 - qa)


def w_statistic(f, d, delta):
    """sqrt(m) (q1U - q1A) / sqrt(q1d q2d) with q1d the delta-weighted mixture."""
    _check_delta(delta)
    qd = delta * f.q1_cases + (1.0 - delta) * f.q1_controls
    var = qd * (1.0 - qd)
    if not var > 0.0:
        raise UndefinedStatistic("monomorphic", f"delta-mixture frequency is {qd!r}")
    return math.sqrt(d.m) * (f.q1_controls - f.q1_cases) / math.sqrt(var)


def t_statistic(f, d):
    var = _within_group_variance(f, d)
    if not var > 0.0:
        raise UndefinedStatistic("monomorphic", "both groups are monomorphic")
    return math.sqrt(d.m) * (f.q1_controls - f.q1_cases) / math.sqrt(var)


def q_hat_factor(f, d, delta):
    """Ratio of the W and T denominators, so that W = T / Q."""
    _check_delta(delta)
    qd = delta * f.q1_cases + (1.0 - delta) * f.q1_controls
    num = qd * (1.0 - qd)
    den = _within_group_variance(f, d)
    if not (num > 0.0 and den > 0.0):
        raise UndefinedStatistic("monomorphic")
    return math.sqrt(num / den)


def chi2_allelic(t):
    """Pearson chi-square on the 2x2 table of allele counts, no continuity correction."""
    a = t.cases.minor_allele_count
    b = 2 * t.cases.n_total - a
    c = t.controls.minor_allele_count
    d = 2 * t.controls.n_total - c
    n = a + b + c + d
    margins = (a + b) * (c + d) * (a + c) * (b + d)
    if margins == 0:
        raise UndefinedStatistic("monomorphic", "an allele-count margin is zero")
    # integer numerator keeps identical tables at exactly 0
    return n * (a * d - b * c) ** 2 / margins


def catt(t, x1=0.5):
    """Cochran-Armitage trend statistic with genotype scores (0, x1, 1).

    Scores index the number of M1 copies. U is taken as controls minus cases,
    the reverse of the textbook orientation, so the statistic agrees in sign with T.
    """
    if not (0.0 <= x1 <= 1.0):
        raise DomainError(f"score x1 must lie in [0, 1], got {x1!r}")
    R, S = t.cases.n_total, t.controls.n_total
    if R < 1 or S < 1:
        raise DomainError("both groups must be non-empty")
    N = R + S
    case_counts = (t.cases.n_hom_major, t.cases.n_het, t.cases.n_hom_minor)
    ctrl_counts = (t.controls.n_hom_major, t.controls.n_het, t.controls.n_hom_minor)
    scores = (0.0, x1, 1.0)
    u = 0.0
    sx = 0.0
    sxx = 0.0
    for x, ri, si in zip(scores, case_counts, ctrl_counts):
        u += x * (R * si - S * ri)
        n_i = ri + si
        sx += x * n_i
        sxx += x * x * n_i
    # large-sample permutation variance of U (N - 1 replaced by N)
    var = R * S * (sxx - sx * sx / N)
    if not var > 0.0:
        raise UndefinedStatistic("monomorphic", "trend statistic has zero variance")
    return u / math.sqrt(var)


def w_hwd(t, d, delta):
    """W with the variance corrected for Hardy-Weinberg disequilibrium."""
    _check_delta(delta)
    qa, qu = allele_freq(t.cases), allele_freq(t.controls)
    qaa, quu = hom_minor_freq(t.cases), hom_minor_freq(t.controls)
    qd = delta * qa + (1.0 - delta) * qu
    q11d = delta * qaa + (1.0 - delta) * quu
    var = qd * (1.0 - qd) + (q11d - qd * qd)
    if not var > 0.0:
        reason = "monomorphic" if qd in (0.0, 1.0) else "nonpositive_variance"
        raise UndefinedStatistic(reason, f"HWD-adjusted variance is {var!r}")
    return math.sqrt(d.m) * (qu - qa) / math.sqrt(var)


def t_hwd(t, d):
    qa, qu = allele_freq(t.cases), allele_freq(t.controls)
    va = qa * (1.0 - qa) + hom_minor_freq(t.cases) - qa * qa
    vu = qu * (1.0 - qu) + hom_minor_freq(t.controls) - qu * qu
    lam = d.lam
    var = lam * vu + (1.0 - lam) * va
    if not var > 0.0:
        reason = "monomorphic" if (qa in (0.0, 1.0) and qu in (0.0, 1.0)) else "nonpositive_variance"
        raise UndefinedStatistic(reason, f"HWD-adjusted variance is {var!r}")
    return math.sqrt(d.m) * (qu - qa) / math.sqrt(var)


def p_value(statistic, method):
    """Two-sided normal p-value, or the 1-df chi-square tail for CHI2."""
    if statistic is None:
        return None
    if Method(method) is Method.CHI2:
        return chi2_1df_upper_tail(statistic)
    return two_sided_p(statistic)


def neg_log10_p(statistic, method):
    """-log10 of :func:`p_value`, finite even when p underflows."""
    if statistic is None:
        return None
    if Method(method) is Method.CHI2:
        return neg_log10_two_sided_p(math.sqrt(statistic))
    return neg_log10_two_sided_p(statistic)


def run_test(t, method, delta=None, x1=0.5):
    """Evaluate ``method`` on a table, returning a typed NA instead of raising."""
    method = Method(method)
    if method.uses_delta and delta is None:
        raise DomainError(f"{method.value} needs a prevalence value delta")
    if t.cases.n_total == 0 or t.controls.n_total == 0:
        return TestResult(method, None, None, defined=False, reason="empty_group")
    try:
        d = design_of(t)
        if method is Method.W:
            stat = w_statistic(freq_pair(t), d, delta)
        elif method is Method.T:
            stat = t_statistic(freq_pair(t), d)
        elif method is Method.CHI2:
            stat = chi2_allelic(t)
        elif method is Method.CATT:
            stat = catt(t, x1)
        elif method is Method.W_HWD:
            stat = w_hwd(t, d, delta)
        else:
            stat = t_hwd(t, d)
    except UndefinedStatistic as exc:
        return TestResult(method, None, None, defined=False, reason=exc.reason)
    return TestResult(method, stat, p_value(stat, method))
