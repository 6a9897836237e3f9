"""Single-causal-variant disease model and the marker frequencies it implies.

The causal variant has risk allele A1 with population frequency ``p1`` and
genotype-specific case fractions ``pi11``, ``pi12``, ``pi22``. A marker with
population frequency ``q1`` is tied to the variant through the standardized
LD coefficient ``delta_ld = D11 / sqrt(p1 p2 q1 q2)``. Hardy-Weinberg
proportions are assumed at the variant.
"""

import math
from dataclasses import dataclass
from typing import List

from .errors import DomainError, InfeasibleModel

__all__ = [
    "DiseaseModel",
    "MarkerSpec",
    "PopulationFreqs",
    "FeasibilityReport",
    "prevalence",
    "marker_case_control_freqs",
    "variant_case_control_freqs",
    "effect_B",
    "q_factor",
    "lambda0",
    "feasible",
    "require_feasible",
    "REFERENCE_MODEL_PARAMS",
]

REFERENCE_MODEL_PARAMS = dict(p1=0.03, pi11=0.10, pi12=0.06, pi22=0.02)


@dataclass(frozen=True)
class DiseaseModel:
    p1: float
    pi11: float
    pi12: float
    pi22: float

    def __post_init__(self):
        if not (0.0 < self.p1 < 1.0):
            raise DomainError(f"p1 must lie in (0, 1), got {self.p1!r}")
        for name in ("pi11", "pi12", "pi22"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")

    @property
    def p2(self):
        return 1.0 - self.p1

    @classmethod
    def reference(cls):
        """p1 = 0.03 with case fractions 0.10 / 0.06 / 0.02 (prevalence 0.0224)."""
        return cls(**REFERENCE_MODEL_PARAMS)


@dataclass(frozen=True)
class MarkerSpec:
    q1: float
    delta_ld: float

    def __post_init__(self):
        if not (0.0 < self.q1 < 1.0):
            raise DomainError(f"q1 must lie in (0, 1), got {self.q1!r}")
        if not (-1.0 <= self.delta_ld <= 1.0):
            raise DomainError(f"delta_ld must lie in [-1, 1], got {self.delta_ld!r}")

    @property
    def q2(self):
        return 1.0 - self.q1


@dataclass(frozen=True)
class PopulationFreqs:
    """Population frequencies of M1 among cases and among controls."""

    q1_cases: float
    q1_controls: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: List[str]

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def prevalence(m):
    """Population fraction of cases under HWE at the causal variant."""
    p1, p2 = m.p1, m.p2
    pi = p1 * p1 * m.pi11 + 2.0 * p1 * p2 * m.pi12 + p2 * p2 * m.pi22
    if not (0.0 < pi < 1.0):
        raise InfeasibleModel(f"degenerate model: prevalence is {pi!r}")
    return pi


def _case_control_shift(m, pi):
    # per-unit-D11 shifts of the M1 frequency among cases and among controls
    p1, p2 = m.p1, m.p2
    case = (p1 * (m.pi11 - m.pi12) - p2 * (m.pi22 - m.pi12)) / pi
    ctrl = (p1 * (m.pi12 - m.pi11) - p2 * (m.pi12 - m.pi22)) / (1.0 - pi)
    return case, ctrl


def marker_case_control_freqs(m, k):
    """Marker M1 frequencies among cases and controls.

    Raises :class:`InfeasibleModel` when a resulting frequency leaves (0, 1).
    The LD bound itself is checked by :func:`feasible`.
    """
    pi = prevalence(m)
    d11 = k.delta_ld * math.sqrt(m.p1 * m.p2 * k.q1 * k.q2)
    case, ctrl = _case_control_shift(m, pi)
    qa = k.q1 + d11 * case
    qu = k.q1 + d11 * ctrl
    bad = []
    if not (0.0 < qa < 1.0):
        bad.append(f"case frequency {qa!r} outside (0, 1)")
    if not (0.0 < qu < 1.0):
        bad.append(f"control frequency {qu!r} outside (0, 1)")
    if bad:
        raise InfeasibleModel(bad)
    return PopulationFreqs(qa, qu)


def variant_case_control_freqs(m):
    """Risk-allele frequencies among cases and controls at the causal variant."""
    return marker_case_control_freqs(m, MarkerSpec(m.p1, 1.0))


def effect_B(m):
    """(p1U - p1A) / sqrt(p1 p2), common to every marker in LD with the variant."""
    pi = prevalence(m)
    p1, p2 = m.p1, m.p2
    diff = p1 * p2 * (p1 * (m.pi12 - m.pi11) + p2 * (m.pi22 - m.pi12)) / (pi * (1.0 - pi))
    return diff / math.sqrt(p1 * p2)


def q_factor(freqs, q1, lam):
    """Limit of the W/T denominator ratio for population frequencies."""
    qa, qu = freqs.q1_cases, freqs.q1_controls
    if not (0.0 < lam < 1.0):
        raise DomainError(f"lambda must lie in (0, 1), got {lam!r}")
    for v in (qa, qu, q1):
        if not (0.0 < v < 1.0):
            raise DomainError(f"frequency {v!r} outside (0, 1)")
    return math.sqrt(q1 * (1.0 - q1) / (lam * qu * (1.0 - qu) + (1.0 - lam) * qa * (1.0 - qa)))


def lambda0(freqs, q1):
    """Case fraction at which the W and T denominators coincide (Q = 1)."""
    va = freqs.q1_cases * (1.0 - freqs.q1_cases)
    vu = freqs.q1_controls * (1.0 - freqs.q1_controls)
    den = va - vu
    if den == 0.0:
        raise DomainError("threshold undefined: case and control variances are equal")
    return (va - q1 * (1.0 - q1)) / den


def feasible(m, k):
    """Check every constraint a (model, marker) pair must satisfy."""
    violations = []
    try:
        pi = prevalence(m)
    except InfeasibleModel as exc:
        return FeasibilityReport(exc.violations)
    p1, p2, q1, q2 = m.p1, m.p2, k.q1, k.q2
    d11 = k.delta_ld * math.sqrt(p1 * p2 * q1 * q2)
    lower = max(-p1 * q1, -p2 * q2)
    upper = min(p1 * q2, p2 * q1)
    # tiny slack so that exact boundary cases (marker == variant) pass
    eps = 1e-15
    if d11 > upper + eps:
        violations.append(f"D11={d11:.6g} exceeds min(p1*q2, p2*q1)={upper:.6g}")
    if d11 < lower - eps:
        violations.append(f"D11={d11:.6g} below max(-p1*q1, -p2*q2)={lower:.6g}")
    case, ctrl = _case_control_shift(m, pi)
    qa = q1 + d11 * case
    qu = q1 + d11 * ctrl
    if not (0.0 < qa < 1.0):
        violations.append(f"case frequency {qa:.6g} outside (0, 1)")
    if not (0.0 < qu < 1.0):
        violations.append(f"control frequency {qu:.6g} outside (0, 1)")
    return FeasibilityReport(violations)


def require_feasible(m, k):
    report = feasible(m, k)
    if not report.ok:
        raise InfeasibleModel(report.violations)
    return report
