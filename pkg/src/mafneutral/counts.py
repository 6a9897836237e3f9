"""Genotype count containers and the allele-frequency estimators built on them.

Counts are stored as integers and frequencies are computed on demand. A
monomorphic group is a perfectly valid container; problems are only raised
where a statistic would divide by zero.
"""

from dataclasses import dataclass

from .errors import DomainError, UndefinedEstimate

__all__ = [
    "GroupGenotypeCounts",
    "CaseControlTable",
    "StudyDesign",
    "FreqPair",
    "allele_freq",
    "hom_minor_freq",
    "prevalence_weighted_freq",
    "pooled_freq",
    "design_of",
    "freq_pair",
]


@dataclass(frozen=True)
class GroupGenotypeCounts:
    """Genotype counts for one group.

    ``n_hom_minor`` counts (M1, M1) individuals, ``n_het`` counts (M1, M2)
    and ``n_total`` is the group size.
    """

    n_hom_minor: int
    n_het: int
    n_total: int

    def __post_init__(self):
        for name in ("n_hom_minor", "n_het", "n_total"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n_hom_minor + self.n_het > self.n_total:
            raise DomainError(
                f"genotype counts {self.n_hom_minor}+{self.n_het} exceed group size {self.n_total}"
            )

    @property
    def n_hom_major(self):
        return self.n_total - self.n_hom_minor - self.n_het

    @property
    def minor_allele_count(self):
        return 2 * self.n_hom_minor + self.n_het


@dataclass(frozen=True)
class CaseControlTable:
    cases: GroupGenotypeCounts
    controls: GroupGenotypeCounts

    @classmethod
    def from_counts(cls, r0, r1, r, s0, s1, s):
        """Build a table from the usual (R0, R1, R, S0, S1, S) layout."""
        return cls(GroupGenotypeCounts(r0, r1, r), GroupGenotypeCounts(s0, s1, s))


@dataclass(frozen=True)
class StudyDesign:
    """Sample-level constants: R cases, S controls and the derived N, lambda, m."""

    R: int
    S: int

    def __post_init__(self):
        if self.R < 1 or self.S < 1:
            raise DomainError(f"both groups need at least one individual (R={self.R}, S={self.S})")

    @property
    def N(self):
        return self.R + self.S

    @property
    def lam(self):
        return self.R / self.N

    @property
    def m(self):
        # 2 N lambda (1 - lambda) == 2 R S / N
        return 2.0 * self.R * self.S / self.N


@dataclass(frozen=True)
class FreqPair:
    """Sample frequencies of M1 among cases and among controls."""

    q1_cases: float
    q1_controls: float

    def __post_init__(self):
        for name in ("q1_cases", "q1_controls"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {value!r}")


def allele_freq(g):
    """Frequency of M1 in one group, (2 n_hom_minor + n_het) / (2 n_total)."""
    if g.n_total == 0:
        raise UndefinedEstimate("allele frequency of an empty group")
    return (2 * g.n_hom_minor + g.n_het) / (2 * g.n_total)


def hom_minor_freq(g):
    """Frequency of the (M1, M1) genotype in one group."""
    if g.n_total == 0:
        raise UndefinedEstimate("genotype frequency of an empty group")
    return g.n_hom_minor / g.n_total


def prevalence_weighted_freq(f, delta):
    """delta * q1_cases + (1 - delta) * q1_controls."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    return delta * f.q1_cases + (1.0 - delta) * f.q1_controls


def pooled_freq(t):
    """Frequency of M1 in the cases and controls taken together."""
    n = t.cases.n_total + t.controls.n_total
    if n == 0:
        raise UndefinedEstimate("pooled frequency of an empty table")
    return (t.cases.minor_allele_count + t.controls.minor_allele_count) / (2 * n)


def design_of(t):
    return StudyDesign(t.cases.n_total, t.controls.n_total)


def freq_pair(t):
    return FreqPair(allele_freq(t.cases), allele_freq(t.controls))
