"""MAF-neutral allele-based association testing for case-control studies."""

from .counts import (
    CaseControlTable,
    FreqPair,
    GroupGenotypeCounts,
    StudyDesign,
    allele_freq,
    design_of,
    hom_minor_freq,
    pooled_freq,
    prevalence_weighted_freq,
)
from .errors import (
    DomainError,
    InfeasibleModel,
    ProtocolError,
    UndefinedEstimate,
    UndefinedStatistic,
)
from .model import DiseaseModel, MarkerSpec, PopulationFreqs
from .stats import Method, TestResult, run_test

__version__ = "0.1.0"
