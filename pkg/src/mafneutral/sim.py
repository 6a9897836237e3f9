"""Seeded Monte Carlo engine for type I error and power studies.

Replicates are grouped into fixed-size blocks. Every block draws from its own
Philox stream keyed by ``(seed, cell id, block index)``, so a study gives the
same counts whatever the number of workers or the order in which blocks
finish. Counts are summed, which makes the reduction order irrelevant.
"""

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .counts import GroupGenotypeCounts
from .errors import DomainError, ProtocolError
from .kernels import METHOD_CODES, count_rejections
from .model import marker_case_control_freqs, require_feasible
from .numerics import std_normal_upper_quantile
from .stats import Method

__all__ = [
    "BLOCK_SIZE",
    "SamplerSpec",
    "MethodSpec",
    "SimPlan",
    "Type1Row",
    "Type1Table",
    "PowerEstimate",
    "genotype_probs",
    "f_min",
    "stream",
    "cell_id",
    "draw_tables",
    "block_sizes",
    "sample_group",
    "sample_groups",
    "parse_methods",
    "alternative_sampler",
    "type1_study",
    "overall_type1",
    "empirical_power",
    "maf_grid",
]

BLOCK_SIZE = 1 << 16


def f_min(q):
    """Smallest inbreeding coefficient that keeps genotype probabilities >= 0."""
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -min(q / (1.0 - q), (1.0 - q) / q)


def genotype_probs(q, F=0.0):
    """(P(M1M1), P(M1M2), P(M2M2)) for allele frequency q and inbreeding F."""
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"allele frequency must lie in [0, 1], got {q!r}")
    lo = f_min(q)
    if not (lo - 1e-12 <= F <= 1.0):
        raise DomainError(f"inbreeding coefficient {F!r} outside [F_min={lo:.6g}, 1] for q={q!r}")
    pq = q * (1.0 - q)
    hom_minor = q * q + F * pq
    het = 2.0 * pq * (1.0 - F)
    hom_major = (1.0 - q) ** 2 + F * pq
    return max(hom_minor, 0.0), max(het, 0.0), max(hom_major, 0.0)


def stream(seed, cell, block):
    """Counter-based generator for one block of one simulation cell."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(cell), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def cell_id(*key):
    """Stable 63-bit identifier for a simulation cell (independent of PYTHONHASHSEED)."""
    text = "|".join(repr(float(k)) if isinstance(k, float) else repr(k) for k in key)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1


def sample_groups(q, n, F, rng, size):
    """Draw ``size`` independent groups of ``n`` genotypes; returns (n_hom_minor, n_het)."""
    p_hom, p_het, _ = genotype_probs(q, F)
    hom = rng.binomial(n, p_hom, size=size)
    rest = 1.0 - p_hom
    p_het_cond = min(p_het / rest, 1.0) if rest > 0.0 else 0.0
    het = rng.binomial(n - hom, p_het_cond)
    return hom, het


def sample_group(q, n, F, rng):
    """One multinomial draw of a group's genotype counts."""
    hom, het = sample_groups(q, n, F, rng, 1)
    return GroupGenotypeCounts(int(hom[0]), int(het[0]), int(n))


@dataclass(frozen=True)
class SamplerSpec:
    q1_cases: float
    q1_controls: float
    R: int
    S: int
    inbreeding_f: float = 0.0

    def __post_init__(self):
        if self.R < 1 or self.S < 1:
            raise DomainError("group sizes must be >= 1")
        genotype_probs(self.q1_cases, self.inbreeding_f)
        genotype_probs(self.q1_controls, self.inbreeding_f)

    @property
    def is_null(self):
        return self.q1_cases == self.q1_controls

    def key(self):
        return (self.q1_cases, self.q1_controls, self.R, self.S, self.inbreeding_f)


@dataclass(frozen=True)
class MethodSpec:
    """A statistic plus its tuning value (delta for W / W_HWD, score for CATT)."""

    method: Method
    delta: Optional[float] = None
    x1: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.method.uses_delta and not (self.delta is not None and 0.0 < self.delta < 1.0):
            raise DomainError(f"{self.method.value} needs delta in (0, 1), got {self.delta!r}")

    @property
    def param(self):
        if self.method.uses_delta:
            return self.delta
        if self.method is Method.CATT:
            return self.x1
        return 0.0

    @property
    def label(self):
        if self.method.uses_delta:
            return f"{self.method.value}@{self.delta:g}"
        if self.method is Method.CATT and self.x1 != 0.5:
            return f"CATT@{self.x1:g}"
        return self.method.value


def parse_methods(text, delta=None, x1=0.5):
    """Parse ``"W@0.05,T,CATT"``; a bare W / W_HWD takes ``delta``."""
    specs = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        name, _, value = item.partition("@")
        try:
            method = Method(name.strip().upper())
        except ValueError:
            raise DomainError(f"unknown method {name!r}") from None
        if method is Method.CATT:
            specs.append(MethodSpec(method, x1=float(value) if value else x1))
        elif method.uses_delta:
            specs.append(MethodSpec(method, delta=float(value) if value else delta))
        else:
            specs.append(MethodSpec(method))
    if not specs:
        raise DomainError("no methods given")
    return tuple(specs)


@dataclass(frozen=True)
class SimPlan:
    sampler: SamplerSpec
    replicates: int
    alpha: float
    methods: Tuple[MethodSpec, ...]
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        # 0.5 is allowed for median-calibration smoke runs
        if not (0.0 < self.alpha <= 0.5):
            raise DomainError(f"alpha must lie in (0, 0.5], got {self.alpha!r}")
        object.__setattr__(self, "methods", tuple(self.methods))


def _critical_values(methods, alpha):
    xi = std_normal_upper_quantile(alpha / 2.0)
    return np.array([xi * xi if m.method is Method.CHI2 else xi for m in methods])


def draw_tables(sampler, seed, cell, block, size):
    """Genotype counts (r0, r1, s0, s1) of ``size`` replicate tables from one block stream."""
    rng = stream(seed, cell, block)
    F = sampler.inbreeding_f
    r0, r1 = sample_groups(sampler.q1_cases, sampler.R, F, rng, size)
    s0, s1 = sample_groups(sampler.q1_controls, sampler.S, F, rng, size)
    return r0, r1, s0, s1


def block_sizes(replicates):
    n_blocks = -(-replicates // BLOCK_SIZE)
    return [min(BLOCK_SIZE, replicates - b * BLOCK_SIZE) for b in range(n_blocks)]


def _run_block(sampler, methods, crit, seed, cell, block, size):
    r0, r1, s0, s1 = draw_tables(sampler, seed, cell, block, size)
    codes = [METHOD_CODES[m.method] for m in methods]
    params = [m.param for m in methods]
    return count_rejections(r0, r1, sampler.R, s0, s1, sampler.S, codes, params, crit)


def _rejections(plan, workers=1):
    """Total (rejections, defined) per method over all replicates of the plan."""
    cell = cell_id(*plan.sampler.key())
    crit = _critical_values(plan.methods, plan.alpha)
    sizes = block_sizes(plan.replicates)
    n_blocks = len(sizes)

    def work(b):
        return _run_block(plan.sampler, plan.methods, crit, plan.seed, cell, b, sizes[b])

    if workers <= 1:
        results = [work(b) for b in range(n_blocks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, range(n_blocks)))
    rejects = np.zeros(len(plan.methods), dtype=np.int64)
    defined = np.zeros(len(plan.methods), dtype=np.int64)
    for rej, dfd in results:
        rejects += rej
        defined += dfd
    return rejects, defined


@dataclass(frozen=True)
class Type1Row:
    label: str
    method: Method
    delta: Optional[float]
    q1: float
    rejections: int
    reps: int
    alpha: float

    @property
    def rate(self):
        return self.rejections / self.reps

    @property
    def ratio(self):
        return self.rate / self.alpha

    @property
    def se(self):
        p = self.rate
        return math.sqrt(p * (1.0 - p) / self.reps) / self.alpha


@dataclass
class Type1Table:
    alpha: float
    rows: list = field(default_factory=list)

    def get(self, label, q1):
        for row in self.rows:
            if row.label == label and math.isclose(row.q1, q1, abs_tol=1e-12):
                return row
        raise KeyError((label, q1))

    def labels(self):
        seen = []
        for row in self.rows:
            if row.label not in seen:
                seen.append(row.label)
        return seen


def maf_grid(start=0.03, step=0.005, end=0.5):
    """Inclusive arithmetic grid, rounded so that 0.03:0.005:0.5 has 95 points."""
    if step <= 0 or end < start:
        raise DomainError(f"invalid grid {start}:{step}:{end}")
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def type1_study(plan, grid=None, workers=1):
    """Null rejection rates divided by alpha, one cell per MAF in ``grid``.

    The plan's sampler must be a null sampler; its frequency is replaced by
    each grid value in turn (sizes and inbreeding are kept).
    """
    if not plan.sampler.is_null:
        raise ProtocolError(
            f"type I error study needs a null sampler, got case/control frequencies "
            f"{plan.sampler.q1_cases} / {plan.sampler.q1_controls}"
        )
    grid = [plan.sampler.q1_cases] if grid is None else list(grid)
    table = Type1Table(plan.alpha)
    base = plan.sampler
    for q in grid:
        sampler = SamplerSpec(q, q, base.R, base.S, base.inbreeding_f)
        cell_plan = SimPlan(sampler, plan.replicates, plan.alpha, plan.methods, plan.seed)
        rejects, _ = _rejections(cell_plan, workers)
        for spec, rej in zip(plan.methods, rejects):
            table.rows.append(
                Type1Row(spec.label, spec.method, spec.delta, q, int(rej), plan.replicates, plan.alpha)
            )
    return table


def overall_type1(table, grid):
    """Unweighted mean of the per-MAF ratios for every method in the table."""
    out = {}
    for label in table.labels():
        ratios = []
        for q in grid:
            try:
                ratios.append(table.get(label, q).ratio)
            except KeyError:
                raise ProtocolError(f"table has no cell for {label} at q1={q}") from None
        if not ratios:
            raise ProtocolError("empty grid")
        out[label] = sum(ratios) / len(ratios)
    return out


@dataclass(frozen=True)
class PowerEstimate:
    label: str
    power: float
    se: float
    reps: int


def alternative_sampler(model, marker, R, S, inbreeding_f=0.0):
    """Sampler with the case/control marker frequencies implied by the model."""
    require_feasible(model, marker)
    f = marker_case_control_freqs(model, marker)
    return SamplerSpec(f.q1_cases, f.q1_controls, R, S, inbreeding_f)


def empirical_power(plan, workers=1):
    """Fraction of replicates rejected by each method, with its Monte Carlo SE."""
    rejects, _ = _rejections(plan, workers)
    out = []
    for spec, rej in zip(plan.methods, rejects):
        p = int(rej) / plan.replicates
        out.append(PowerEstimate(spec.label, p, math.sqrt(p * (1.0 - p) / plan.replicates), plan.replicates))
    return out
