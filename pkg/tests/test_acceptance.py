"""Acceptance criteria 1-9, one verdict line each (see the summary section of the run)."""

import math

import numpy as np
import pytest
from scipy import stats as sps

from mafneutral import kernels
from mafneutral.cli import main
from mafneutral.counts import CaseControlTable, FreqPair, GroupGenotypeCounts, StudyDesign, design_of, freq_pair
from mafneutral.model import (
    DiseaseModel,
    MarkerSpec,
    effect_B,
    feasible,
    marker_case_control_freqs,
    prevalence,
)
from mafneutral.power import (
    PowerQuery,
    asymptotic_power_catt,
    asymptotic_power_t,
    asymptotic_power_w,
    w_moments,
)
from mafneutral.sim import (
    SamplerSpec,
    SimPlan,
    alternative_sampler,
    empirical_power,
    parse_methods,
    type1_study,
)
from mafneutral.stats import Method, catt, p_value, t_statistic, w_statistic

REF = DiseaseModel.reference()
PI = prevalence(REF)
SEED = 2024


def test_criterion_1_prevalence(verdict):
    pi = prevalence(DiseaseModel(0.03, 0.10, 0.06, 0.02))
    verdict("1", abs(pi - 0.0224) <= 5e-5, f"prevalence = {pi:.10g}")


def random_tables(rng, n):
    R = rng.integers(1, 5001, n)
    S = rng.integers(1, 5001, n)
    r0 = rng.integers(0, R + 1)
    r1 = rng.integers(0, R - r0 + 1)
    s0 = rng.integers(0, S + 1)
    s1 = rng.integers(0, S - s0 + 1)
    return r0, r1, R, s0, s1, S


def random_feasible_pairs(rng, n):
    pairs = []
    while len(pairs) < n:
        m = DiseaseModel(rng.uniform(0.01, 0.99), *rng.uniform(0.0, 1.0, 3))
        pi = m.p1 ** 2 * m.pi11 + 2 * m.p1 * m.p2 * m.pi12 + m.p2 ** 2 * m.pi22
        if not 1e-3 < pi < 1 - 1e-3:
            continue
        k = MarkerSpec(rng.uniform(0.01, 0.99), rng.uniform(-1.0, 1.0))
        if feasible(m, k).ok:
            pairs.append((m, k))
    return pairs


def hwe_pooled_table(rng):
    """Random case/control split of a group whose pooled genotypes are in exact HWE."""
    while True:
        K = int(rng.integers(4, 200))
        j = int(rng.integers(1, K))
        hom, het, n = j * j, 2 * j * (K - j), K * K
        a = (int(rng.integers(0, hom + 1)), int(rng.integers(0, het + 1)), int(rng.integers(0, n - hom - het + 1)))
        R = sum(a)
        if 0 < R < n:
            cases = GroupGenotypeCounts(a[0], a[1], R)
            controls = GroupGenotypeCounts(hom - a[0], het - a[1], n - R)
            return CaseControlTable(cases, controls), j / K


def test_criterion_2_identities(verdict):
    rng = np.random.default_rng(SEED)

    # W = T / Q on 10^6 tables, in ten batches with their own delta
    worst_wq = 0.0
    checked = 0
    for _ in range(10):
        r0, r1, R, s0, s1, S = random_tables(rng, 100_000)
        delta = float(rng.uniform(0.001, 0.999))
        codes = [kernels.METHOD_CODES[Method.W], kernels.METHOD_CODES[Method.T]]
        w, t = kernels.batch_statistics(r0, r1, R, s0, s1, S, codes, [delta, 0.0])
        qa = (2 * r0 + r1) / (2 * R)
        qu = (2 * s0 + s1) / (2 * S)
        lam = R / (R + S)
        qd = delta * qa + (1 - delta) * qu
        with np.errstate(divide="ignore", invalid="ignore"):
            q_hat = np.sqrt(qd * (1 - qd) / (lam * qu * (1 - qu) + (1 - lam) * qa * (1 - qa)))
        ok = ~np.isnan(w) & ~np.isnan(t) & (t != 0)
        worst_wq = max(worst_wq, float(np.max(np.abs(w[ok] * q_hat[ok] / t[ok] - 1))))
        checked += int(ok.sum())

    # relation between allele frequency difference and LD, plus the mixture identity
    worst_eq3 = worst_mix = 0.0
    for m, k in random_feasible_pairs(rng, 10_000):
        f = marker_case_control_freqs(m, k)
        lhs = (f.q1_controls - f.q1_cases) / math.sqrt(k.q1 * k.q2)
        rhs = k.delta_ld * effect_B(m)
        worst_eq3 = max(worst_eq3, abs(lhs - rhs) / max(abs(rhs), 1e-2))
        pi = prevalence(m)
        worst_mix = max(worst_mix, abs(pi * f.q1_cases + (1 - pi) * f.q1_controls - k.q1))

    # T^2 / CATT(1/2)^2 = qP qP' / within-group variance when the pooled sample is in HWE
    worst_b = 0.0
    for _ in range(10_000):
        t, qp = hwe_pooled_table(rng)
        f, d = freq_pair(t), design_of(t)
        den = d.lam * f.q1_controls * (1 - f.q1_controls) + (1 - d.lam) * f.q1_cases * (1 - f.q1_cases)
        c = catt(t, 0.5)
        if den == 0.0 or c == 0.0:
            continue
        worst_b = max(worst_b, abs(t_statistic(f, d) ** 2 / (c * c * qp * (1 - qp) / den) - 1))

    ok = worst_wq <= 1e-10 and worst_eq3 <= 1e-12 and worst_mix <= 1e-14 and worst_b <= 1e-10
    verdict(
        "2",
        ok,
        f"W=T/Q max rel err {worst_wq:.1e} over {checked} tables; LD relation {worst_eq3:.1e}; "
        f"mixture {worst_mix:.1e}; T^2/CATT^2 {worst_b:.1e}",
    )


def test_criterion_3_mdd_hit(verdict):
    stat = w_statistic(FreqPair(0.0732, 0.0245), StudyDesign(2306, 1027), 0.15)
    p = p_value(stat, Method.W)
    verdict("3", p < 5e-8, f"W = {stat:.4f}, two-sided p = {p:.3e}")


def _query(q1, design=StudyDesign(10000, 10000)):
    return PowerQuery(REF, MarkerSpec(q1, 0.2), design, delta=PI, alpha=5e-8)


def _feasible_grid():
    grid = [round(0.05 + 0.01 * i, 2) for i in range(41)]
    return [q for q in grid if feasible(REF, MarkerSpec(q, 0.2)).ok], grid


def test_criterion_4a_w_dominates_t(verdict):
    grid, full = _feasible_grid()
    gaps = [asymptotic_power_w(_query(q)) - asymptotic_power_t(_query(q)) for q in grid]
    verdict(
        "4(a)",
        min(gaps) >= 0.0,
        f"min(power_w - power_t) = {min(gaps):.4f} over {len(grid)} feasible of {len(full)} q1 values in [0.05, 0.45]",
    )


def test_criterion_4b_ordering_near_half(verdict):
    # Delta_LD = 0.2 is infeasible above q1 ~ 0.436, so the largest feasible grid point stands in for 0.5
    q = max(q / 1000 for q in range(400, 501) if feasible(REF, MarkerSpec(q / 1000, 0.2)).ok)
    w, t = asymptotic_power_w(_query(q)), asymptotic_power_t(_query(q))
    verdict("4(b)", t >= w - 0.01, f"at q1 = {q}: power_w = {w:.4f}, power_t = {t:.4f}")


def test_criterion_4c_flatness(verdict):
    grid, _ = _feasible_grid()
    means = [w_moments(_query(q)).mean for q in grid]
    powers = [asymptotic_power_w(_query(q)) for q in grid]
    mean_spread = max(means) - min(means)
    variation = max(powers) - min(powers)
    ok = mean_spread <= 1e-12 * abs(means[0]) and variation <= 0.02
    verdict(
        "4(c)",
        ok,
        f"mu_W spread {mean_spread:.1e} (mu_W = {means[0]:.6f}); power_w range {min(powers):.4f}..{max(powers):.4f}, "
        f"variation {variation:.4f} (bound 0.02)",
    )


def test_criterion_4d_unbalanced_designs(verdict):
    a, b = StudyDesign(6000, 16000), StudyDesign(16000, 6000)
    ta, tb = asymptotic_power_t(_query(0.05, a)), asymptotic_power_t(_query(0.05, b))
    wa, wb = asymptotic_power_w(_query(0.05, a)), asymptotic_power_w(_query(0.05, b))
    ok = abs(ta - tb) > 0.02 and abs(wa - wb) < 0.02
    verdict("4(d)", ok, f"power_t {ta:.4f} vs {tb:.4f}; power_w {wa:.4f} vs {wb:.4f}")


@pytest.mark.slow
def test_criterion_5_asymptotic_vs_empirical(verdict):
    # judged on the second-order approximation; the first-order one is reported alongside
    methods = parse_methods(f"W@{PI},T,CATT", x1=0.5)
    power_fns = (asymptotic_power_w, asymptotic_power_t, asymptotic_power_catt)
    worst = {1: 0.0, 2: 0.0}
    cells = 0
    for q1 in (0.1, 0.25, 0.4):
        for dl in (0.1, 0.15, 0.2):
            marker = MarkerSpec(q1, dl)
            query = PowerQuery(REF, marker, StudyDesign(5000, 5000), delta=PI, alpha=1e-3)
            sampler = alternative_sampler(REF, marker, 5000, 5000)
            estimates = empirical_power(SimPlan(sampler, 100_000, 1e-3, methods, seed=SEED))
            for est, fn in zip(estimates, power_fns):
                for order in worst:
                    worst[order] = max(worst[order], abs(est.power - fn(query, order)) / est.se)
                cells += 1
    verdict(
        "5",
        worst[2] <= 3.0,
        f"max |asymptotic - empirical| = {worst[2]:.2f} SE over {cells} cells (first-order: {worst[1]:.2f} SE)",
    )


@pytest.mark.slow
def test_criterion_6_type1_pattern(verdict):
    grid = [0.03, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    plan = SimPlan(SamplerSpec(0.1, 0.1, 5000, 5000), 20_000_000, 1e-4, parse_methods("T,W@0.05,W@0.4"), seed=SEED)
    rows = {(r.label, r.q1): r for r in type1_study(plan, grid).rows}

    t_ok = all(0.9 <= rows["T", q].ratio <= 1.1 for q in grid if q >= 0.1)
    seq = [rows["W@0.05", q] for q in (0.03, 0.05, 0.1, 0.3)]
    mono = all(b.ratio <= a.ratio + 2 * math.hypot(a.se, b.se) for a, b in zip(seq, seq[1:]))
    low = rows["W@0.05", 0.03].ratio > 1.2
    w4_ok = all(0.85 <= rows["W@0.4", q].ratio <= 1.15 for q in grid)

    def fmt(label):
        return " ".join(f"{rows[label, q].ratio:.3f}" for q in grid)

    verdict(
        "6",
        t_ok and mono and low and w4_ok,
        f"q1 {grid}; T {fmt('T')}; W_0.05 {fmt('W@0.05')}; W_0.4 {fmt('W@0.4')} "
        f"(SE ~{rows['T', 0.3].se:.3f})",
    )


@pytest.mark.slow
def test_criterion_7a_hwd_null_calibration(verdict):
    methods = parse_methods(f"W_HWD@{PI},CATT", x1=0.5)
    grid = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5]
    ratios = []
    for F in (0.1, 0.2):
        plan = SimPlan(SamplerSpec(0.2, 0.2, 2000, 2000, F), 1_000_000, 0.05, methods, seed=SEED)
        ratios += [r.ratio for r in type1_study(plan, grid).rows]
    verdict("7(a)", all(0.97 <= r <= 1.03 for r in ratios), f"ratios in [{min(ratios):.4f}, {max(ratios):.4f}]")


@pytest.mark.slow
def test_criterion_7b_hwd_power(verdict):
    methods = parse_methods(f"W_HWD@{PI},CATT", x1=0.5)
    grid = (0.05, 0.1, 0.2, 0.3, 0.4)
    ok = True
    parts = []
    for F in (0.1, 0.2):
        w_est, worst_margin = [], math.inf
        for q1 in grid:
            sampler = alternative_sampler(REF, MarkerSpec(q1, 0.1), 4000, 4000, F)
            w, c = empirical_power(SimPlan(sampler, 200_000, 0.05, methods, seed=SEED))
            w_est.append(w)
            margin = (w.power - c.power) / math.hypot(w.se, c.se)
            worst_margin = min(worst_margin, margin)
        hi, lo = max(w_est, key=lambda e: e.power), min(w_est, key=lambda e: e.power)
        spread = hi.power - lo.power
        ok &= worst_margin >= -2.0 and spread <= 0.05 + 2 * math.hypot(hi.se, lo.se)
        parts.append(f"F={F}: min (W_HWD - CATT)/SE = {worst_margin:.1f}, W_HWD spread {spread:.4f}")
    verdict("7(b)", ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_8_null_pvalues_uniform(verdict, tmp_path):
    sim = str(tmp_path / "null.tsv")
    args = ["simulate", "--q1", "0.2", "--delta-ld", "0", "--cases", "2000", "--controls", "2000"]
    assert main(args + ["--markers", "10000", "--seed", str(SEED), "--out", sim]) == 0
    res = tmp_path / "null.csv"
    assert main(["assoc", sim, "--prevalence", str(PI), "--methods", "W,T", "--out", str(res)]) == 0
    data = np.genfromtxt(res, delimiter=",", names=True, dtype=None, encoding="utf-8")
    ps = {label: sps.kstest(data[name].astype(float), "uniform").pvalue for label, name in (("W", data.dtype.names[6]), ("T", "p_T"))}
    verdict("8", min(ps.values()) > 0.01, f"KS p-values W {ps['W']:.3f}, T {ps['T']:.3f} over 10000 markers")


@pytest.mark.slow
def test_criterion_9_determinism(verdict, tmp_path):
    runs = {
        "type1": ["type1", "--methods", "W@0.05,T,CATT", "--alpha", "1e-3", "--reps", "150000", "--grid", "0.05:0.15:0.5"],
        "simulate": ["simulate", "--q1", "0.1", "--delta-ld", "0.2", "--markers", "140000"],
    }
    same = {}
    for name, args in runs.items():
        outputs = []
        for i, workers in enumerate((1, 8, 1, 8)):
            path = tmp_path / f"{name}{i}.out"
            assert main(args + ["--seed", "17", "--workers", str(workers), "--out", str(path)]) == 0
            outputs.append(path.read_bytes())
        same[name] = len(set(outputs)) == 1
    verdict("9", all(same.values()), ", ".join(f"{k} byte-identical across 1/8 workers: {v}" for k, v in same.items()))
