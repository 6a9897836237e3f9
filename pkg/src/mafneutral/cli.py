"""Command-line interface: per-marker testing, power curves, type I error studies
and synthetic marker files.

Every option can also be given in a key-value config file passed with
``--config``. Keys are the long option names without the leading dashes
(``prevalence = 0.15``, ``maf-min = 0.02``); options on the command line win.

Exit codes: 0 success, 1 usage or configuration error, 2 bad input data,
3 infeasible disease model.
"""

import argparse
import configparser
import csv
import json
import logging
import math
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

from . import __version__
from .counts import CaseControlTable, StudyDesign, allele_freq
from .errors import DomainError, InfeasibleModel, ProtocolError
from .model import DiseaseModel, MarkerSpec, effect_B, marker_case_control_freqs, prevalence, require_feasible
from .power import SWEEP_AXES, PowerQuery, power_curve
from .sim import (
    SamplerSpec,
    SimPlan,
    alternative_sampler,
    block_sizes,
    cell_id,
    draw_tables,
    maf_grid,
    overall_type1,
    parse_methods,
    type1_study,
)
from .stats import neg_log10_p, run_test

log = logging.getLogger("mafneutral")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2, 3

INPUT_HEADER = ("marker_id", "chrom", "pos", "R0", "R1", "R", "S0", "S1", "S")
NA = "NA"


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# option name -> (converter, built-in default); None marks "no default"
_OPTIONS = {
    "prevalence": (str, None),
    "alpha": (float, None),
    "methods": (str, None),
    "catt-score": (float, 0.5),
    "maf-min": (float, 0.0),
    "seed": (int, 0),
    "reps": (int, 100000),
    "cases": (int, None),
    "controls": (int, None),
    "inbreeding": (float, 0.0),
    "grid": (str, None),
    "out": (str, None),
    "workers": (int, 1),
    "skip-file": (str, None),
    "model": (str, None),
    "q1": (float, None),
    "delta-ld": (float, None),
    "sweep": (str, "q1"),
    "order": (int, 1),
    "markers": (int, 1000),
}


def _add(p, name, help_text):
    p.add_argument("--" + name, dest=name.replace("-", "_"), default=None, help=help_text)


def build_parser():
    parser = _Parser(prog="mafneutral", description="MAF-neutral allele-based association testing.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{assoc,power,type1,simulate}")
    sub.required = True

    def common(p):
        p.add_argument("--config", help="key-value config file; flags override its values")
        _add(p, "out", "output path (default: standard output)")

    a = sub.add_parser("assoc", help="test every marker of a count file")
    a.add_argument("input", help="marker count TSV ('-' for standard input)")
    common(a)
    _add(a, "prevalence", "prevalence estimate used by W and W_HWD")
    _add(a, "alpha", "significance threshold for the sig_ columns (default 5e-8)")
    _add(a, "methods", "comma list from W,T,CHI2,CATT,W_HWD,T_HWD; W@0.1 pins delta (default W,T)")
    _add(a, "catt-score", "heterozygote score of the trend test (default 0.5)")
    _add(a, "maf-min", "skip markers whose case plus control M1 frequency is below this (default 0)")
    _add(a, "skip-file", "where skipped markers are listed (default <out>.skipped.tsv)")

    p = sub.add_parser("power", help="asymptotic power curves")
    common(p)
    _add(p, "model", "p1,pi11,pi12,pi22 (default 0.03,0.10,0.06,0.02)")
    _add(p, "q1", "marker M1 frequency (default 0.1)")
    _add(p, "delta-ld", "LD coefficient between marker and variant (default 0.2)")
    _add(p, "sweep", f"axis to sweep: {', '.join(SWEEP_AXES)} (default q1)")
    _add(p, "grid", "sweep grid start:step:end")
    _add(p, "prevalence", "comma list of extra delta values for W; adds power_w_<delta> columns")
    _add(p, "alpha", "two-sided level (default 5e-8)")
    _add(p, "cases", "number of cases (default 10000)")
    _add(p, "controls", "number of controls (default 10000)")
    _add(p, "order", "1: normal approximation, 2: with skewness correction (default 1)")

    t = sub.add_parser("type1", help="simulated null rejection rates over a MAF grid")
    common(t)
    _add(t, "methods", "comma list, e.g. W@0.05,T,CATT (default W@0.05,T)")
    _add(t, "prevalence", "delta for bare W / W_HWD entries")
    _add(t, "catt-score", "heterozygote score of the trend test (default 0.5)")
    _add(t, "alpha", "two-sided level (default 1e-4)")
    _add(t, "reps", "replicates per grid point (default 100000)")
    _add(t, "cases", "number of cases (default 5000)")
    _add(t, "controls", "number of controls (default 5000)")
    _add(t, "inbreeding", "Wright's F within each group (default 0)")
    _add(t, "grid", "MAF grid start:step:end (default 0.03:0.005:0.5)")
    _add(t, "seed", "random seed (default 0)")
    _add(t, "workers", "worker threads; results do not depend on it (default 1)")

    s = sub.add_parser("simulate", help="write a synthetic marker count file")
    common(s)
    _add(s, "model", "p1,pi11,pi12,pi22 (default 0.03,0.10,0.06,0.02)")
    _add(s, "q1", "marker M1 frequency (default 0.2)")
    _add(s, "delta-ld", "LD coefficient between marker and variant (default 0)")
    _add(s, "cases", "number of cases (default 2000)")
    _add(s, "controls", "number of controls (default 2000)")
    _add(s, "inbreeding", "Wright's F within each group (default 0)")
    _add(s, "markers", "number of markers to draw (default 1000)")
    _add(s, "seed", "random seed (default 0)")
    _add(s, "workers", "worker threads; results do not depend on it (default 1)")
    return parser


def _read_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    cp = configparser.ConfigParser(interpolation=None)
    try:
        if not text.lstrip().startswith("["):
            text = "[mafneutral]\n" + text
        cp.read_string(text, source=path)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    values = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            values[key.strip().lower().replace("_", "-")] = value.strip()
    unknown = sorted(set(values) - set(_OPTIONS))
    if unknown:
        raise UsageError(f"unknown config keys in {path}: {', '.join(unknown)}")
    return values


def _resolve(args, defaults):
    """Merge flags over the config file over ``defaults``; returns a dict keyed by option name."""
    file_values = _read_config(args.config) if args.config else {}
    out = {}
    for name, (conv, base) in _OPTIONS.items():
        attr = name.replace("-", "_")
        if not hasattr(args, attr):
            continue
        raw = getattr(args, attr)
        if raw is None:
            raw = file_values.get(name)
        if raw is None:
            out[name] = defaults.get(name, base)
            continue
        try:
            out[name] = conv(raw)
        except ValueError:
            raise UsageError(f"--{name}: cannot parse {raw!r}") from None
    return out


def _parse_grid(text):
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) == 3:
            start, step, end = (float(x) for x in parts)
            return maf_grid(start, step, end)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"--grid: {exc}") from None
    raise UsageError(f"--grid expects start:step:end, got {text!r}")


def _parse_model(text):
    if text is None:
        return DiseaseModel.reference()
    try:
        values = [float(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"--model: cannot parse {text!r}") from None
    if len(values) != 4:
        raise UsageError("--model expects p1,pi11,pi12,pi22")
    return DiseaseModel(*values)


def _float_list(text, name):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--{name}: cannot parse {text!r}") from None


def _fmt(x):
    return NA if x is None else f"{x:.10g}"


@contextmanager
def _output(path, newline=""):
    """Text sink that only appears at ``path`` once the block completes."""
    if path is None or path == "-":
        yield sys.stdout
        sys.stdout.flush()
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".mafneutral-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


# assoc

def _records(lines):
    """Parse marker rows lazily; yields (line_no, id, chrom, pos, table)."""
    header = None
    seen = set()
    for line_no, line in enumerate(lines, 1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if header is None:
            header = tuple(f.strip() for f in fields)
            if header != INPUT_HEADER:
                raise InputError(f"line {line_no}: expected header {' '.join(INPUT_HEADER)}")
            continue
        if len(fields) != len(INPUT_HEADER):
            raise InputError(f"line {line_no}: expected {len(INPUT_HEADER)} fields, got {len(fields)}")
        marker_id, chrom = fields[0].strip(), fields[1].strip()
        if not marker_id:
            raise InputError(f"line {line_no}: empty marker_id")
        if marker_id in seen:
            raise InputError(f"line {line_no}: duplicate marker_id {marker_id!r}")
        seen.add(marker_id)
        try:
            pos = int(fields[2])
            counts = [int(f) for f in fields[3:]]
            table = CaseControlTable.from_counts(*counts)
        except (ValueError, DomainError) as exc:
            raise InputError(f"line {line_no}: {exc}") from None
        yield line_no, marker_id, chrom, pos, table
    if header is None:
        raise InputError("input has no header line")


def _freq_or_none(g):
    return allele_freq(g) if g.n_total > 0 else None


def cmd_assoc(opts, input_path):
    alpha = opts["alpha"] if opts["alpha"] is not None else 5e-8
    if not (0.0 < alpha < 1.0):
        raise UsageError("--alpha must lie in (0, 1)")
    delta = None
    if opts["prevalence"] is not None:
        delta = _float_list(opts["prevalence"], "prevalence")
        if len(delta) != 1:
            raise UsageError("assoc takes a single --prevalence value")
        delta = delta[0]
    try:
        methods = parse_methods(opts["methods"] or "W,T", delta=delta, x1=opts["catt-score"])
    except DomainError as exc:
        raise UsageError(f"--methods: {exc}") from None
    maf_min = opts["maf-min"]
    skip_path = opts["skip-file"]
    if skip_path is None and opts["out"] not in (None, "-"):
        skip_path = opts["out"] + ".skipped.tsv"

    header = ["marker_id", "chrom", "pos", "q1_cases", "q1_controls"]
    for m in methods:
        header += [f"stat_{m.label}", f"p_{m.label}", f"neglog10p_{m.label}", f"sig_{m.label}"]
    header.append("na_reason")

    src = sys.stdin if input_path == "-" else None
    try:
        fh_in = src or open(input_path, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {input_path}: {exc}") from None
    n_out = n_skip = 0
    skip_sink = _output(skip_path, newline="\n") if skip_path else _null()
    with fh_in, _output(opts["out"]) as out, skip_sink as skip:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        if skip is not None:
            skip.write("marker_id\tchrom\tpos\treason\n")
        for _, marker_id, chrom, pos, table in _records(fh_in):
            qa, qu = _freq_or_none(table.cases), _freq_or_none(table.controls)
            if maf_min > 0.0 and (qa is None or qu is None or qa + qu < maf_min):
                n_skip += 1
                if skip is not None:
                    skip.write(f"{marker_id}\t{chrom}\t{pos}\tmaf_below_{maf_min:g}\n")
                continue
            row = [marker_id, chrom, pos, _fmt(qa), _fmt(qu)]
            reasons = []
            for m in methods:
                res = run_test(table, m.method, delta=m.delta, x1=m.x1)
                if not res.defined:
                    row += [NA, NA, NA, NA]
                    reasons.append(f"{m.label}:{res.reason}")
                    continue
                nlp = neg_log10_p(res.statistic, m.method)
                row += [_fmt(res.statistic), _fmt(res.p_value), f"{nlp:.6f}", int(nlp > -math.log10(alpha))]
            row.append(";".join(reasons))
            writer.writerow(row)
            n_out += 1
    log.info("assoc: %d markers tested, %d skipped", n_out, n_skip)


@contextmanager
def _null():
    yield None


# power

def cmd_power(opts):
    model = _parse_model(opts["model"])
    sweep = opts["sweep"]
    if sweep not in SWEEP_AXES:
        raise UsageError(f"--sweep must be one of {', '.join(SWEEP_AXES)}")
    order = opts["order"]
    if order not in (1, 2):
        raise UsageError("--order must be 1 or 2")
    q1 = opts["q1"] if opts["q1"] is not None else 0.1
    delta_ld = opts["delta-ld"] if opts["delta-ld"] is not None else 0.2
    R = opts["cases"] if opts["cases"] is not None else 10000
    S = opts["controls"] if opts["controls"] is not None else 10000
    alpha = opts["alpha"] if opts["alpha"] is not None else 5e-8
    deltas = _float_list(opts["prevalence"], "prevalence") if opts["prevalence"] else []
    default_grid = {"q1": "0.05:0.01:0.5", "delta_ld": "0:0.02:0.3", "delta_prevalence": "0.01:0.01:0.5"}
    grid = _parse_grid(opts["grid"] or default_grid[sweep])
    try:
        base = PowerQuery(model, MarkerSpec(q1, delta_ld), StudyDesign(R, S), alpha=alpha)
    except DomainError as exc:
        raise UsageError(str(exc)) from None

    # parameters that stay fixed along the sweep must be feasible up front
    if sweep == "delta_prevalence":
        require_feasible(model, base.marker)
    elif sweep == "q1":
        if not any(_feasible_point(model, MarkerSpec(q, delta_ld)) for q in grid):
            raise InfeasibleModel(f"no point of the q1 grid is feasible with delta_ld={delta_ld}")

    rows = power_curve(base, sweep, grid, order)
    extra = []
    if sweep != "delta_prevalence":
        for d in deltas:
            try:
                extra.append([r.power_w for r in power_curve(_with_delta(base, d), sweep, grid, order)])
            except DomainError as exc:
                raise UsageError(f"--prevalence: {exc}") from None

    with _output(opts["out"]) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(
            ["sweep_value", "power_w", "power_t", "power_catt", "feasible_flag"]
            + [f"power_w_{d:g}" for d in deltas if sweep != "delta_prevalence"]
        )
        for i, r in enumerate(rows):
            writer.writerow(
                [f"{r.sweep_value:.10g}", _fmt(r.power_w), _fmt(r.power_t), _fmt(r.power_catt), int(r.feasible)]
                + [_fmt(col[i]) for col in extra]
            )


def _feasible_point(model, marker):
    try:
        require_feasible(model, marker)
    except (InfeasibleModel, DomainError):
        return False
    return True


def _with_delta(base, d):
    return PowerQuery(base.model, base.marker, base.design, delta=d, alpha=base.alpha)


# type1

def cmd_type1(opts):
    alpha = opts["alpha"] if opts["alpha"] is not None else 1e-4
    R = opts["cases"] if opts["cases"] is not None else 5000
    S = opts["controls"] if opts["controls"] is not None else 5000
    grid = _parse_grid(opts["grid"] or "0.03:0.005:0.5")
    delta = None
    if opts["prevalence"] is not None:
        values = _float_list(opts["prevalence"], "prevalence")
        if len(values) != 1:
            raise UsageError("type1 takes a single --prevalence value")
        delta = values[0]
    try:
        methods = parse_methods(opts["methods"] or "W@0.05,T", delta=delta, x1=opts["catt-score"])
        sampler = SamplerSpec(grid[0], grid[0], R, S, opts["inbreeding"])
        for q in grid:
            SamplerSpec(q, q, R, S, opts["inbreeding"])
        plan = SimPlan(sampler, opts["reps"], alpha, methods, opts["seed"])
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    table = type1_study(plan, grid, workers=max(1, opts["workers"]))
    overall = overall_type1(table, grid)
    with _output(opts["out"]) as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["method", "delta", "q1", "rejections", "reps", "alpha", "ratio", "se", "overall"])
        for row in table.rows:
            writer.writerow(
                [
                    row.label,
                    _fmt(row.delta),
                    f"{row.q1:.10g}",
                    row.rejections,
                    row.reps,
                    f"{row.alpha:.10g}",
                    f"{row.ratio:.10g}",
                    f"{row.se:.10g}",
                    f"{overall[row.label]:.10g}",
                ]
            )


# simulate

def cmd_simulate(opts):
    model = _parse_model(opts["model"])
    q1 = opts["q1"] if opts["q1"] is not None else 0.2
    delta_ld = opts["delta-ld"] if opts["delta-ld"] is not None else 0.0
    R = opts["cases"] if opts["cases"] is not None else 2000
    S = opts["controls"] if opts["controls"] is not None else 2000
    n_markers = opts["markers"]
    if n_markers < 1:
        raise UsageError("--markers must be >= 1")
    try:
        marker = MarkerSpec(q1, delta_ld)
        design = StudyDesign(R, S)
    except DomainError as exc:
        raise UsageError(str(exc)) from None
    require_feasible(model, marker)
    try:
        sampler = alternative_sampler(model, marker, design.R, design.S, opts["inbreeding"])
    except DomainError as exc:
        raise InfeasibleModel(str(exc)) from None
    seed = opts["seed"]
    cell = cell_id("simulate", *sampler.key())
    sizes = block_sizes(n_markers)

    def work(b):
        return draw_tables(sampler, seed, cell, b, sizes[b])

    workers = max(1, opts["workers"])
    if workers == 1:
        blocks = map(work, range(len(sizes)))
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        blocks = pool.map(work, range(len(sizes)))
    width = len(str(n_markers))
    index = 0
    try:
        with _output(opts["out"], newline="\n") as out:
            out.write("# simulated markers; ground truth in the manifest\n")
            out.write("\t".join(INPUT_HEADER) + "\n")
            for r0, r1, s0, s1 in blocks:
                for a, b, c, d in zip(r0.tolist(), r1.tolist(), s0.tolist(), s1.tolist()):
                    index += 1
                    out.write(f"sim{index:0{width}d}\tsim\t{index}\t{a}\t{b}\t{R}\t{c}\t{d}\t{S}\n")
    finally:
        if workers > 1:
            pool.shutdown()

    truth = marker_case_control_freqs(model, marker)
    manifest = {
        "generator": f"mafneutral {__version__}",
        "model": {"p1": model.p1, "pi11": model.pi11, "pi12": model.pi12, "pi22": model.pi22},
        "prevalence": prevalence(model),
        "B": effect_B(model),
        "q1": q1,
        "delta_ld": delta_ld,
        "q1_cases": truth.q1_cases,
        "q1_controls": truth.q1_controls,
        "cases": R,
        "controls": S,
        "inbreeding": opts["inbreeding"],
        "markers": n_markers,
        "seed": seed,
    }
    if opts["out"] not in (None, "-"):
        with _output(opts["out"] + ".manifest.json", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        log.info("manifest: %s", json.dumps(manifest, sort_keys=True))


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        opts = _resolve(args, {})
        if args.command == "assoc":
            cmd_assoc(opts, args.input)
        elif args.command == "power":
            cmd_power(opts)
        elif args.command == "type1":
            cmd_type1(opts)
        else:
            cmd_simulate(opts)
    except UsageError as exc:
        print(f"mafneutral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"mafneutral: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleModel as exc:
        print(f"mafneutral: infeasible model: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (DomainError, ProtocolError) as exc:
        print(f"mafneutral: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
