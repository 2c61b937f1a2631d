#!/usr/bin/env python3
"""Command-line front end: one subcommand per operation, JSON or CSV reports.

Examples:
    closedsets survival --k 2 --ell 1 --depth 8 --trials 100000 --seed 7
    closedsets energy --measure uniform --gamma 1/2
    closedsets pairprob --k 2 --ell 1 --sigma 3,2,1 --tau 3,0,1 --trials 100000
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, NoReturn, Optional, Sequence, Tuple

from closedsets import __version__
from closedsets.dyadic_measure import (
    MAX_DOUBLE_SUM_DEPTH,
    ClopenSet,
    DyadicMeasure,
    capacity_constant,
    clopen_inner_approx,
    energy,
    energy_double_sum,
    gamma_weight,
    measure_of_clopen,
    measure_support,
    resolve_measure,
)
from closedsets.encoding import Params, format_kstring, iota_string, parse_kstring, parse_rational
from closedsets.experiments import (
    ExperimentReport,
    TrialPlan,
    Verdict,
    run_beam_splitter,
    run_hitting_batch,
    run_hitting_check,
    run_moment_check,
    run_monotone_check,
    run_pair_prob_check,
    run_pipeline_demo,
    run_roundtrip_check,
    run_survival_curve,
)
from closedsets.reports import CSV_COLUMNS, build_report, dumps, format_csv, write_csv, write_json
from closedsets.sampler import (
    SubsetWitness,
    extract_subset,
    frontier_binary,
    reconstruct_prefix,
    sample_raw_set,
    sample_tree,
    subset_to_integers,
    survival_exact,
    survival_limit,
)
from closedsets.second_moment import HittingTarget, moment_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2

EPILOG = f"""\
CSV output (--format csv, Monte Carlo subcommands) has one row per check with
columns: {", ".join(CSV_COLUMNS)}.

Rationals (--ell, --gamma, --beta, --epsilon) accept "p/q" or a decimal.
Measures: uniform, diluted, or a JSON file {{"depth": N, "masses": {{"<bits>": "p/q"}}}}.
Targets: whole, support, a comma list of bit strings, or a JSON file {{"cylinders": [...]}}.

Exit codes: 0 success, 1 usage or input error, 2 a check reported VIOLATION.
"""


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        """Print usage and exit with status 1."""
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass(frozen=True)
class CliConfig:
    """Flag values exactly as typed; parsed on demand."""

    subcommand: str
    k: Optional[str] = None
    ell: Optional[str] = None
    depth: Optional[str] = None
    trials: Optional[str] = None
    seed: Optional[str] = None
    gamma: Optional[str] = None
    measure: Optional[str] = None
    target: Optional[str] = None
    output_format: str = "json"
    output: Optional[str] = None
    threads: str = "1"
    timestamp: bool = True
    extras: Mapping[str, Any] = field(default_factory=dict)
    # every flag the subcommand parser defines, as parsed
    flags: Mapping[str, Any] = field(default_factory=dict)

    @classmethod
    def from_namespace(cls, args: argparse.Namespace) -> "CliConfig":
        """Build a config from parsed arguments, keeping every flag as typed."""
        flags = dict(vars(args))
        values = dict(flags)
        values.pop("verbose", None)
        timestamp = not values.pop("no_timestamp", False)
        named = {f.name for f in fields(cls)} - {"timestamp", "extras", "flags"}
        kwargs = {name: values.pop(name) for name in list(values) if name in named}
        return cls(timestamp=timestamp, extras=values, flags=flags, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        """The parsed flags, unset optional ones omitted."""
        return {k: v for k, v in self.flags.items() if v is not None}

    def text(self, name: str) -> Optional[str]:
        """Raw text of a flag, or None when it was not given."""
        value = getattr(self, name) if hasattr(self, name) else self.extras.get(name)
        return None if value is None else str(value)

    def flag(self, name: str) -> bool:
        """Value of a store_true flag."""
        return bool(self.extras.get(name, False))

    def integer(self, name: str, minimum: int = 0) -> int:
        """Parse a flag as an integer no smaller than ``minimum``."""
        text = self.text(name)
        if text is None:
            raise ValueError(f"--{name.replace('_', '-')} is required")
        try:
            value = int(text)
        except ValueError:
            raise ValueError(f"--{name.replace('_', '-')} must be an integer, got {text!r}") from None
        if value < minimum:
            raise ValueError(f"--{name.replace('_', '-')} must be >= {minimum}, got {value}")
        return value

    def rational(self, name: str) -> Fraction:
        """Parse a flag as a Fraction."""
        text = self.text(name)
        if text is None:
            raise ValueError(f"--{name} is required")
        return parse_rational(text)

    @property
    def params(self) -> Params:
        return Params(self.integer("k", 1), self.rational("ell"))

    def plan(self, measure: Optional[DyadicMeasure] = None, target: Optional[HittingTarget] = None) -> TrialPlan:
        """Trial plan from --k, --ell, --depth, --trials, --seed and --threads."""
        return TrialPlan(
            params=self.params,
            depth=self.integer("depth"),
            trials=self.integer("trials", 1),
            master_seed=self.integer("seed"),
            target=target,
            measure=measure,
            threads=self.integer("threads", 1),
        )


@dataclass
class Outcome:
    """What a subcommand produced: the JSON result, its checks and summary lines."""

    title: str
    result: Any
    checks: List[ExperimentReport] = field(default_factory=list)
    summary: List[Tuple[str, Any]] = field(default_factory=list)
    violated: Optional[bool] = None

    @property
    def status(self) -> str:
        violated = self.violated
        if violated is None:
            violated = any(c.verdict is Verdict.VIOLATION for c in self.checks)
        return "fail" if violated else "pass"


def _measure(config: CliConfig, default_depth: int) -> DyadicMeasure:
    depth_text = config.text("measure_depth")
    depth = int(depth_text) if depth_text is not None else default_depth
    return resolve_measure(config.text("measure") or "uniform", depth)


def resolve_target(spec: Optional[str], mu: Optional[DyadicMeasure]) -> HittingTarget:
    """whole | support | comma list of bit strings | JSON file {"cylinders": [...]}."""
    if spec is None or spec == "whole":
        return HittingTarget.whole_space()
    if spec == "support":
        if mu is None:
            raise ValueError("target 'support' needs a measure")
        return HittingTarget(measure_support(mu))
    path = Path(spec)
    if path.suffix == ".json" or path.exists():
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict) or not isinstance(data.get("cylinders"), list):
            raise ValueError(f"target file {path} must hold {{\"cylinders\": [...]}}")
        return HittingTarget(ClopenSet.of(str(c) for c in data["cylinders"]))
    words = [w.strip() for w in spec.split(",") if w.strip()]
    return HittingTarget(ClopenSet.of(words))


def _verdict_lines(checks: Sequence[ExperimentReport]) -> List[Tuple[str, Any]]:
    lines = []
    for c in checks:
        label = c.name if c.depth is None else f"{c.name}[{c.depth}]"
        lines.append((label, f"{c.estimate:.6g} vs {c.reference:.6g} {c.verdict.value}"))
    return lines


def cmd_sample(config: CliConfig) -> Outcome:
    """Sample one tree, and optionally the raw set behind it."""
    params, depth, seed = config.params, config.integer("depth"), config.integer("seed")
    tree = sample_tree(params, depth, seed)
    result = tree.to_dict()
    result["survivors"] = [tree.survivors(j) for j in range(1, depth + 1)]
    if config.flag("raw"):
        raw = sample_raw_set(params, depth, seed)
        result["raw_indices"] = sorted(raw.member_indices())
    return Outcome(
        "Sample",
        result,
        summary=[("Reached depth", tree.reached_depth()), ("Survivors", result["survivors"])],
    )


def cmd_survival(config: CliConfig) -> Outcome:
    """Survival curve against the exact recursion."""
    plan = config.plan()
    checks = run_survival_curve(plan)
    limit = survival_limit(plan.params)
    result = {
        "limit": limit,
        "exact": [survival_exact(plan.params, j) for j in range(1, plan.depth + 1)],
        "supercritical": plan.params.is_supercritical,
        "checks": checks,
    }
    return Outcome("Survival", result, checks, [("Limit", f"{limit:.6f}")] + _verdict_lines(checks))


def cmd_pairprob(config: CliConfig) -> Outcome:
    """Co-membership of two prefix chains."""
    params = config.params
    sigma = parse_kstring(config.text("sigma") or "", params)
    tau = parse_kstring(config.text("tau") or "", params)
    plan = TrialPlan(
        params, len(sigma), config.integer("trials", 1), config.integer("seed"),
        threads=config.integer("threads", 1),
    )
    check = run_pair_prob_check(plan, sigma, tau)
    return Outcome("Pair probability", {"check": check}, [check], _verdict_lines([check]))


def cmd_energy(config: CliConfig) -> Outcome:
    """gamma-energy of a measure, optionally certified."""
    mu = resolve_measure(config.text("measure") or "uniform", config.integer("depth"))
    gamma = config.rational("gamma")
    certificate = None
    if config.text("beta") is not None:
        beta = config.rational("beta")
        certificate = (capacity_constant(mu, beta), beta)
    report = energy(mu, gamma, certificate)
    result: Dict[str, Any] = {"measure": mu.label, "energy": report}
    summary: List[Tuple[str, Any]] = [("Measure", mu.label), ("Total", report.total)]
    violated = False
    if report.bound is not None:
        violated = report.total > report.bound + 1e-9
        summary.append(("Capacity bound", report.bound))
    if config.flag("oracle"):
        if mu.depth > MAX_DOUBLE_SUM_DEPTH:
            raise ValueError(f"--oracle needs measure depth <= {MAX_DOUBLE_SUM_DEPTH}")
        result["double_sum"] = energy_double_sum(mu, gamma)
        summary.append(("Double sum", result["double_sum"]))
    return Outcome("Energy", result, summary=summary, violated=violated)


def cmd_capacity(config: CliConfig) -> Outcome:
    """Capacity constant of a measure at --beta."""
    mu = resolve_measure(config.text("measure") or "uniform", config.integer("depth"))
    beta = config.rational("beta")
    c_r = capacity_constant(mu, beta)
    result: Dict[str, Any] = {"measure": mu.label, "beta": beta, "c_R": c_r}
    summary: List[Tuple[str, Any]] = [("Measure", mu.label), ("c_R", c_r)]
    if config.gamma is not None:
        report = energy(mu, config.rational("gamma"), certificate=(c_r, beta))
        result["energy"] = report
        summary.append(("Energy bound", report.bound))
    return Outcome("Capacity", result, summary=summary)


def cmd_weight(config: CliConfig) -> Outcome:
    """gamma-weight of listed strings or of a measure's support."""
    gamma = config.rational("gamma")
    strings_text = config.text("strings")
    if strings_text is not None:
        strings = [w.strip() for w in strings_text.split(",") if w.strip()]
        source = "strings"
    else:
        mu = resolve_measure(config.text("measure") or "uniform", config.integer("depth"))
        strings = list(measure_support(mu).cylinders)
        source = f"support of {mu.label}"
    weight = gamma_weight(strings, gamma)
    result = {"source": source, "count": len(set(strings)), "weight": weight, "value": float(weight)}
    return Outcome("Gamma weight", result, summary=[("Source", source), ("Weight", float(weight))])


def cmd_clopen(config: CliConfig) -> Outcome:
    """Inner clopen approximation of a cylinder list."""
    mu = resolve_measure(config.text("measure") or "uniform", config.integer("depth"))
    cylinders = [w.strip() for w in (config.text("cylinders") or "").split(",") if w.strip()]
    epsilon = config.rational("epsilon")
    inner = clopen_inner_approx(cylinders, mu, epsilon)
    mu_u = measure_of_clopen(mu, ClopenSet.of(cylinders))
    mu_a = measure_of_clopen(mu, inner)
    result = {
        "measure": mu.label,
        "epsilon": epsilon,
        "cylinders": cylinders,
        "inner": list(inner),
        "mu_U": mu_u,
        "mu_A": mu_a,
        "gap": mu_u - mu_a,
    }
    return Outcome(
        "Clopen approximation",
        result,
        summary=[("Pieces", len(inner)), ("mu(U)", mu_u), ("mu(A)", mu_a)],
        violated=mu_u - mu_a > epsilon,
    )


def cmd_hitprob(config: CliConfig) -> Outcome:
    """Hitting frequency against the lower bound, for one target or a batch."""
    params = config.params
    mu = _measure(config, params.k * config.integer("depth"))
    batch = config.integer("batch")
    if batch:
        checks = run_hitting_batch(config.plan(measure=mu), batch, config.integer("target_seed"))
    else:
        checks = [run_hitting_check(config.plan(mu, resolve_target(config.target, mu)))]
    summary = _verdict_lines(checks)
    if batch:
        summary.append(("Violations", sum(c.violated for c in checks)))
    return Outcome("Hitting probability", {"checks": checks}, checks, summary)


def cmd_moments(config: CliConfig) -> Outcome:
    """Exact moments of Y_n, and sampled ones when --trials is positive."""
    params = config.params
    n = params.k * config.integer("depth")
    mu = _measure(config, n)
    target = resolve_target(config.target, mu)
    exact = moment_report(mu, target, n, params)
    result: Dict[str, Any] = {"exact": exact}
    summary: List[Tuple[str, Any]] = [
        ("E[Y]", exact.first_moment),
        ("E[Y^2]", exact.second_moment),
        ("PZ bound", exact.pz_bound),
    ]
    checks: List[ExperimentReport] = []
    if config.integer("trials"):
        checks = run_moment_check(config.plan(mu, target))
        result["checks"] = checks
        summary.extend(_verdict_lines(checks))
    return Outcome("Moments", result, checks, summary)


def cmd_pipeline(config: CliConfig) -> Outcome:
    """End-to-end diluted measure pipeline."""
    report = run_pipeline_demo(
        config.integer("k", 1),
        config.integer("depth", 1),
        config.integer("trials", 1),
        config.integer("seed"),
        config.integer("threads", 1),
    )
    summary: List[Tuple[str, Any]] = [
        ("Energy", report.energy.total),
        ("Capacity bound", report.energy.bound),
    ] + _verdict_lines([report.hitting])
    if report.worked is not None:
        summary += [("x", report.worked["x"]), ("Round trip", report.worked["round_trip"])]
    else:
        summary.append(("Worked extraction", "no hitting trial"))
    return Outcome(
        "Pipeline",
        report,
        [report.hitting],
        summary,
        violated=report.verdict is Verdict.VIOLATION,
    )


def cmd_beamsplitter(config: CliConfig) -> Outcome:
    """Simulate lossy photon detection."""
    eta_text = config.text("eta") or ""
    try:
        eta = float(parse_rational(eta_text))
    except ValueError:
        raise ValueError(f"--eta must be a number, got {eta_text!r}") from None
    record = run_beam_splitter(eta, config.integer("photons", 1), config.integer("seed"))
    checks = record.reports()
    result = record.to_dict(max_listed=config.integer("max_listed"))
    result["checks"] = checks
    return Outcome("Beam splitter", result, checks, _verdict_lines(checks))


def _witness_dict(witness: SubsetWitness, x: str) -> dict[str, Any]:
    params = witness.params
    return {
        "x": x,
        "Y": [format_kstring(s) for s in witness.strings],
        "Y_iota": [iota_string(s, params) for s in witness.strings],
        "integers": sorted(subset_to_integers(witness)),
    }


def cmd_extract(config: CliConfig) -> Outcome:
    """Extract Y from a sampled tree (or raw set) along x."""
    params, depth, seed = config.params, config.integer("depth", 1), config.integer("seed")
    x = config.text("x")
    tree = sample_tree(params, depth, seed)
    if x is None:
        frontier = sorted(frontier_binary(tree))
        if not frontier:
            raise ValueError(f"tree with seed {seed} died out before depth {depth}; pass --x")
        x = frontier[0]
    source = sample_raw_set(params, depth, seed) if config.flag("raw") else tree
    witness = extract_subset(x, source)
    result = _witness_dict(witness, x)
    result["source"] = "raw" if config.flag("raw") else "tree"
    return Outcome("Extract", result, summary=[("x", x), ("|Y|", len(witness))])


def cmd_reconstruct(config: CliConfig) -> Outcome:
    """Recover a prefix of x from an explicit Y."""
    params = config.params
    subset_text = config.text("subset") or ""
    strings = tuple(parse_kstring(s, params) for s in subset_text.split(";") if s.strip())
    witness = SubsetWitness(params, strings)
    length = config.integer("length")
    prefix = reconstruct_prefix(witness, length)
    return Outcome(
        "Reconstruct",
        {"Y": [format_kstring(s) for s in witness.strings], "length": length, "prefix": prefix},
        summary=[("Prefix", prefix)],
    )


def cmd_monotone(config: CliConfig) -> Outcome:
    """Per-sample monotonicity of Y_n."""
    params = config.params
    mu = _measure(config, params.k * config.integer("depth"))
    check = run_monotone_check(config.plan(mu, resolve_target(config.target, mu)))
    return Outcome("Monotone hitting", {"check": check}, [check], _verdict_lines([check]))


def cmd_roundtrip(config: CliConfig) -> Outcome:
    """extract/reconstruct round trip on sampled branches."""
    check = run_roundtrip_check(config.plan())
    return Outcome("Round trip", {"check": check}, [check], _verdict_lines([check]))


COMMANDS: Dict[str, Callable[[CliConfig], Outcome]] = {
    "sample": cmd_sample,
    "survival": cmd_survival,
    "pairprob": cmd_pairprob,
    "energy": cmd_energy,
    "capacity": cmd_capacity,
    "weight": cmd_weight,
    "clopen": cmd_clopen,
    "hitprob": cmd_hitprob,
    "moments": cmd_moments,
    "pipeline": cmd_pipeline,
    "beamsplitter": cmd_beamsplitter,
    "extract": cmd_extract,
    "reconstruct": cmd_reconstruct,
    "monotone": cmd_monotone,
    "roundtrip": cmd_roundtrip,
}


def emit(config: CliConfig, outcome: Outcome) -> None:
    """Write the report to -o (and print a summary) or to stdout."""
    output = Path(config.output) if config.output else None
    if config.output_format == "csv":
        rows = [c.csv_row() for c in outcome.checks]
        if output is None:
            sys.stdout.write(format_csv(rows, timing=config.timestamp))
            return
        write_csv(rows, output, timing=config.timestamp)
    else:
        report = build_report(
            config.subcommand, outcome.status, config.to_dict(), outcome.result, config.timestamp
        )
        if output is None:
            sys.stdout.write(dumps(report))
            return
        write_json(report, output)

    print(f"{outcome.title} {'PASSED' if outcome.status == 'pass' else 'FAILED'}")
    print("=" * 40)
    for label, value in outcome.summary:
        print(f"{label + ':':<20} {value}")
    print(f"\nReport written to {output}")


def dispatch(config: CliConfig) -> int:
    """Run one subcommand and write its report; returns the exit code."""
    handler = COMMANDS.get(config.subcommand)
    if handler is None:
        print(f"Error: unknown subcommand {config.subcommand!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if config.output_format == "csv" and config.subcommand not in CSV_COMMANDS:
            raise ValueError(f"--format csv is not available for {config.subcommand}")
        outcome = handler(config)
        emit(config, outcome)
    except (ValueError, OSError) as e:
        # json.JSONDecodeError is a ValueError
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_VIOLATION if outcome.status == "fail" else EXIT_OK


CSV_COMMANDS = frozenset(
    {"survival", "pairprob", "hitprob", "moments", "pipeline", "beamsplitter", "monotone", "roundtrip"}
)


def _add_output(p: argparse.ArgumentParser) -> None:
    group = p.add_argument_group("output")
    group.add_argument("--format", dest="output_format", choices=["json", "csv"], default="json")
    group.add_argument("-o", "--output", help="Report file (default: stdout)")
    group.add_argument(
        "--no-timestamp",
        action="store_true",
        help="Omit timestamp and runtime fields (byte-identical reruns)",
    )
    group.add_argument("-v", "--verbose", action="store_true", help="Debug logging")


def _add_params(p: argparse.ArgumentParser, k: str = "2", ell: Optional[str] = "1") -> None:
    group = p.add_argument_group("distribution")
    group.add_argument("--k", default=k, help=f"Bits per symbol, K = 2^k (default: {k})")
    if ell is not None:
        group.add_argument("--ell", default=ell, help=f"Membership probability 2^-ell (default: {ell})")


def _add_trials(
    p: argparse.ArgumentParser, depth: Optional[str] = "8", trials: str = "100000"
) -> None:
    group = p.add_argument_group("Monte Carlo")
    if depth is not None:
        group.add_argument("--depth", default=depth, help=f"K-ary depth (default: {depth})")
    group.add_argument("--trials", default=trials, help=f"Number of trials (default: {trials})")
    group.add_argument("--seed", default="0", help="Master seed (default: 0)")
    group.add_argument("--threads", default="1", help="Worker threads; never changes results")


def _add_measure(p: argparse.ArgumentParser, depth_flag: str) -> None:
    group = p.add_argument_group("measure")
    group.add_argument("--measure", default="uniform", help="uniform, diluted or a JSON file")
    if depth_flag == "depth":
        group.add_argument("--depth", default="10", help="Measure depth N (default: 10)")
    else:
        group.add_argument("--measure-depth", help="Measure depth N (default: k * depth)")


def build_parser() -> ArgumentParser:
    """Parser with one subcommand per operation."""
    parser = ArgumentParser(
        prog="closedsets",
        description="Random closed sets of Cantor space: sampling, energies and hitting bounds",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_output(p)
        return p

    p = command("sample", "Sample the prefix-closed part of S as a tree")
    _add_params(p)
    p.add_argument("--depth", default="4", help="K-ary depth (default: 4)")
    p.add_argument("--seed", default="0")
    p.add_argument("--raw", action="store_true", help="Also list f_k indices of the raw sample")

    p = command("survival", "Survival frequency per depth against the exact recursion")
    _add_params(p)
    _add_trials(p)

    p = command("pairprob", "Co-membership frequency of two prefix chains")
    _add_params(p)
    _add_trials(p, depth=None)
    p.add_argument("--sigma", required=True, help="K-ary string, e.g. 3,2,1")
    p.add_argument("--tau", required=True, help="K-ary string of the same length")

    p = command("energy", "gamma-energy of a dyadic measure")
    _add_measure(p, "depth")
    p.add_argument("--gamma", default="1/2")
    p.add_argument("--beta", help="Certify the energy with the capacity constant at this exponent")
    p.add_argument("--oracle", action="store_true", help="Also compute the brute-force double sum")

    p = command("capacity", "Capacity constant c_R of a measure at exponent beta")
    _add_measure(p, "depth")
    p.add_argument("--beta", default="1/2")
    p.add_argument("--gamma", help="Also report the energy bound at this gamma")

    p = command("weight", "gamma-weight of a set of binary strings")
    _add_measure(p, "depth")
    p.add_argument("--gamma", default="1/2")
    p.add_argument("--strings", help="Comma list of bit strings (default: support of --measure)")

    p = command("clopen", "Clopen set inside a union of cylinders, within epsilon in measure")
    _add_measure(p, "depth")
    p.add_argument("--cylinders", required=True, help="Ordered comma list of bit strings")
    p.add_argument("--epsilon", default="1/8", help="Allowed measure gap (default: 1/8)")

    p = command("hitprob", "Hitting frequency against mu(A)^2 / energy")
    _add_params(p)
    _add_trials(p, depth="4", trials="20000")
    _add_measure(p, "measure_depth")
    p.add_argument("--target", default="whole", help="whole, support, bit strings or a JSON file")
    p.add_argument("--batch", default="0", help="Check this many random targets instead")
    p.add_argument("--target-seed", default="0", help="Seed for --batch targets")

    p = command("moments", "Exact moments of Y_n and the Paley-Zygmund bound")
    _add_params(p)
    _add_trials(p, depth="1", trials="0")
    _add_measure(p, "measure_depth")
    p.add_argument("--target", default="whole")

    p = command("pipeline", "Diluted measure to a hitting branch to a subset of integers")
    _add_params(p, k="4", ell=None)
    _add_trials(p, depth="4", trials="10000")

    p = command("beamsplitter", "Photon detection with efficiency eta")
    p.add_argument("--eta", required=True, help="Detection probability in (0, 1]")
    p.add_argument("--photons", default="100000")
    p.add_argument("--seed", default="0")
    p.add_argument("--max-listed", default="1000", help="Longest position list in the report")

    p = command("extract", "Y = members of S whose iota-image is a prefix of x")
    _add_params(p)
    p.add_argument("--depth", default="8")
    p.add_argument("--seed", default="0")
    p.add_argument("--x", help="Binary string (default: first surviving branch)")
    p.add_argument("--raw", action="store_true", help="Scan the raw sample instead of the tree")

    p = command("reconstruct", "Recover a prefix of x from Y")
    _add_params(p)
    p.add_argument("--subset", required=True, help="Elements of Y separated by ';', e.g. '3;3,2'")
    p.add_argument("--length", required=True, help="Binary prefix length (multiple of k)")

    p = command("monotone", "Check Y_{n+k} > 0 implies Y_n > 0 on every sample")
    _add_params(p)
    _add_trials(p, depth="4", trials="10000")
    _add_measure(p, "measure_depth")
    p.add_argument("--target", default="whole")

    p = command("roundtrip", "extract then reconstruct on random surviving branches")
    _add_params(p)
    _add_trials(p, trials="1000")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return dispatch(CliConfig.from_namespace(args))


if __name__ == "__main__":
    sys.exit(main())
