"""Monte Carlo checks of the sampler against the exact formulas.

Trials are split into chunks sized to a node budget; every chunk writes its
per-trial outcomes by trial index and all statistics are computed once over
the full outcome arrays, so a report does not depend on ``threads``.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest, norm

from closedsets.dyadic_measure import (
    ClopenSet,
    DyadicMeasure,
    EnergyReport,
    build_diluted,
    capacity_constant,
    clopen_inner_approx,
    diluted_support,
    energy,
    measure_of_clopen,
)
from closedsets.encoding import (
    Params,
    check_kstring,
    f_index,
    format_kstring,
    iota_string,
)
from closedsets.exact_measure import chain_prob, pair_chain_prob
from closedsets.sampler import (
    derive_seed,
    extract_subset,
    node_uniforms,
    reconstruct_prefix,
    sample_forest,
    sample_raw_set,
    sample_tree,
    subset_to_integers,
    survival_exact,
    survival_limit,
    trial_seeds,
)
from closedsets.second_moment import (
    HittingTarget,
    hitting_lower_bound,
    moment_report,
    y_statistics,
)

logger = logging.getLogger(__name__)

EQUALITY_SIGMA = 4.0
BOUND_SIGMA = 3.0
SURVIVAL_SIGMA = 3.0

# Below this many successes (or failures) intervals come from the Wilson score
WILSON_MIN_COUNT = 10

# Approximate number of tree nodes one chunk of trials may hold
NODE_BUDGET = 1 << 22

BEAM_SPLITTER_NOTE = (
    "detection is an i.i.d. Bernoulli(eta) mask per photon; schedules that only "
    "guarantee infinitely many detections are not simulated"
)


class Verdict(str, Enum):
    CONSISTENT = "CONSISTENT"
    VIOLATION = "VIOLATION"


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    depth: Optional[int]
    trials: int
    estimate: float
    standard_error: float
    reference: float
    comparison: str
    sigma: float
    verdict: Verdict
    runtime_sec: float
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.verdict is Verdict.VIOLATION

    def to_dict(self) -> dict[str, Any]:
        row = self.csv_row()
        row["details"] = self.details
        return row

    def csv_row(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "depth": self.depth,
            "trials": self.trials,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "reference": self.reference,
            "comparison": self.comparison,
            "sigma": self.sigma,
            "verdict": self.verdict.value,
            "runtime_sec": round(self.runtime_sec, 4),
        }


@dataclass(frozen=True)
class TrialPlan:
    params: Params
    depth: int
    trials: int
    master_seed: int
    target: Optional[HittingTarget] = None
    measure: Optional[DyadicMeasure] = None
    threads: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.depth < 0:
            raise ValueError(f"depth must be nonnegative, got {self.depth}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")

    def seeds(self) -> np.ndarray:
        return trial_seeds(self.master_seed, self.trials)

    def require_measure_and_target(self) -> Tuple[DyadicMeasure, HittingTarget]:
        if self.measure is None or self.target is None:
            raise ValueError("this experiment needs both a measure and a target")
        return self.measure, self.target


def proportion_interval(count: int, trials: int, sigma: float) -> Tuple[float, float]:
    """Normal interval p +- sigma*se, or the Wilson interval for small counts."""
    if min(count, trials - count) < WILSON_MIN_COUNT:
        confidence = 1.0 - 2.0 * float(norm.sf(sigma))
        ci = binomtest(count, trials).proportion_ci(confidence_level=confidence, method="wilson")
        low = 0.0 if count == 0 else float(ci.low)
        high = 1.0 if count == trials else float(ci.high)
        return low, high
    p = count / trials
    se = math.sqrt(p * (1 - p) / trials)
    return p - sigma * se, p + sigma * se


def proportion_report(
    name: str,
    count: int,
    trials: int,
    reference: float,
    comparison: str,
    sigma: float,
    depth: Optional[int],
    started: float,
    details: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    """Compare a frequency with an exact value ("equality") or a lower bound."""
    p = count / trials
    low, high = proportion_interval(count, trials, sigma)
    if comparison == "equality":
        ok = low <= reference <= high
    elif comparison == "lower_bound":
        ok = high >= reference
    else:
        raise ValueError(f"unknown comparison {comparison!r}")
    return ExperimentReport(
        name=name,
        depth=depth,
        trials=trials,
        estimate=p,
        standard_error=math.sqrt(p * (1 - p) / trials),
        reference=float(reference),
        comparison=comparison,
        sigma=sigma,
        verdict=Verdict.CONSISTENT if ok else Verdict.VIOLATION,
        runtime_sec=time.perf_counter() - started,
        details={"count": int(count), **(details or {})},
    )


def mean_report(
    name: str,
    samples: np.ndarray,
    reference: float,
    sigma: float,
    depth: Optional[int],
    started: float,
    details: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    """Compare a sample mean with an exact value within sigma standard errors."""
    mean = float(samples.mean())
    se = float(samples.std(ddof=1)) / math.sqrt(samples.size) if samples.size > 1 else 0.0
    ok = abs(mean - reference) <= sigma * se + 1e-12 * max(1.0, abs(reference))
    return ExperimentReport(
        name=name,
        depth=depth,
        trials=int(samples.size),
        estimate=mean,
        standard_error=se,
        reference=float(reference),
        comparison="equality",
        sigma=sigma,
        verdict=Verdict.CONSISTENT if ok else Verdict.VIOLATION,
        runtime_sec=time.perf_counter() - started,
        details=details or {},
    )


def count_report(
    name: str,
    failures: int,
    checked: int,
    depth: Optional[int],
    started: float,
    details: Optional[Dict[str, Any]] = None,
) -> ExperimentReport:
    """A per-sample assertion: any failure is a violation."""
    return ExperimentReport(
        name=name,
        depth=depth,
        trials=checked,
        estimate=failures / checked if checked else 0.0,
        standard_error=0.0,
        reference=0.0,
        comparison="zero_failures",
        sigma=0.0,
        verdict=Verdict.VIOLATION if failures else Verdict.CONSISTENT,
        runtime_sec=time.perf_counter() - started,
        details={"failures": int(failures), "checked": int(checked), **(details or {})},
    )


def any_violation(reports: Sequence[ExperimentReport]) -> bool:
    """True when any report is a VIOLATION."""
    return any(r.violated for r in reports)


def _expected_nodes(params: Params, depth: int) -> float:
    growth = params.K * params.membership_probability
    return 1.0 + params.K * sum(growth**j for j in range(depth))


def _map_chunks(
    plan: TrialPlan, work: Callable[[np.ndarray, int], Dict[str, np.ndarray]]
) -> Dict[str, np.ndarray]:
    """Run ``work(seeds, start)`` on consecutive chunks and concatenate by trial index."""
    seeds = plan.seeds()
    size = max(1, int(NODE_BUDGET // _expected_nodes(plan.params, plan.depth)))
    bounds = [(s, min(s + size, plan.trials)) for s in range(0, plan.trials, size)]

    def run(bound: Tuple[int, int]) -> Dict[str, np.ndarray]:
        return work(seeds[bound[0] : bound[1]], bound[0])

    if plan.threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=plan.threads) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    logger.debug("ran %d trials in %d chunks", plan.trials, len(bounds))
    return {key: np.concatenate([part[key] for part in parts]) for key in parts[0]}


def _forest_outcomes(plan: TrialPlan, with_hits: bool, with_y: bool) -> Dict[str, np.ndarray]:
    """Per-trial alive flags, hit flags and Y statistics at every K-ary level."""
    params, depth = plan.params, plan.depth
    y_levels = 0
    if with_y:
        mu, _ = plan.require_measure_and_target()
        y_levels = min(depth, mu.depth // params.k)

    def work(seeds: np.ndarray, start: int) -> Dict[str, np.ndarray]:
        forest = sample_forest(params, depth, seeds)
        out = {
            "alive": np.stack([forest.level_counts(j) > 0 for j in range(depth + 1)], axis=1)
        }
        if with_hits:
            assert plan.target is not None
            hits = [np.full(forest.size, plan.target.clopen.hits(""), dtype=bool)]
            for j in range(1, depth + 1):
                owners, values = forest.levels[j - 1]
                mask = plan.target.hit_mask(values, params.k * j)
                hits.append(np.bincount(owners, weights=mask, minlength=forest.size) > 0)
            out["hit"] = np.stack(hits, axis=1)
        if with_y:
            assert plan.measure is not None and plan.target is not None
            out["y"] = np.stack(
                [y_statistics(forest, plan.measure, plan.target, j) for j in range(y_levels + 1)],
                axis=1,
            )
        return out

    return _map_chunks(plan, work)


def run_pair_prob_check(
    plan: TrialPlan, sigma: Sequence[int], tau: Sequence[int]
) -> ExperimentReport:
    """Frequency with which both prefix chains lie in S, against 2^{ell(m-2n)}."""
    started = time.perf_counter()
    params = plan.params
    sigma, tau = check_kstring(sigma, params), check_kstring(tau, params)
    exact = pair_chain_prob(sigma, tau, params)
    chain = {f_index(s[:i], params) for s in (sigma, tau) for i in range(1, len(s) + 1)}
    ids = np.array(sorted(chain), dtype=np.uint64)
    p = params.membership_probability

    def work(seeds: np.ndarray, start: int) -> Dict[str, np.ndarray]:
        u = node_uniforms(seeds[:, None], ids[None, :])
        return {"both": (u < p).all(axis=1)}

    both = _map_chunks(plan, work)["both"]
    return proportion_report(
        "pair_prob",
        int(both.sum()),
        plan.trials,
        float(exact),
        "equality",
        EQUALITY_SIGMA,
        len(sigma),
        started,
        {
            "sigma": format_kstring(sigma),
            "tau": format_kstring(tau),
            "exact": exact.to_dict(),
            "chain_prob": chain_prob(len(sigma), params).to_dict(),
        },
    )


def run_survival_curve(plan: TrialPlan) -> List[ExperimentReport]:
    """Nonempty-level frequency at every depth 1..d against the exact recursion."""
    started = time.perf_counter()
    alive = _forest_outcomes(plan, with_hits=False, with_y=False)["alive"]
    limit = survival_limit(plan.params)
    reports = []
    for j in range(1, plan.depth + 1):
        reports.append(
            proportion_report(
                "survival",
                int(alive[:, j].sum()),
                plan.trials,
                survival_exact(plan.params, j),
                "equality",
                SURVIVAL_SIGMA,
                j,
                started,
                {"limit": limit},
            )
        )
    if not plan.params.is_supercritical:
        logger.info("k=%d, ell=%s is not supercritical: survival tends to 0", plan.params.k, plan.params.ell)
    return reports


def _hitting_setup(plan: TrialPlan) -> Tuple[DyadicMeasure, HittingTarget, EnergyReport, float]:
    mu, target = plan.require_measure_and_target()
    report = energy(mu, plan.params.gamma)
    if not report.finite:
        raise ValueError(f"energy of {mu.label} at gamma={plan.params.gamma} is infinite")
    return mu, target, report, hitting_lower_bound(mu, target, plan.params)


def _hitting_report(
    plan: TrialPlan, hit: np.ndarray, started: float, setup: Tuple[Any, ...]
) -> ExperimentReport:
    mu, target, energy_report, bound = setup
    n = plan.params.k * plan.depth
    details: Dict[str, Any] = {
        "mu_A": float(measure_of_clopen(mu, target.clopen)),
        "energy": energy_report.total,
        "bound": bound,
        "target": list(target.clopen.cylinders) if len(target.clopen) <= 32 else len(target.clopen),
    }
    if n <= mu.depth:
        details["moments"] = moment_report(mu, target, n, plan.params).to_dict()
    return proportion_report(
        "hitting",
        int(hit.sum()),
        plan.trials,
        bound,
        "lower_bound",
        BOUND_SIGMA,
        plan.depth,
        started,
        details,
    )


def run_hitting_check(plan: TrialPlan) -> ExperimentReport:
    """Frequency that the frontier meets the target, against mu(A)^2 / energy."""
    started = time.perf_counter()
    setup = _hitting_setup(plan)
    hit = _forest_outcomes(plan, with_hits=True, with_y=False)["hit"][:, plan.depth]
    return _hitting_report(plan, hit, started, setup)


def random_target(rng: np.random.Generator, max_length: int, max_cylinders: int = 4) -> HittingTarget:
    """A clopen target of up to ``max_cylinders`` random cylinders."""
    count = int(rng.integers(1, max_cylinders + 1))
    words = []
    for _ in range(count):
        length = int(rng.integers(1, max_length + 1))
        words.append("".join(str(b) for b in rng.integers(0, 2, length)))
    return HittingTarget(ClopenSet.of(words))


def run_hitting_batch(plan: TrialPlan, count: int, target_seed: int) -> List[ExperimentReport]:
    """Hitting checks on ``count`` pseudo-random clopen targets."""
    if plan.measure is None:
        raise ValueError("this experiment needs a measure")
    rng = np.random.default_rng(target_seed)
    max_length = min(plan.params.k * plan.depth, plan.measure.depth)
    reports = []
    for i in range(count):
        target = random_target(rng, max_length)
        sub = replace(plan, target=target, master_seed=derive_seed(plan.master_seed, i))
        reports.append(run_hitting_check(sub))
    return reports


def run_moment_check(plan: TrialPlan) -> List[ExperimentReport]:
    """Sample moments of Y_n against the exact ones, and P{Y_n > 0} against Paley-Zygmund."""
    started = time.perf_counter()
    mu, target = plan.require_measure_and_target()
    n = plan.params.k * plan.depth
    exact = moment_report(mu, target, n, plan.params)
    y = _forest_outcomes(plan, with_hits=False, with_y=True)["y"][:, plan.depth]
    details = exact.to_dict()
    return [
        mean_report("moment_first", y, float(exact.first_moment), EQUALITY_SIGMA, plan.depth, started, details),
        mean_report("moment_second", y * y, float(exact.second_moment), EQUALITY_SIGMA, plan.depth, started),
        proportion_report(
            "pz_bound",
            int((y > 0).sum()),
            plan.trials,
            float(exact.pz_bound),
            "lower_bound",
            BOUND_SIGMA,
            plan.depth,
            started,
        ),
    ]


def run_monotone_check(plan: TrialPlan) -> ExperimentReport:
    """Per sample: Y_{n+k} > 0 implies Y_n > 0 at every multiple n of k."""
    started = time.perf_counter()
    y = _forest_outcomes(plan, with_hits=False, with_y=True)["y"]
    positive = y[:, 1:] > 0
    broken = (positive[:, 1:] & ~positive[:, :-1]).any(axis=1)
    return count_report("monotone", int(broken.sum()), plan.trials, plan.depth, started)


def run_roundtrip_check(plan: TrialPlan) -> ExperimentReport:
    """extract_subset followed by reconstruct_prefix on a random surviving branch."""
    started = time.perf_counter()
    params, depth = plan.params, plan.depth
    if depth < 1:
        raise ValueError("round trip needs depth >= 1")
    n = params.k * depth

    def work(seeds: np.ndarray, start: int) -> Dict[str, np.ndarray]:
        forest = sample_forest(params, depth, seeds)
        alive = forest.level_counts(depth) > 0
        ok = np.zeros(forest.size, dtype=bool)
        for i in np.flatnonzero(alive):
            tree = forest.tree(int(i))
            values = tree.level(depth)
            pick = np.random.default_rng(int(seeds[i])).integers(values.size)
            x = format(int(values[pick]), f"0{n}b")
            witness = extract_subset(x, tree)
            ok[i] = witness.is_complete(depth) and all(
                reconstruct_prefix(witness, params.k * j) == x[: params.k * j]
                for j in range(1, depth + 1)
            )
        return {"alive": alive, "ok": ok}

    out = _map_chunks(plan, work)
    alive, ok = out["alive"], out["ok"]
    return count_report(
        "roundtrip", int((alive & ~ok).sum()), int(alive.sum()), depth, started,
        {"trials": plan.trials},
    )


def run_clopen_check(
    mu: DyadicMeasure,
    count: int,
    seed: int,
    epsilons: Sequence[Fraction] = (Fraction(1, 8), Fraction(1, 64)),
    max_cylinders: int = 12,
) -> ExperimentReport:
    """Inner clopen approximation on random cylinder lists."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(count):
        size = int(rng.integers(1, max_cylinders + 1))
        cylinders = [
            "".join(str(b) for b in rng.integers(0, 2, int(rng.integers(1, mu.depth + 1))))
            for _ in range(size)
        ]
        union_set = ClopenSet.of(cylinders)
        union = measure_of_clopen(mu, union_set)
        for eps in epsilons:
            inner = clopen_inner_approx(cylinders, mu, eps)
            inside = all(union_set.contains(a) for a in inner)
            if not inside or union - measure_of_clopen(mu, inner) > eps:
                failures += 1
    return count_report("clopen_inner", failures, count * len(epsilons), mu.depth, started)


@dataclass(frozen=True)
class PipelineReport:
    params: Params
    depth: int
    capacity: Tuple[float, Fraction]
    energy: EnergyReport
    hitting: ExperimentReport
    survival: float
    worked: Optional[Dict[str, Any]]

    @property
    def verdict(self) -> Verdict:
        if self.hitting.violated or (self.worked is not None and not self.worked["round_trip"]):
            return Verdict.VIOLATION
        return Verdict.CONSISTENT

    def to_dict(self) -> dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "depth": self.depth,
            "binary_depth": self.params.k * self.depth,
            "capacity": {"c_R": self.capacity[0], "beta": str(self.capacity[1])},
            "energy": self.energy.to_dict(),
            "hitting": self.hitting.to_dict(),
            "survival_frequency": self.survival,
            "worked": self.worked,
            "verdict": self.verdict.value,
        }


def _worked_extraction(params: Params, depth: int, seed: int, target: HittingTarget) -> Dict[str, Any]:
    """x on a hitting branch, Y = {sigma in S : iota(sigma) prefix of x}, and f_k^{-1}(Y)."""
    n = params.k * depth
    tree = sample_tree(params, depth, seed)
    values = tree.level(depth)
    hitting = values[target.hit_mask(values, n)]
    x = format(int(hitting[0]), f"0{n}b")
    raw = sample_raw_set(params, depth, seed)
    witness = extract_subset(x, raw)
    integers = subset_to_integers(witness)
    round_trip = witness.is_complete(depth) and all(
        reconstruct_prefix(witness, params.k * j) == x[: params.k * j] for j in range(1, depth + 1)
    )
    return {
        "seed": seed,
        "x": x,
        "Y": [format_kstring(s) for s in witness.strings],
        "Y_iota": [iota_string(s, params) for s in witness.strings],
        "integers": sorted(integers),
        "integers_in_random_set": integers <= raw.member_indices(),
        "matches_tree": extract_subset(x, tree) == witness,
        "round_trip": bool(round_trip),
    }


def run_pipeline_demo(k: int, depth: int, trials: int, seed: int, threads: int = 1) -> PipelineReport:
    """Diluted measure -> finite energy -> hitting check -> one worked x -> Y -> integers."""
    params = Params(k, Fraction(1))
    if params.gamma >= Fraction(1, 2):
        raise ValueError(f"pipeline needs gamma = 1/k < 1/2, got k={k}")
    n = k * depth
    mu = build_diluted(n)
    target = HittingTarget(diluted_support(n))
    beta = Fraction(1, 2)
    c_r = capacity_constant(mu, beta)
    energy_report = energy(mu, params.gamma, certificate=(c_r, beta))
    plan = TrialPlan(params, depth, trials, seed, target, mu, threads)
    started = time.perf_counter()
    setup = _hitting_setup(plan)
    outcomes = _forest_outcomes(plan, with_hits=True, with_y=False)
    hit = outcomes["hit"][:, depth]
    hitting = _hitting_report(plan, hit, started, setup)
    worked = None
    found = np.flatnonzero(hit)
    if found.size:
        worked = _worked_extraction(params, depth, int(plan.seeds()[found[0]]), target)
    else:
        logger.warning("no trial out of %d met the diluted support", trials)
    return PipelineReport(
        params=params,
        depth=depth,
        capacity=(c_r, beta),
        energy=energy_report,
        hitting=hitting,
        survival=float(outcomes["alive"][:, depth].mean()),
        worked=worked,
    )


@dataclass(frozen=True, eq=False)
class BeamSplitterRecord:
    """Fair bits per photon and an independent detection mask."""

    eta: float
    seed: int
    bits: np.ndarray
    detected: np.ndarray

    @property
    def n_photons(self) -> int:
        return int(self.bits.size)

    @property
    def observed_positions(self) -> np.ndarray:
        return np.flatnonzero(self.detected)

    @property
    def observed_bits(self) -> np.ndarray:
        return self.bits[self.detected]

    @property
    def true_ones(self) -> np.ndarray:
        return np.flatnonzero(self.bits == 1)

    @property
    def detected_ones(self) -> np.ndarray:
        """Detected positions holding a 1: a subset of ``true_ones``."""
        return np.flatnonzero(self.detected & (self.bits == 1))

    def reports(self) -> List[ExperimentReport]:
        """Detected and detected-one frequencies against eta and eta/2."""
        started = time.perf_counter()
        n = self.n_photons
        return [
            proportion_report(
                "detected_fraction", int(self.detected.sum()), n, self.eta,
                "equality", EQUALITY_SIGMA, None, started,
            ),
            proportion_report(
                "detected_ones_fraction", int(self.detected_ones.size), n, self.eta / 2,
                "equality", EQUALITY_SIGMA, None, started,
            ),
        ]

    def to_dict(self, max_listed: int = 1000) -> dict[str, Any]:
        def listed(a: np.ndarray) -> list[int]:
            return [int(v) for v in a[:max_listed]]

        return {
            "note": BEAM_SPLITTER_NOTE,
            "eta": self.eta,
            "n_photons": self.n_photons,
            "seed": self.seed,
            "detected": int(self.detected.sum()),
            "detected_fraction": float(self.detected.mean()),
            "detected_ones_fraction": self.detected_ones.size / self.n_photons,
            "subset_of_true_ones": bool(np.isin(self.detected_ones, self.true_ones).all()),
            "truncated": self.n_photons > max_listed,
            "observed_positions": listed(self.observed_positions),
            "observed_bits": listed(self.observed_bits),
            "detected_ones": listed(self.detected_ones),
        }


def run_beam_splitter(eta: float, n_photons: int, seed: int) -> BeamSplitterRecord:
    """Fair bits for ``n_photons`` photons, each detected with probability eta."""
    if not 0 < eta <= 1:
        raise ValueError(f"detection probability must lie in (0, 1], got {eta}")
    if n_photons < 1:
        raise ValueError(f"need at least one photon, got {n_photons}")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, n_photons, dtype=np.uint8)
    detected = rng.random(n_photons) < eta
    return BeamSplitterRecord(eta=eta, seed=seed, bits=bits, detected=detected)

