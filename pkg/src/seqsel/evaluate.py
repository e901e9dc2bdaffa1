"""Scoring of estimated structures and the benchmark/scaling/sample-size harnesses.

Pairs are bucketed into five disjoint kinds: selection-only, both (selection
and direct), first-order direct, higher-order direct, and confounded.  A pair
carrying both a selection and a direct tag only ever counts as "both"; on
inadmissible graphs where a confounder tag coincides with a direct or
selection tag, those take precedence and the confounder tag is not scored
separately.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .ci import CIProvider, Dataset, FisherZProvider, OracleProvider
from .discovery import DiscoveryOptions, discover
from .graph import SequentialCausalGraph
from .simulate import (
    SelectionSurvivalError,
    StructureSpec,
    WeightPolicy,
    generate,
    random_structure,
)

__all__ = [
    "KINDS",
    "KindMetrics",
    "EvalReport",
    "ReplicateOutcome",
    "ScalabilityPoint",
    "SampleSizeSummary",
    "classify_pairs",
    "compare",
    "selection_pair_scores",
    "oracle_provider_factory",
    "run_benchmark",
    "run_scalability",
    "run_sample_size_study",
]

KINDS = ("selection", "first_order_direct", "higher_order_direct", "confounded", "both")


@dataclass(frozen=True)
class KindMetrics:
    """Counts and derived rates for one dependency kind; 0/0 reads as 1.0."""

    true_positive: int
    false_positive: int
    false_negative: int

    @property
    def precision(self) -> float:
        denom = self.true_positive + self.false_positive
        return self.true_positive / denom if denom else 1.0

    @property
    def recall(self) -> float:
        denom = self.true_positive + self.false_negative
        return self.true_positive / denom if denom else 1.0


@dataclass
class EvalReport:
    """Per-kind scores plus the query/time accounting of one discovery run."""

    kinds: dict[str, KindMetrics]
    ci_query_count: int = 0
    wall_time: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "kinds": {
                name: {
                    "true_positive": m.true_positive,
                    "false_positive": m.false_positive,
                    "false_negative": m.false_negative,
                    "precision": m.precision,
                    "recall": m.recall,
                }
                for name, m in self.kinds.items()
            },
            "ci_query_count": self.ci_query_count,
            "wall_time": self.wall_time,
        }


@dataclass
class ReplicateOutcome:
    """One benchmark replicate: a report, or the error that stopped it."""

    seed: int
    report: EvalReport | None = None
    error: str | None = None


@dataclass(frozen=True)
class ScalabilityPoint:
    n_vars: int
    ci_query_count: int
    wall_time: float


@dataclass(frozen=True)
class SampleSizeSummary:
    """Selection-pair score statistics at one sample size."""

    n_samples: int
    mean_precision: float
    std_precision: float
    mean_recall: float
    std_recall: float


def classify_pairs(graph: SequentialCausalGraph) -> dict[str, frozenset[tuple[int, int]]]:
    """Bucket every dependent pair of the graph into exactly one kind."""
    sel = graph.selection_pairs
    direct = graph.direct_edges
    conf = graph.confounded_pairs
    both = sel & direct
    selection_only = sel - direct
    direct_only = direct - sel
    first = frozenset((i, j) for i, j in direct_only if j == i + 1)
    higher = direct_only - first
    confounded = conf - sel - direct
    return {
        "selection": frozenset(selection_only),
        "first_order_direct": first,
        "higher_order_direct": frozenset(higher),
        "confounded": frozenset(confounded),
        "both": frozenset(both),
    }


def compare(truth: SequentialCausalGraph, estimate: SequentialCausalGraph) -> EvalReport:
    """Score the estimate against the truth, kind by kind.

    Selection groups are expanded into their constituent pairs first, so the
    result is invariant to group bookkeeping; a truth pair of kind "both" is
    matched only by an estimated "both".
    """
    if truth.n_observed != estimate.n_observed:
        raise ValueError(
            f"variable counts differ: truth {truth.n_observed}, estimate {estimate.n_observed}"
        )
    t = classify_pairs(truth)
    e = classify_pairs(estimate)
    kinds = {}
    for name in KINDS:
        tp = len(t[name] & e[name])
        kinds[name] = KindMetrics(
            true_positive=tp,
            false_positive=len(e[name]) - tp,
            false_negative=len(t[name]) - tp,
        )
    return EvalReport(kinds=kinds)


def _default_provider(graph: SequentialCausalGraph, dataset: Dataset, alpha: float) -> CIProvider:
    return FisherZProvider(dataset, alpha=alpha)


def oracle_provider_factory(graph: SequentialCausalGraph, dataset: Dataset, alpha: float) -> CIProvider:
    """Provider factory that ignores the data and answers from the truth."""
    return OracleProvider(graph)


def run_benchmark(
    mode: str,
    n_vars: int,
    n_samples: int,
    replicates: int,
    seeds: Sequence[int] | None = None,
    *,
    alpha: float = 0.05,
    allow_confounders: bool = True,
    policy: WeightPolicy = WeightPolicy(),
    provider_factory: Callable[[SequentialCausalGraph, Dataset, float], CIProvider] | None = None,
) -> list[ReplicateOutcome]:
    """Generate/discover/compare over replicates.

    ``satisfied`` draws structures through the condition checkers; ``violated``
    runs the same generator with checking disabled, which is the assumption
    ablation.  Sampling failures are recorded per replicate and do not abort
    the sweep.
    """
    if mode not in ("satisfied", "violated"):
        raise ValueError("mode must be 'satisfied' or 'violated'")
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if seeds is None:
        seeds = list(range(replicates))
    if len(seeds) != replicates:
        raise ValueError("seeds length must equal replicates")
    factory = provider_factory or _default_provider

    outcomes: list[ReplicateOutcome] = []
    for seed in seeds:
        spec = StructureSpec(n_vars=n_vars, allow_confounders=allow_confounders, seed=int(seed))
        try:
            res = generate(spec, n_samples, policy, check_conditions=(mode == "satisfied"))
        except SelectionSurvivalError as exc:
            outcomes.append(ReplicateOutcome(seed=int(seed), error=str(exc)))
            continue
        provider = factory(res.graph, res.dataset, alpha)
        start = time.perf_counter()
        estimate = discover(provider, n_vars, DiscoveryOptions(with_confounders=True, alpha=alpha))
        elapsed = time.perf_counter() - start
        report = compare(res.graph, estimate)
        report.ci_query_count = provider.query_count
        report.wall_time = elapsed
        outcomes.append(ReplicateOutcome(seed=int(seed), report=report))
    return outcomes


def run_scalability(
    n_list: Sequence[int],
    max_selection: int,
    *,
    n_samples: int = 10_000,
    seed: int = 0,
    alpha: float = 0.05,
    policy: WeightPolicy = WeightPolicy(),
) -> list[ScalabilityPoint]:
    """Exact query counts and discovery wall time across graph sizes.

    Structures are condition-checked with at most ``max_selection`` selection
    pairs; only discovery is timed, data generation is excluded.
    """
    if list(n_list) != sorted(n_list):
        raise ValueError("n_list must be ascending")
    points: list[ScalabilityPoint] = []
    for n_vars in n_list:
        spec = StructureSpec(
            n_vars=int(n_vars),
            allow_confounders=True,
            seed=seed,
            max_selection_pairs=min(max_selection, int(n_vars) // 2),
        )
        res = generate(spec, n_samples, policy)
        provider = FisherZProvider(res.dataset, alpha=alpha)
        start = time.perf_counter()
        discover(provider, int(n_vars), DiscoveryOptions(with_confounders=True, alpha=alpha))
        elapsed = time.perf_counter() - start
        points.append(
            ScalabilityPoint(
                n_vars=int(n_vars),
                ci_query_count=provider.query_count,
                wall_time=elapsed,
            )
        )
    return points


def _structure_seed_with_selection(n_vars: int, base: int, replicate: int) -> int:
    """Deterministic per-replicate seed whose structure has a selection pair."""
    salt = 0
    while True:
        seed = int(
            np.random.SeedSequence([base, replicate, salt]).generate_state(1, dtype=np.uint64)[0]
            % (2**63)
        )
        spec = StructureSpec(n_vars=n_vars, allow_confounders=True, seed=seed)
        if random_structure(spec).selection_groups:
            return seed
        salt += 1
        if salt > 64:
            raise RuntimeError("could not find a structure with a selection pair")


def run_sample_size_study(
    n_samples_list: Sequence[int],
    n_vars: int,
    replicates: int,
    *,
    seed: int = 0,
    alpha: float = 0.05,
    policy: WeightPolicy = WeightPolicy(),
) -> list[SampleSizeSummary]:
    """Selection-pair precision/recall statistics across sample sizes.

    The structure family is fixed per replicate (drawn once, guaranteed to
    contain a selection pair) and only the sample size varies.
    """
    sizes = [int(s) for s in n_samples_list]
    if sizes != sorted(sizes):
        raise ValueError("sizes must be ascending")
    if replicates < 2:
        raise ValueError("replicates must be >= 2")

    precisions: dict[int, list[float]] = {s: [] for s in sizes}
    recalls: dict[int, list[float]] = {s: [] for s in sizes}
    for rep in range(replicates):
        struct_seed = _structure_seed_with_selection(n_vars, seed, rep)
        spec = StructureSpec(n_vars=n_vars, allow_confounders=True, seed=struct_seed)
        for size in sizes:
            res = generate(spec, size, policy)
            provider = FisherZProvider(res.dataset, alpha=alpha)
            estimate = discover(provider, n_vars, DiscoveryOptions(with_confounders=True, alpha=alpha))
            precision, recall = selection_pair_scores(res.graph, estimate)
            precisions[size].append(precision)
            recalls[size].append(recall)

    out = []
    for size in sizes:
        p = np.array(precisions[size])
        r = np.array(recalls[size])
        out.append(
            SampleSizeSummary(
                n_samples=size,
                mean_precision=float(p.mean()),
                std_precision=float(p.std(ddof=1)),
                mean_recall=float(r.mean()),
                std_recall=float(r.std(ddof=1)),
            )
        )
    return out


def selection_pair_scores(
    truth: SequentialCausalGraph, estimate: SequentialCausalGraph
) -> tuple[float, float]:
    """Precision/recall over the plain selection-pair sets of the two graphs.

    Unlike the per-kind report, a pair that is also a direct relation still
    counts as a selection pair here, matching the definition of the relation.
    """
    t = truth.selection_pairs
    e = estimate.selection_pairs
    tp = len(t & e)
    precision = tp / len(e) if e else 1.0
    recall = tp / len(t) if t else 1.0
    return precision, recall
