"""Ground-truth structure generation and linear-Gaussian sampling with selection.

Structures start from a chain over 1..N with half of the links dropped; extra
selection pairs, higher-order direct relations, and confounded pairs are then
inserted by rejection against the structural condition checkers.  Data are
simulated from a linear-Gaussian model in which each selection criterion is a
noisy linear function of its observed parents, and only rows where every
criterion exceeds its sample mean survive.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .ci import Dataset
from .graph import SequentialCausalGraph, check_condition_1, check_condition_2

__all__ = [
    "StructureSpec",
    "WeightPolicy",
    "SCMParameters",
    "GenerationResult",
    "SelectionSurvivalError",
    "random_structure",
    "draw_scm_parameters",
    "sample_unselected",
    "apply_selection",
    "sample_selected",
    "generate",
    "write_dataset_csv",
    "read_dataset_csv",
    "CsvFormatError",
]

_INSERTION_ATTEMPTS = 200
_OVERSAMPLE_START = 4
_OVERSAMPLE_DOUBLINGS = 12
_SURVIVAL_FLOOR = 1e-4
_CHUNK_FLOAT_BUDGET = 20_000_000


class SelectionSurvivalError(RuntimeError):
    """Raised when too few rows survive selection within the sampling budget."""


class CsvFormatError(ValueError):
    """Malformed dataset CSV; carries the offending line and column."""

    def __init__(self, message: str, line: int, column: int | None = None) -> None:
        where = f"line {line}" if column is None else f"line {line}, column {column}"
        super().__init__(f"{message} ({where})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class StructureSpec:
    """Recipe for one random admissible structure."""

    n_vars: int
    allow_confounders: bool = False
    max_extra_per_kind: int | None = None  # default: n_vars // 2
    seed: int = 0
    max_selection_pairs: int | None = None  # extra cap used by the scaling harness

    def __post_init__(self) -> None:
        if self.n_vars < 2:
            raise ValueError("n_vars must be >= 2")
        if self.max_extra_per_kind is not None:
            if self.max_extra_per_kind < 0:
                raise ValueError("max_extra_per_kind must be >= 0")
            if self.max_extra_per_kind > 0 and self.n_vars < 3:
                raise ValueError("extra dependencies require n_vars >= 3")

    @property
    def extra_cap(self) -> int:
        if self.max_extra_per_kind is not None:
            return self.max_extra_per_kind
        return self.n_vars // 2


@dataclass(frozen=True)
class WeightPolicy:
    """How structural coefficients and noise scales are drawn.

    Magnitudes stay away from zero so that population partial correlations
    are detectable at the sample sizes used here; signs are random.  Selection
    criteria carry their own noise term unless disabled.
    """

    low: float = 0.5
    high: float = 1.5
    random_sign: bool = True
    noise_std: float = 1.0
    selection_noise: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.low <= self.high:
            raise ValueError("need 0 < low <= high")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")


@dataclass(frozen=True)
class SCMParameters:
    """Weights for every structural edge plus noise configuration.

    Keys of ``edge_weights`` are ("direct", i, j) for observed edges,
    ("selection", g, p) for parent p of selection criterion g (0-based group
    index), and ("confounder", c, child) for confounder c (0-based).
    """

    edge_weights: Mapping[tuple, float]
    noise_std: float = 1.0
    selection_noise: bool = True
    weight_range: tuple[float, float] = (0.5, 1.5)

    def weight(self, key: tuple) -> float:
        try:
            return self.edge_weights[key]
        except KeyError as exc:
            raise ValueError(f"missing weight for structural edge {key}") from exc


@dataclass(frozen=True)
class GenerationResult:
    """Structure, selected dataset, and bookkeeping from one generate() call."""

    graph: SequentialCausalGraph
    dataset: Dataset
    parameters: SCMParameters
    survival_rate: float
    n_raw_sampled: int


def _structurally_new(graph: SequentialCausalGraph, kind: str, pair: tuple[int, int]) -> bool:
    i, j = pair
    if kind == "selection":
        return (i, j) not in graph.selection_pairs
    if kind == "direct":
        return (i, j) not in graph.direct_edges
    if kind == "confounder":
        return (i, j) not in graph.confounded_pairs
    raise ValueError(kind)


def _with_insertion(graph: SequentialCausalGraph, kind: str, pair: tuple[int, int]) -> SequentialCausalGraph:
    if kind == "selection":
        return SequentialCausalGraph(
            graph.n_observed,
            graph.direct_edges,
            graph.selection_groups + (frozenset(pair),),
            graph.confounder_pairs,
        )
    if kind == "direct":
        return SequentialCausalGraph(
            graph.n_observed,
            graph.direct_edges | {pair},
            graph.selection_groups,
            graph.confounder_pairs,
        )
    return SequentialCausalGraph(
        graph.n_observed,
        graph.direct_edges,
        graph.selection_groups,
        graph.confounder_pairs + (frozenset(pair),),
    )


def _admissible(graph: SequentialCausalGraph) -> bool:
    return not check_condition_1(graph) and not check_condition_2(graph)


def random_structure(spec: StructureSpec, *, check_conditions: bool = True) -> SequentialCausalGraph:
    """Draw one random structure; with checks on, the admissibility conditions hold.

    The chain 1->2->...->N loses floor((N-1)/2) random links, so the kept
    first-order relations number ceil((N-1)/2).  Per-kind extra counts are
    uniform on [0, cap]; each insertion retries random pairs until the
    checkers accept or the attempt budget is spent, so realized counts may be
    smaller than requested.  Fully determined by the spec seed.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_vars
    chain = [(m, m + 1) for m in range(1, n)]
    n_drop = (n - 1) // 2
    drop = set(rng.choice(n - 1, size=n_drop, replace=False).tolist()) if n_drop else set()
    edges = {e for idx, e in enumerate(chain) if idx not in drop}
    graph = SequentialCausalGraph(n, frozenset(edges))

    cap = spec.extra_cap
    n_sel = int(rng.integers(0, cap + 1)) if cap else 0
    if spec.max_selection_pairs is not None:
        n_sel = min(n_sel, spec.max_selection_pairs)
    n_higher = int(rng.integers(0, cap + 1)) if cap else 0
    n_conf = int(rng.integers(0, cap + 1)) if (cap and spec.allow_confounders) else 0

    def draw_pair(min_gap: int) -> tuple[int, int]:
        i = int(rng.integers(1, n - min_gap + 1))
        j = int(rng.integers(i + min_gap, n + 1))
        return i, j

    plan = [("selection", n_sel, 1), ("direct", n_higher, 2), ("confounder", n_conf, 1)]
    for kind, count, min_gap in plan:
        if n <= min_gap:
            continue
        for _ in range(count):
            for _attempt in range(_INSERTION_ATTEMPTS):
                pair = draw_pair(min_gap)
                if not _structurally_new(graph, kind, pair):
                    continue
                candidate = _with_insertion(graph, kind, pair)
                if not check_conditions or _admissible(candidate):
                    graph = candidate
                    break
    return graph


def draw_scm_parameters(
    graph: SequentialCausalGraph,
    policy: WeightPolicy = WeightPolicy(),
    seed: int | np.random.SeedSequence = 0,
) -> SCMParameters:
    """Draw a weight for every structural edge under the policy, seeded."""
    rng = np.random.default_rng(seed)
    weights: dict[tuple, float] = {}

    def draw() -> float:
        w = float(rng.uniform(policy.low, policy.high))
        if policy.random_sign and rng.random() < 0.5:
            w = -w
        return w

    for i, j in sorted(graph.direct_edges):
        weights[("direct", i, j)] = draw()
    for g, group in enumerate(graph.selection_groups):
        for p in sorted(group):
            weights[("selection", g, p)] = draw()
    for c, pair in enumerate(graph.confounder_pairs):
        for child in sorted(pair):
            weights[("confounder", c, child)] = draw()
    return SCMParameters(
        edge_weights=weights,
        noise_std=policy.noise_std,
        selection_noise=policy.selection_noise,
        weight_range=(policy.low, policy.high),
    )


class _CompiledSCM:
    """Per-variable parent lists resolved once for fast block simulation."""

    def __init__(self, graph: SequentialCausalGraph, params: SCMParameters) -> None:
        self.graph = graph
        self.params = params
        n = graph.n_observed
        self.direct_parents: list[list[tuple[int, float]]] = [[] for _ in range(n + 1)]
        for i, j in sorted(graph.direct_edges):
            self.direct_parents[j].append((i, params.weight(("direct", i, j))))
        self.conf_children: list[list[tuple[int, float]]] = []
        for c, pair in enumerate(graph.confounder_pairs):
            self.conf_children.append(
                [(child, params.weight(("confounder", c, child))) for child in sorted(pair)]
            )
        self.sel_parents: list[list[tuple[int, float]]] = []
        for g, group in enumerate(graph.selection_groups):
            self.sel_parents.append(
                [(p, params.weight(("selection", g, p))) for p in sorted(group)]
            )

    def simulate(self, m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        n = self.graph.n_observed
        conf = rng.standard_normal((m, len(self.conf_children)))
        obs = np.empty((m, n))
        conf_into: list[list[tuple[int, float]]] = [[] for _ in range(n + 1)]
        for c, children in enumerate(self.conf_children):
            for child, w in children:
                conf_into[child].append((c, w))
        for j in range(1, n + 1):
            col = self.params.noise_std * rng.standard_normal(m)
            for i, w in self.direct_parents[j]:
                col += w * obs[:, i - 1]
            for c, w in conf_into[j]:
                col += w * conf[:, c]
            obs[:, j - 1] = col
        sel = np.empty((m, len(self.sel_parents)))
        for g, parents in enumerate(self.sel_parents):
            col = (
                self.params.noise_std * rng.standard_normal(m)
                if self.params.selection_noise
                else np.zeros(m)
            )
            for p, w in parents:
                col += w * obs[:, p - 1]
            sel[:, g] = col
        return obs, sel


def sample_unselected(
    graph: SequentialCausalGraph,
    params: SCMParameters,
    m: int,
    seed: int | np.random.SeedSequence = 0,
) -> tuple[Dataset, np.ndarray]:
    """Simulate m rows of the unbiased population.

    Returns the observed data plus the matrix of selection-criterion values
    (one column per group), which never enters the dataset itself.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    scm = _CompiledSCM(graph, params)
    obs, sel = scm.simulate(m, np.random.default_rng(seed))
    return Dataset(values=obs), sel


def apply_selection(selection_values: np.ndarray, raw: Dataset) -> Dataset:
    """Keep the rows where every criterion strictly exceeds its sample mean.

    Means are taken over the given unselected sample; row order is preserved.
    With no criteria the output equals the input.
    """
    sel = np.asarray(selection_values, dtype=float)
    if sel.ndim == 1:
        sel = sel[:, None]
    if sel.shape[0] != raw.n_samples:
        raise ValueError("selection values and dataset row counts differ")
    if sel.shape[1] == 0:
        return raw
    mask = (sel > sel.mean(axis=0)).all(axis=1)
    if not mask.any():
        raise SelectionSurvivalError("no rows survive selection; sample a larger population")
    return Dataset(values=raw.values[mask], column_names=raw.column_names)


def sample_selected(
    graph: SequentialCausalGraph,
    params: SCMParameters,
    n_target: int,
    seed: int | np.random.SeedSequence = 0,
) -> tuple[Dataset, float, int]:
    """Oversample the population adaptively until n_target selected rows exist.

    Sampling proceeds in seeded blocks, each filtered against its own
    criterion means; blocks start at 4x the target and double up to 12 times.
    Returns (dataset, survival rate, rows drawn).  Raises
    :class:`SelectionSurvivalError` when the budget is exhausted, which
    signals a survival rate at or below roughly 1e-4.
    """
    if n_target < 1:
        raise ValueError("n_target must be >= 1")
    scm = _CompiledSCM(graph, params)
    n_cols = graph.n_observed + len(graph.selection_groups) + len(graph.confounder_pairs)
    chunk_cap = max(10_000, _CHUNK_FLOAT_BUDGET // max(n_cols, 1))
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rounds = root.spawn(_OVERSAMPLE_DOUBLINGS + 1)

    kept: list[np.ndarray] = []
    n_kept = 0
    n_drawn = 0
    for r, round_seq in enumerate(rounds):
        m_round = _OVERSAMPLE_START * n_target * (2**r)
        n_chunks = math.ceil(m_round / chunk_cap)
        chunks = round_seq.spawn(n_chunks)
        remaining = m_round
        for chunk_seq in chunks:
            m = min(chunk_cap, remaining)
            remaining -= m
            obs, sel = scm.simulate(m, np.random.default_rng(chunk_seq))
            n_drawn += m
            if sel.shape[1]:
                mask = (sel > sel.mean(axis=0)).all(axis=1)
                obs = obs[mask]
            if obs.shape[0]:
                kept.append(obs)
                n_kept += obs.shape[0]
            if n_kept >= n_target:
                break
        if n_kept >= n_target:
            break
    if n_kept < n_target:
        survival = n_kept / n_drawn if n_drawn else 0.0
        raise SelectionSurvivalError(
            f"only {n_kept} of the requested {n_target} rows survived after drawing "
            f"{n_drawn} (survival rate {survival:.2e}); too many selection criteria"
        )
    values = np.vstack(kept)[:n_target]
    names = tuple(f"X{v}" for v in range(1, graph.n_observed + 1))
    return Dataset(values=values, column_names=names), n_kept / n_drawn, n_drawn


def generate(
    spec: StructureSpec,
    n_target: int,
    policy: WeightPolicy = WeightPolicy(),
    *,
    check_conditions: bool = True,
) -> GenerationResult:
    """Structure + weights + selected dataset of exactly n_target rows, seeded."""
    graph = random_structure(spec, check_conditions=check_conditions)
    root = np.random.SeedSequence(spec.seed)
    weight_seq, sample_seq = root.spawn(2)
    params = draw_scm_parameters(graph, policy, seed=weight_seq)
    dataset, survival, n_drawn = sample_selected(graph, params, n_target, seed=sample_seq)
    return GenerationResult(
        graph=graph,
        dataset=dataset,
        parameters=params,
        survival_rate=survival,
        n_raw_sampled=n_drawn,
    )


def write_dataset_csv(dataset: Dataset, path) -> None:
    """Header of column names, one sample per row, 17-significant-digit text."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.names())
        for row in dataset.values:
            writer.writerow([format(v, ".17g") for v in row])


def read_dataset_csv(path) -> Dataset:
    """Inverse of :func:`write_dataset_csv`, with positioned format errors."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", line=1) from None
        if len(header) < 2:
            raise CsvFormatError("need at least two columns", line=1)
        width = len(header)
        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CsvFormatError(
                    f"expected {width} fields, found {len(row)}", line=line_no
                )
            parsed = []
            for col_no, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise CsvFormatError(
                        f"not a number: {cell!r}", line=line_no, column=col_no
                    ) from None
            rows.append(parsed)
    if not rows:
        raise CsvFormatError("no data rows", line=2)
    return Dataset(values=np.array(rows), column_names=tuple(header))
