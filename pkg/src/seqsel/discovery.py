"""Three-stage identification of selection, direct, and confounded dependencies.

Stage one scans variable pairs from the longest lag down and keeps candidates
that stay dependent under a family of designed conditioning sets.  Stage two
walks the candidates in descending order and separates selection pairs from
direct relations (or both) by probing whether the later variable acts as a
collider towards a reference variable.  Stage three, used only when latent
confounders are allowed, tests consecutive co-pointing direct relations and
replaces the spurious ones with a confounder.

Each stage mutates and returns a :class:`DiscoveryState`; :func:`discover`
wires them together.  Stages are sequential by design: later queries condition
on earlier outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from .ci import CIProvider, CIQuery, CITestResult
from .graph import SequentialCausalGraph

__all__ = ["DiscoveryOptions", "DiscoveryState", "stage_one", "stage_two", "stage_three", "discover"]


@dataclass(frozen=True)
class DiscoveryOptions:
    """Run switches: confounder stage on/off, provider level, trace capture."""

    with_confounders: bool = True
    alpha: float = 0.05
    trace: bool = False

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")


@dataclass
class DiscoveryState:
    """Working memory of the identification run.

    ``r_lists[i]`` holds, in discovery order (descending lag), the partners j
    of candidate pairs (i, j); ``l_list`` logs the i of every accepted pair.
    Edges carry their discovery order so latent numbering is reproducible.
    """

    n_vars: int
    r_lists: dict[int, list[int]] = field(default_factory=dict)
    l_list: list[int] = field(default_factory=list)
    direct_edges: list[tuple[int, int]] = field(default_factory=list)
    selection_groups: list[tuple[int, int]] = field(default_factory=list)
    confounder_pairs: list[tuple[int, int]] = field(default_factory=list)
    s_counter: int = 0
    c_counter: int = 0
    trace: list[dict] | None = None

    @classmethod
    def initial(cls, n_vars: int, trace: bool = False) -> "DiscoveryState":
        if n_vars < 2:
            raise ValueError("need at least two variables")
        return cls(
            n_vars=n_vars,
            r_lists={i: [] for i in range(1, n_vars + 1)},
            trace=[] if trace else None,
        )

    def to_graph(self) -> SequentialCausalGraph:
        return SequentialCausalGraph(
            n_observed=self.n_vars,
            direct_edges=frozenset(self.direct_edges),
            selection_groups=tuple(frozenset(p) for p in self.selection_groups),
            confounder_pairs=tuple(frozenset(p) for p in self.confounder_pairs),
        )


def _pre(j: int, *exclude: int) -> set[int]:
    """Indices 1..j-1 without the excluded ones: the default conditioning set."""
    out = set(range(1, j))
    out.difference_update(exclude)
    return out


def _ask(
    state: DiscoveryState,
    ci: CIProvider,
    stage: int,
    pair: tuple[int, int],
    a: int,
    b: int,
    conditioning: set[int],
) -> CITestResult:
    query = CIQuery(a, b, tuple(sorted(conditioning)))
    result = ci.is_independent(query)
    if state.trace is not None:
        state.trace.append(
            {
                "stage": stage,
                "pair": list(pair),
                "i": a,
                "j": b,
                "conditioning": list(query.conditioning),
                "independent": result.independent,
            }
        )
    return result


def stage_one(ci: CIProvider, n_vars: int, *, trace: bool = False) -> DiscoveryState:
    """Collect candidate dependent pairs, longest lag first.

    A pair (i, j) is kept iff it is dependent given everything before j except
    i, and stays dependent when that set is augmented with j+1 and previously
    kept partners of i: augmentations are searched over all subsets of the
    kept partners plus j+1 (smallest first), and a single separating one
    discards the pair.  Indices beyond N contribute nothing to conditioning
    sets; with no kept partner and j = N the augmentation search reduces to
    repeating the base test.
    """
    state = DiscoveryState.initial(n_vars, trace=trace)
    for lag in range(n_vars - 1, 0, -1):
        for i in range(1, n_vars - lag + 1):
            j = i + lag
            base = _pre(j, i)
            if _ask(state, ci, 1, (i, j), i, j, base).independent:
                continue
            pool = set(state.r_lists[i])
            pool.update(v - 1 for v in state.r_lists[i] if v - 1 > j)
            if j + 1 <= n_vars:
                pool.add(j + 1)
            if not _separable(state, ci, 1, (i, j), i, j, base, sorted(pool)):
                state.l_list.append(i)
                state.r_lists[i].append(j)
    return state


def _t_set(state: DiscoveryState, above: int, members: set[int] | None = None) -> set[int]:
    """Higher-indexed endpoints of recorded selection pairs beyond ``above``.

    With ``members`` given, only pairs whose lower endpoint is in that set
    qualify (the stage-three variant); otherwise any recorded pair counts.
    """
    out = set()
    for p, v in state.selection_groups:
        if v > above and (members is None or p in members):
            out.add(v)
    return out


def _separable(
    state: DiscoveryState,
    ci: CIProvider,
    stage: int,
    pair: tuple[int, int],
    a: int,
    b: int,
    base: set[int],
    pool: list[int],
) -> bool:
    """True iff some subset of the pool, added to base, separates a from b.

    Subsets are searched smallest first in sorted order and the search stops
    at the first separating one, so the issued query sequence is
    deterministic.
    """
    for size in range(len(pool) + 1):
        for subset in combinations(pool, size):
            if _ask(state, ci, stage, pair, a, b, base | set(subset)).independent:
                return True
    return False


def _blocker_pool(state: DiscoveryState, j: int) -> list[int]:
    """Candidate conditioning augmentations for classifying a pair ending at j.

    The pool holds j+1 plus the higher endpoints of recorded selection pairs
    beyond j together with their immediate predecessors: conditioning such an
    endpoint closes the path through its selection criterion but can open the
    endpoint as a collider, which its predecessor then reblocks.
    """
    pool = set()
    if j + 1 <= state.n_vars:
        pool.add(j + 1)
    for v in _t_set(state, above=j):
        pool.add(v)
        if v - 1 > j:
            pool.add(v - 1)
    return sorted(pool)


def stage_two(ci: CIProvider, state: DiscoveryState) -> DiscoveryState:
    """Classify each candidate pair as selection, direct, or both.

    Pairs are consumed in descending i then descending j, skipping partners
    that an earlier classification removed.  The reference variable k walks
    down from j-1 through the kept partners of i; adjacent pairs (k = i) are
    direct by construction.  For the rest, the pair is a selection pair if
    some augmented conditioning set containing j separates i from k (j is not
    a collider towards k), and additionally a direct relation unless dropping
    j from the conditioning still leaves i and k inseparable.  A pair
    classified as both retires the spurious candidate at (i, j-1).
    """
    for i in sorted(set(state.l_list), reverse=True):
        processed: set[int] = set()
        while True:
            live = [j for j in state.r_lists[i] if j not in processed]
            if not live:
                break
            j = max(live)
            processed.add(j)
            k = j - 1
            while k in state.r_lists[i] and k > i + 1:
                k -= 1
            if k == i:
                state.direct_edges.append((i, j))
                continue
            pool = _blocker_pool(state, j)
            if _separable(state, ci, 2, (i, j), i, k, _pre(k, i) | {j}, pool):
                state.selection_groups.append((i, j))
                state.s_counter += 1
            elif _separable(state, ci, 2, (i, j), i, k, _pre(k, i), pool):
                state.direct_edges.append((i, j))
            else:
                state.direct_edges.append((i, j))
                state.selection_groups.append((i, j))
                state.s_counter += 1
                if j - 1 in state.r_lists[i]:
                    state.r_lists[i].remove(j - 1)
    return state


def stage_three(ci: CIProvider, state: DiscoveryState) -> DiscoveryState:
    """Identify confounded pairs among co-pointing direct relations.

    Whenever both (i-1, j) and (i, j) are held as direct relations, the
    earlier endpoint is tested against j without conditioning on i or i-1;
    independence means i screened a latent common cause, so both edges are
    replaced by the confounded pair (i, j).  Removal takes effect immediately
    for later iterations.
    """
    n = state.n_vars
    held = set(state.direct_edges)
    removed: set[tuple[int, int]] = set()
    for j in range(n, 2, -1):
        for i in range(n - 1, 1, -1):
            if i >= j:
                continue
            if (i, j) not in held or (i - 1, j) not in held:
                continue
            t_set = _t_set(state, above=j, members={i - 1, i, i + 1})
            extra = {j + 1} if j + 1 <= n else set()
            cond = _pre(j, i - 1, i) | extra | t_set
            res = _ask(state, ci, 3, (i, j), i - 1, j, cond)
            if res.independent:
                state.confounder_pairs.append((i, j))
                state.c_counter += 1
                held.discard((i, j))
                held.discard((i - 1, j))
                removed.update({(i, j), (i - 1, j)})
    if removed:
        state.direct_edges = [e for e in state.direct_edges if e not in removed]
    return state


def discover(
    ci: CIProvider,
    n_vars: int,
    options: DiscoveryOptions | None = None,
) -> SequentialCausalGraph:
    """Run the full identification and return the estimated structure.

    With a perfect oracle over an admissible structure the output equals the
    ground truth; stage three runs only when ``with_confounders`` is set.
    """
    options = options or DiscoveryOptions()
    state = stage_one(ci, n_vars, trace=options.trace)
    state = stage_two(ci, state)
    if options.with_confounders:
        state = stage_three(ci, state)
    return state.to_graph()
