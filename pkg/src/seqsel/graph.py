"""Causal graph model for temporally ordered variables with latent structure.

Observed variables are indexed 1..N in temporal order.  Latent structure is
carried in two forms: selection groups (the observed parents of one latent
selection criterion, which is conditioned on in every independence query
because only samples meeting the criterion are observed) and confounder pairs
(the two observed children of one latent common cause, which is never
conditioned on).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from itertools import combinations
from typing import Iterable

import networkx as nx

__all__ = [
    "DependencyKind",
    "ConditionViolation",
    "SequentialCausalGraph",
    "check_condition_1",
    "check_condition_2",
    "merge_selection_cliques",
]


class DependencyKind(Enum):
    """Classification of a dependent pair of observed variables."""

    SELECTION = "selection"
    DIRECT = "direct"
    BOTH = "both"
    CONFOUNDED = "confounded"


@dataclass(frozen=True)
class ConditionViolation:
    """One violated clause of the structural admissibility conditions."""

    condition_id: str  # "C1_i", "C1_ii", or "C2"
    offending_pairs: tuple[tuple[int, int], ...]
    description: str


def _as_pair(item: Iterable[int]) -> tuple[int, int]:
    a, b = sorted(int(v) for v in item)
    return a, b


@dataclass(frozen=True)
class SequentialCausalGraph:
    """Immutable causal structure over N temporally ordered observed variables.

    ``direct_edges`` holds ordered pairs (i, j) with i < j.  Each entry of
    ``selection_groups`` is the set of observed parents of one latent
    selection criterion; each entry of ``confounder_pairs`` is the pair of
    observed children of one latent common cause.  Duplicate groups/pairs are
    collapsed at construction; list order is preserved and provides the
    numbering used by :meth:`to_dot`.
    """

    n_observed: int
    direct_edges: frozenset = frozenset()
    selection_groups: tuple = ()
    confounder_pairs: tuple = ()

    def __post_init__(self) -> None:
        n = int(self.n_observed)
        if n < 1:
            raise ValueError("n_observed must be >= 1")
        object.__setattr__(self, "n_observed", n)

        edges = frozenset((int(i), int(j)) for i, j in self.direct_edges)
        for i, j in edges:
            if i >= j:
                raise ValueError(
                    f"direct edge ({i}, {j}) rejected: edges must point forward in time (i < j)"
                )
            if i < 1 or j > n:
                raise ValueError(f"direct edge ({i}, {j}) out of range 1..{n}")
        object.__setattr__(self, "direct_edges", edges)

        groups: list[frozenset[int]] = []
        for g in self.selection_groups:
            fs = frozenset(int(v) for v in g)
            if len(fs) < 2:
                raise ValueError(f"selection group {sorted(fs)} needs at least 2 members")
            if not all(1 <= v <= n for v in fs):
                raise ValueError(f"selection group {sorted(fs)} out of range 1..{n}")
            if fs not in groups:
                groups.append(fs)
        object.__setattr__(self, "selection_groups", tuple(groups))

        pairs: list[frozenset[int]] = []
        for p in self.confounder_pairs:
            fs = frozenset(int(v) for v in p)
            if len(fs) != 2:
                raise ValueError(f"confounder pair {sorted(fs)} must have exactly 2 distinct members")
            if not all(1 <= v <= n for v in fs):
                raise ValueError(f"confounder pair {sorted(fs)} out of range 1..{n}")
            if fs not in pairs:
                pairs.append(fs)
        object.__setattr__(self, "confounder_pairs", tuple(pairs))

    # ------------------------------------------------------------------ pairs

    @cached_property
    def selection_pairs(self) -> frozenset[tuple[int, int]]:
        """All ordered pairs (i, j), i < j, that share a selection criterion."""
        out: set[tuple[int, int]] = set()
        for g in self.selection_groups:
            out.update(combinations(sorted(g), 2))
        return frozenset(out)

    @cached_property
    def confounded_pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset(_as_pair(p) for p in self.confounder_pairs)

    @cached_property
    def dependent_pairs(self) -> frozenset[tuple[int, int]]:
        return self.direct_edges | self.selection_pairs | self.confounded_pairs

    @cached_property
    def selection_members(self) -> frozenset[int]:
        """Observed variables that cause at least one selection criterion."""
        out: set[int] = set()
        for g in self.selection_groups:
            out.update(g)
        return frozenset(out)

    def _check_index(self, v: int) -> None:
        if not 1 <= v <= self.n_observed:
            raise ValueError(f"variable index {v} out of range 1..{self.n_observed}")

    def dependency_kind(self, i: int, j: int) -> DependencyKind | None:
        """Kind of the dependent pair (i, j), or None if not dependent.

        A pair that is simultaneously a selection pair and a direct relation
        reports BOTH.  On graphs with overlapping tags outside that case the
        precedence is selection > direct > confounded.
        """
        self._check_index(i)
        self._check_index(j)
        if not i < j:
            raise ValueError(f"need i < j, got ({i}, {j})")
        pair = (i, j)
        sel = pair in self.selection_pairs
        direct = pair in self.direct_edges
        if sel and direct:
            return DependencyKind.BOTH
        if sel:
            return DependencyKind.SELECTION
        if direct:
            return DependencyKind.DIRECT
        if pair in self.confounded_pairs:
            return DependencyKind.CONFOUNDED
        return None

    # ------------------------------------------------------- full-graph view

    @cached_property
    def _adjacency(self) -> tuple[dict[int, tuple[int, ...]], dict[int, tuple[int, ...]], frozenset[int]]:
        """Parent/child maps over observed plus latent nodes.

        Node ids: 1..N observed, N+1..N+G selection criteria, then one id per
        confounder.  Selection ids are returned separately because they are
        conditioned on in every query.
        """
        n = self.n_observed
        parents: dict[int, list[int]] = {}
        children: dict[int, list[int]] = {}

        def add(u: int, v: int) -> None:
            children.setdefault(u, []).append(v)
            parents.setdefault(v, []).append(u)

        for i, j in sorted(self.direct_edges):
            add(i, j)
        sel_ids = []
        for u, g in enumerate(self.selection_groups):
            s = n + 1 + u
            sel_ids.append(s)
            for p in sorted(g):
                add(p, s)
        conf_base = n + len(self.selection_groups)
        for u, pair in enumerate(self.confounder_pairs):
            c = conf_base + 1 + u
            for ch in sorted(pair):
                add(c, ch)
        par = {k: tuple(v) for k, v in parents.items()}
        chi = {k: tuple(v) for k, v in children.items()}
        return par, chi, frozenset(sel_ids)

    def d_separated(self, i: int, j: int, conditioning: Iterable[int] = ()) -> bool:
        """True iff every traversable path between i and j is blocked.

        The conditioning set is always augmented with every latent selection
        criterion (the data are drawn conditional on them); latent confounders
        are never conditioned.  A path is blocked when it passes a conditioned
        chain or fork node, or a collider that is not itself conditioned:
        collider status is decided by direct membership in the conditioning
        set, with no ancestor clause.  A path is traversable when it crosses
        at most one latent node; dependence carried across two or more latent
        bridges is treated as absent, which is the relation the identification
        guarantees are stated against and the regime in which the
        finite-sample test operates.  Because these rules are not closed under
        walk-shortening, connection is decided over simple paths by a
        depth-first search that prunes at the first blocked junction.
        """
        self._check_index(i)
        self._check_index(j)
        if i == j:
            raise ValueError("endpoints must differ")
        z_obs = set()
        for v in conditioning:
            v = int(v)
            self._check_index(v)
            z_obs.add(v)
        if i in z_obs or j in z_obs:
            raise ValueError("endpoints may not appear in the conditioning set")

        parents, children, sel_ids = self._adjacency
        z = z_obs | set(sel_ids)
        n_obs = self.n_observed

        # DFS over open partial paths.  State: current node, whether the last
        # edge points into it, and how many latent nodes were crossed;
        # extending through a node demands collider (both edges in) iff the
        # node is conditioned.
        def extend(node: int, arrived_into: bool, latents: int, on_path: set[int]) -> bool:
            conditioned = node in z
            for child in children.get(node, ()):
                # leave via an out-edge: node is a chain or fork, must be free
                if conditioned or child in on_path:
                    continue
                budget = latents + (child > n_obs)
                if budget > 1:
                    continue
                if child == j:
                    return True
                on_path.add(child)
                if extend(child, True, budget, on_path):
                    return True
                on_path.remove(child)
            for parent in parents.get(node, ()):
                # leave via an in-edge: collider if we also arrived on one
                passable = conditioned if arrived_into else not conditioned
                if not passable or parent in on_path:
                    continue
                budget = latents + (parent > n_obs)
                if budget > 1:
                    continue
                if parent == j:
                    return True
                on_path.add(parent)
                if extend(parent, False, budget, on_path):
                    return True
                on_path.remove(parent)
            return False

        on_path = {i}
        for child in children.get(i, ()):
            if child == j:
                return False
            on_path.add(child)
            if extend(child, True, int(child > n_obs), on_path):
                return False
            on_path.remove(child)
        for parent in parents.get(i, ()):
            if parent == j:
                return False
            on_path.add(parent)
            if extend(parent, False, int(parent > n_obs), on_path):
                return False
            on_path.remove(parent)
        return True

    # ---------------------------------------------------------- serialization

    def to_json_dict(self) -> dict:
        return {
            "n_observed": self.n_observed,
            "direct_edges": [list(e) for e in sorted(self.direct_edges)],
            "selection_groups": sorted(sorted(g) for g in self.selection_groups),
            "confounder_pairs": sorted(sorted(p) for p in self.confounder_pairs),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SequentialCausalGraph":
        return cls(
            n_observed=d["n_observed"],
            direct_edges=frozenset(tuple(e) for e in d["direct_edges"]),
            selection_groups=tuple(frozenset(g) for g in d["selection_groups"]),
            confounder_pairs=tuple(frozenset(p) for p in d["confounder_pairs"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SequentialCausalGraph":
        return cls.from_json_dict(json.loads(text))

    def to_dot(self) -> str:
        """Deterministic DOT rendering.

        Observed variables are plain circles X1..XN, selection criteria are
        double circles S1..SG with incoming edges from their parents, and
        confounders are dashed circles C1..CK with outgoing edges to their
        children.
        """
        lines = ["digraph G {", "  rankdir=LR;"]
        for v in range(1, self.n_observed + 1):
            lines.append(f"  X{v} [shape=circle];")
        for u in range(len(self.selection_groups)):
            lines.append(f"  S{u + 1} [shape=circle, peripheries=2];")
        for u in range(len(self.confounder_pairs)):
            lines.append(f"  C{u + 1} [shape=circle, style=dashed];")
        for i, j in sorted(self.direct_edges):
            lines.append(f"  X{i} -> X{j};")
        for u, g in enumerate(self.selection_groups):
            for p in sorted(g):
                lines.append(f"  X{p} -> S{u + 1};")
        for u, pair in enumerate(self.confounder_pairs):
            for ch in sorted(pair):
                lines.append(f"  C{u + 1} -> X{ch};")
        lines.append("}")
        return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ checkers


def _dep(pairs: frozenset[tuple[int, int]], a: int, b: int, n: int) -> bool:
    """Pair membership with out-of-range and degenerate indices read as absent."""
    if a >= b or a < 1 or b > n:
        return False
    return (a, b) in pairs


def check_condition_1(graph: SequentialCausalGraph) -> list[ConditionViolation]:
    """Admissibility clauses for selection pairs and direct/confounded pairs.

    Returns one violation per failed clause; an empty list means the structure
    is in the family the identification procedure provably recovers (absent
    confounder-specific clauses, which live in :func:`check_condition_2`).
    """
    n = graph.n_observed
    dep = graph.dependent_pairs
    direct = graph.direct_edges
    sel = graph.selection_pairs
    conf = graph.confounded_pairs
    out: list[ConditionViolation] = []

    ho_parent_count: dict[int, int] = {}
    for p, q in direct:
        if q > p + 1:
            ho_parent_count[q] = ho_parent_count.get(q, 0) + 1

    for i, j in sorted(sel):
        if j - 1 == i or not _dep(dep, j - 1, j, n):
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((i, j),),
                    f"selection pair ({i},{j}) requires a dependent pair ({j - 1},{j}) with {j - 1} != {i}",
                )
            )
        if _dep(dep, i, j + 1, n):
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((i, j), (i, j + 1)),
                    f"selection pair ({i},{j}) forbids a dependent pair ({i},{j + 1})",
                )
            )
        if ho_parent_count.get(j, 0) >= 2:
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((i, j),),
                    f"X{j} closes selection pair ({i},{j}) but receives "
                    f"{ho_parent_count[j]} higher-order direct relations",
                )
            )
        if j == i + 2 and _dep(direct, i, i + 1, n):
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((i, j), (i, i + 1)),
                    f"selection pair ({i},{j}) spanning two steps forbids the direct relation ({i},{i + 1})",
                )
            )

    for w, v in sorted(direct):
        if v > w + 1 and v in graph.selection_members and (w, v) not in sel:
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((w, v),),
                    f"X{v} causes a selection criterion, so the higher-order direct relation "
                    f"({w},{v}) must itself be a selection pair",
                )
            )

    # Degenerate blocking: every pair that is neither dependent nor a known
    # transient candidate must be separable from the default conditioning set
    # by some augmentation drawn from the variables the scan can reach (the
    # candidate partners beyond j, their immediate predecessors, and j+1).
    # A pair for which every inclusion/exclusion choice leaves a connecting
    # path can never be discarded and poisons later classifications.
    def shadow(i: int, m: int) -> bool:
        return _dep(sel & direct, i, m + 1, n) or _dep(conf, i + 1, m, n)

    partner_sets: dict[int, list[int]] = {
        i: [m for m in range(i + 1, n + 1) if _dep(dep, i, m, n) or shadow(i, m)]
        for i in range(1, n + 1)
    }
    for i in range(1, n):
        for j in range(i + 1, n + 1):
            if _dep(dep, i, j, n) or shadow(i, j):
                continue
            base = frozenset(v for v in range(1, j) if v != i)
            if graph.d_separated(i, j, base):
                continue
            members = [m for m in partner_sets[i] if m > j]
            pool = set(members)
            pool.update(m - 1 for m in members if m - 1 > j)
            if j + 1 <= n:
                pool.add(j + 1)
            pool_sorted = sorted(pool)
            for size in range(1, len(pool_sorted) + 1):
                if any(
                    graph.d_separated(i, j, base | set(subset))
                    for subset in combinations(pool_sorted, size)
                ):
                    break
            else:
                out.append(
                    ConditionViolation(
                        "C1_ii",
                        ((i, j),),
                        f"no augmentation of the default conditioning set separates the "
                        f"non-dependent pair ({i},{j})",
                    )
                )

    # A pair that is both a selection pair and a direct relation leaves a
    # spurious candidate at (i, j-1); classifying the pair then consults a
    # reference variable below j-1, which must stay connected to X_j.
    for i, j in sorted(sel & direct):
        if j >= i + 3 and not _dep(dep, j - 2, j - 1, n):
            out.append(
                ConditionViolation(
                    "C1_i",
                    ((i, j),),
                    f"pair ({i},{j}) is both selection and direct, which requires a dependent pair ({j - 2},{j - 1})",
                )
            )

    for i, j in sorted(direct | conf):
        if not _dep(dep, j - 1, j, n) and j - 1 != i:
            out.append(
                ConditionViolation(
                    "C1_ii",
                    ((i, j),),
                    f"dependent pair ({i},{j}) requires a dependent pair ({j - 1},{j})",
                )
            )
        if j in graph.selection_members and j - 1 != i and _dep(dep, i, j - 1, n):
            out.append(
                ConditionViolation(
                    "C1_ii",
                    ((i, j), (i, j - 1)),
                    f"X{j} causes a selection criterion, so pair ({i},{j}) forbids a dependent pair ({i},{j - 1})",
                )
            )
        if j == i + 2 and _dep(dep, i, j + 1, n):
            out.append(
                ConditionViolation(
                    "C1_ii",
                    ((i, j), (i, j + 1)),
                    f"two-step dependent pair ({i},{j}) forbids a dependent pair ({i},{j + 1})",
                )
            )

    # Classifying a pair (i, j) consults a reference variable scanned down
    # from j-1 through the candidate partners of i, which must terminate on a
    # variable not itself entangled with i.  Candidate partners include the
    # two transient classes: the shadow of a pair at j+1 that is both
    # selection and direct, and the shadow of a latent common cause over
    # (i+1, j).
    both = sel & direct

    def entangled(i: int, m: int) -> bool:
        return (
            _dep(dep, i, m, n)
            or _dep(both, i, m + 1, n)
            or _dep(conf, i + 1, m, n)
        )

    shadows = {(a - 1, b) for a, b in conf if a >= 2}
    for i, j in sorted((dep | shadows)):
        if j < i + 2:
            continue
        if all(entangled(i, m) for m in range(i + 1, j)):
            out.append(
                ConditionViolation(
                    "C1_ii",
                    ((i, j),),
                    f"every variable between {i} and {j} is entangled with {i}, leaving "
                    f"no reference variable to classify the pair ({i},{j})",
                )
            )
    return out


def check_condition_2(graph: SequentialCausalGraph) -> list[ConditionViolation]:
    """Admissibility clauses for confounded pairs.

    Empty iff every confounded pair sits in a neighbourhood where the latent
    common cause is distinguishable from the two spurious direct relations it
    would otherwise masquerade as.  Clauses referencing indices outside 1..N
    are vacuously satisfied.
    """
    n = graph.n_observed
    dep = graph.dependent_pairs
    direct = graph.direct_edges
    sel = graph.selection_pairs
    conf_list = sorted(graph.confounded_pairs)
    out: list[ConditionViolation] = []

    ho_members: set[int] = set()
    for p, q in direct:
        if q > p + 1:
            ho_members.update((p, q))

    def viol(pairs: tuple[tuple[int, int], ...], text: str) -> None:
        out.append(ConditionViolation("C2", pairs, text))

    for a, b in conf_list:
        if a == 1 or (a - 1, a) not in direct:
            viol(((a, b),), f"confounded pair ({a},{b}) requires the direct relation ({a - 1},{a})")
        if a >= 2:
            if _dep(dep, a - 1, b - 1, n):
                viol(((a, b), (a - 1, b - 1)), f"confounded pair ({a},{b}) forbids a dependent pair ({a - 1},{b - 1})")
            if _dep(sel, a - 1, b, n):
                viol(((a, b), (a - 1, b)), f"confounded pair ({a},{b}) forbids a selection pair ({a - 1},{b})")
            if _dep(direct, a - 1, a + 1, n):
                viol(((a, b), (a - 1, a + 1)), f"confounded pair ({a},{b}) forbids the direct relation ({a - 1},{a + 1})")
        if (a, b) in sel:
            viol(((a, b),), f"confounded pair ({a},{b}) may not also be a selection pair")
        if (a, b) in direct:
            viol(((a, b),), f"confounded pair ({a},{b}) may not also be a direct relation")
        if b in graph.selection_members:
            viol(((a, b),), f"X{b} of confounded pair ({a},{b}) may not cause a selection criterion")
        if a + 1 < b - 1 and _dep(dep, a + 1, b - 1, n):
            # The enclosed first-order direct relation is harmless; anything
            # else between the inner neighbours re-connects the endpoints.
            plain_first_order = (
                b == a + 3
                and (a + 1, a + 2) in direct
                and (a + 1, a + 2) not in sel
                and (a + 1, a + 2) not in graph.confounded_pairs
            )
            if not plain_first_order:
                viol(((a, b), (a + 1, b - 1)), f"confounded pair ({a},{b}) forbids a dependent pair ({a + 1},{b - 1})")
        if _dep(direct, a + 1, b + 1, n):
            viol(((a, b), (a + 1, b + 1)), f"confounded pair ({a},{b}) forbids the direct relation ({a + 1},{b + 1})")
        if _dep(dep, a - 1, b + 1, n):
            viol(((a, b), (a - 1, b + 1)), f"confounded pair ({a},{b}) forbids a dependent pair ({a - 1},{b + 1})")
        for a2, b2 in conf_list:
            if (a2, b2) != (a, b) and {a, b} & {a2, b2}:
                viol(((a, b), (a2, b2)), f"variable shared by confounded pairs ({a},{b}) and ({a2},{b2})")
        for v in (a, b):
            if v in ho_members:
                viol(((a, b),), f"X{v} of confounded pair ({a},{b}) participates in a higher-order direct relation")
    return out


def merge_selection_cliques(graph: SequentialCausalGraph) -> SequentialCausalGraph:
    """Collapse every maximal all-pairs selection set into a single group.

    When every pair inside a set of observed variables is a selection pair,
    one shared criterion over the whole set induces the same conditional
    dependence structure as the pairwise criteria, so the groups are merged.
    The observed structure is unchanged and the operation is idempotent.
    """
    if not graph.selection_groups:
        return graph
    und = nx.Graph()
    und.add_edges_from(graph.selection_pairs)
    cliques = sorted((sorted(c) for c in nx.find_cliques(und)), key=tuple)
    groups = tuple(frozenset(c) for c in cliques if len(c) >= 2)
    return SequentialCausalGraph(
        n_observed=graph.n_observed,
        direct_edges=graph.direct_edges,
        selection_groups=groups,
        confounder_pairs=graph.confounder_pairs,
    )
