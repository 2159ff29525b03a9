"""Allocation quantities: LB, UB, MB, edge selectors, representative sets,
the maximum-allocation recursion and the pairwise reallocation.

The recursion walks the induced subtree of a taxon set: the anchor collects
its balanced-head edges (its minimum allocation, always from the full tree)
plus the free and dependent edges available in the current scope, consuming
one free shape class per path edge; the remaining taxa split into the forest
components left after deleting the anchor's path, one representative each.
A class consumed toward some earlier taxon can still pay out to a later
taxon that is tied to the consumer, which is what the ride rule captures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .symmetry import Monomial, SymmetryAnalysis
from .tree import PhyloTree, TreeError


@dataclass
class TraceEntry:
    anchor: str
    edge: int
    category: str          # "balanced" | "own" | "ride" | "dependent"
    weight: Fraction
    length: Fraction

    @property
    def contribution(self) -> Fraction:
        return self.weight * self.length


@dataclass
class RValue:
    """Result of the maximum-allocation recursion, with its audit trace."""

    value: Fraction
    anchor: str
    trace: list[TraceEntry]
    consumed: dict[int, tuple[int, Monomial]]   # class index -> (edge, consumer monomial)
    anchors: dict[str, str]                      # taxon -> anchor that covered it


@dataclass
class AllocationReport:
    taxa: tuple[str, ...]
    lb: dict[str, Fraction]
    ub: dict[str, Fraction]
    n: dict[str, int]


@dataclass
class Representatives:
    chosen: tuple[str, ...]
    alternatives: dict[str, tuple[str, ...]]     # chosen rep -> equally good options


def lb_allocation(tree: PhyloTree, analysis: SymmetryAnalysis, taxon: str) -> Fraction:
    """Minimum allocation: balanced-head path edges at their forced shares."""
    total = Fraction(0)
    for e in tree.path_to_leaf(taxon):
        if analysis.balanced[e]:
            total += tree.length(e) / len(tree.leafset(e))
    return total


def ub_allocation(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxon: str,
    scope: Iterable[int] | None = None,
) -> Fraction:
    """Maximum allocation from a pendant scope: LB plus every non-balanced
    path edge in the scope at the anchor's tie-group share."""
    scope_set = set(scope) if scope is not None else None
    total = lb_allocation(tree, analysis, taxon)
    for e in tree.path_to_leaf(taxon):
        if analysis.balanced[e]:
            continue
        if scope_set is not None and e not in scope_set:
            continue
        total += tree.length(e) / analysis.group_size(taxon, e)
    return total


def allocation_report(tree: PhyloTree, analysis: SymmetryAnalysis) -> AllocationReport:
    return AllocationReport(
        tree.taxa,
        {t: lb_allocation(tree, analysis, t) for t in tree.taxa},
        {t: ub_allocation(tree, analysis, t) for t in tree.taxa},
        {t: analysis.n_of(t) for t in tree.taxa},
    )


def union_of_max_groups(analysis: SymmetryAnalysis, taxa: Iterable[str]) -> frozenset[str]:
    out: set[str] = set()
    for t in taxa:
        out |= analysis.max_group(t)
    return frozenset(out)


def n_weight(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxon: str,
    e: int,
    context: frozenset[str],
) -> Fraction:
    """N(x, e, Y): the fraction of x's tie group at e that Y's groups cover."""
    group = analysis.tie_group(taxon, e).taxa
    return Fraction(len(group & context), len(group))


def lb_context(tree: PhyloTree, analysis: SymmetryAnalysis, taxon: str) -> Fraction:
    """LB(x, Y, T): balanced-head path edges at full length (the context
    weights are 1 because balanced groups nest inside the maximal group)."""
    return sum(
        (tree.length(e) for e in tree.path_to_leaf(taxon) if analysis.balanced[e]),
        Fraction(0),
    )


# -- static edge selector (paper form) ---------------------------------------

def edge_selector(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxon: str,
    e_minus: Iterable[int],
    e_f: Iterable[int],
    ride_taxa: Iterable[str],
    scope: Iterable[int],
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The edge sets (E, E*) feeding the intermediate allocation.

    E collects the scope edges on the taxon's path that either lie in the
    granted set `e_minus` or belong to a class with a granted edge on the
    path of a tied taxon in `ride_taxa`.  E* extends E by the balanced-head
    path edges (taken from the full tree) and by the non-balanced dependent
    path edges in scope that are pinned by a deeper E member.
    """
    e_minus = set(e_minus)
    e_f = set(e_f)
    scope_set = set(scope)
    if not e_minus <= e_f:
        raise TreeError("granted edges must come from the independent set")
    path = tree.path_to_leaf(taxon)
    selected: set[int] = set()
    for e in path:
        if e in e_minus:
            selected.add(e)
            continue
        if e not in scope_set or not analysis.class_of[e].free:
            continue
        cls = analysis.class_of[e]
        grants = e_f & set(cls.members)
        for z in ride_taxa:
            hit = grants & tree.path_edge_set(z)
            if hit and any(analysis.ties(taxon, e, z, g) for g in hit):
                selected.add(e)
                break
    extended = set(selected)
    for e in path:
        if analysis.balanced[e]:
            extended.add(e)
    for e in path:
        if e in scope_set and analysis.h_balanced[e] and not analysis.balanced[e]:
            if any(tree.is_ancestor(e, g) and g != e for g in selected):
                extended.add(e)
    order = {e: i for i, e in enumerate(path)}
    return (
        tuple(sorted(selected, key=order.get)),
        tuple(sorted(extended, key=order.get)),
    )


def mb_allocation(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxon: str,
    e_minus: Iterable[int],
    e_f: Iterable[int],
    ride_taxa: Iterable[str],
    scope: Iterable[int],
) -> Fraction:
    """Intermediate allocation: selected edges at the tie-group share."""
    _, extended = edge_selector(tree, analysis, taxon, e_minus, e_f, ride_taxa, scope)
    return sum(
        (tree.length(e) / analysis.group_size(taxon, e) for e in extended),
        Fraction(0),
    )


# -- representatives ----------------------------------------------------------

def representatives(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxon: str,
    context_taxa: Iterable[str],
    e_f: Iterable[int] | None = None,
) -> Representatives:
    """One representative per component of F(Y - x), maximizing ties with x.

    Ties between equally good candidates are broken by taxon name; the
    passed-over equals are reported as alternatives.
    """
    y = set(context_taxa)
    if taxon not in y:
        raise TreeError(f"{taxon!r} not in the context set")
    others = y - {taxon}
    if not others:
        return Representatives((), {})
    forest = tree.removal_forest(y, {taxon})
    chosen = []
    alternatives = {}
    for comp in forest.components:
        cands = sorted(comp.taxa)
        scored = sorted(cands, key=lambda c: (-analysis.tie_count(taxon, c), c))
        best = scored[0]
        best_count = analysis.tie_count(taxon, best)
        equal = tuple(c for c in scored[1:] if analysis.tie_count(taxon, c) == best_count)
        chosen.append(best)
        if equal:
            alternatives[best] = equal
    return Representatives(tuple(sorted(chosen)), alternatives)


# -- the maximum-allocation recursion -----------------------------------------

def _components(tree: PhyloTree, edges: set[int]) -> list[tuple[int, set[int], set[str]]]:
    """Connected components of a surviving edge set, as (root, edges, taxa)."""
    comp_root: dict[int, int] = {}

    def anchor_of(head: int) -> int:
        chain = []
        v = head
        while True:
            if v in comp_root:
                root = comp_root[v]
                break
            if v not in edges:
                root = v
                break
            chain.append(v)
            v = tree.parent[v]
        for u in chain:
            comp_root[u] = root
        return root

    groups: dict[int, set[int]] = {}
    for e in edges:
        groups.setdefault(anchor_of(e), set()).add(e)
    out = []
    for root, members in groups.items():
        taxa = {tree.labels[v] for v in members if tree.is_leaf(v)}
        out.append((root, members, taxa))
    out.sort(key=lambda item: min(item[2]) if item[2] else "")
    return out


def max_alloc_r(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxa_z: Iterable[str],
    context_y: Iterable[str],
    e_f: Iterable[int] | None = None,
    anchor: str | None = None,
) -> RValue:
    """Maximum allocation r for T(Z) in the weighting context Y.

    With an anchor this is the anchored recursion value (including the
    minimum-allocation terms); without one it is the maximum over anchors
    minus the summed context minimum allocations, the right-hand side of the
    allocation facets.
    """
    z = sorted(set(taxa_z))
    y = frozenset(context_y)
    if not set(z) <= set(tree.taxa):
        raise TreeError("Z contains unknown taxa")
    if anchor is not None and anchor not in z:
        raise TreeError("anchor must belong to Z")
    context = union_of_max_groups(analysis, y)

    def rec(
        a: str,
        taxa: set[str],
        scope: set[int],
        consumed: dict[int, tuple[int, Monomial]],
        anchors: dict[str, str],
        trace: list[TraceEntry],
    ) -> Fraction:
        anchors[a] = a
        path = tree.path_to_leaf(a)
        own: list[int] = []
        ride: list[int] = []
        for e in path:
            if e not in scope or not analysis.class_of[e].free:
                continue
            cls = analysis.class_of[e].index
            if cls not in consumed:
                consumed[cls] = (e, analysis.monomial(a, e))
                own.append(e)
            else:
                _, mono = consumed[cls]
                if analysis.monomial(a, e) == mono:
                    ride.append(e)
        selected = set(own) | set(ride)
        dependent = [
            e
            for e in path
            if e in scope
            and analysis.h_balanced[e]
            and not analysis.balanced[e]
            and any(tree.is_ancestor(e, g) and g != e for g in selected)
        ]
        total = Fraction(0)
        for e in path:
            if analysis.balanced[e]:
                entry = TraceEntry(a, e, "balanced", Fraction(1), tree.length(e))
                trace.append(entry)
                total += entry.contribution
        for e, cat in [*((e, "own") for e in own), *((e, "ride") for e in ride),
                       *((e, "dependent") for e in dependent)]:
            w = n_weight(tree, analysis, a, e, context)
            entry = TraceEntry(a, e, cat, w, tree.length(e))
            trace.append(entry)
            total += entry.contribution
        rest = taxa - {a}
        remaining = scope - set(path)
        comps = _components(tree, remaining)
        covered: set[str] = set()
        for _, comp_edges, comp_taxa in comps:
            members = comp_taxa & rest
            if not members:
                continue
            covered |= members
            ranked = sorted(members, key=lambda c: (-analysis.tie_count(a, c), c))
            rep = ranked[0]
            total += rec(rep, members, comp_edges, consumed, anchors, trace)
        if covered != rest:
            raise AssertionError("forest components failed to cover the remaining taxa")
        return total

    def run(a: str) -> RValue:
        scope = set(tree.induced_edge_set(z))
        consumed: dict[int, tuple[int, Monomial]] = {}
        anchors: dict[str, str] = {}
        trace: list[TraceEntry] = []
        value = rec(a, set(z), scope, consumed, anchors, trace)
        return RValue(value, a, trace, consumed, anchors)

    if anchor is not None:
        return run(anchor)
    best: RValue | None = None
    lb_sum = sum((lb_context(tree, analysis, t) for t in z), Fraction(0))
    for a in z:
        result = run(a)
        if best is None or result.value > best.value:
            best = result
    assert best is not None
    best.value -= lb_sum
    return best


def realloc(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    x: str,
    y: str,
    e_f: Iterable[int] | None = None,
) -> Fraction:
    """Maximum reallocation from y to x: shared non-balanced path edges whose
    tie group at x excludes y, at x's tie-group share."""
    if x == y:
        raise TreeError("reallocation needs two distinct taxa")
    shared = tree.path_edge_set(x) & tree.path_edge_set(y)
    total = Fraction(0)
    for e in shared:
        if analysis.balanced[e]:
            continue
        group = analysis.tie_group(x, e).taxa
        if y in group:
            continue
        total += tree.length(e) / len(group)
    return total
