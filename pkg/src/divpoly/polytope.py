"""The diversity index polytope: extreme points, canonical bases, facets.

Extreme points are the scores of the split parametrization at 0/1 corners.
The facet family pairs the n lower-bound inequalities with one allocation
inequality per qualifying taxon subset Z; candidates are generated from
canonical bases, normalized modulo the affine hull (distinct generators can
describe one geometric facet, and some reduce to lower-bound facets), and
every survivor is certified against the extreme points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

from . import allocation, hull, linalg
from .indices import IndexMatrix, SplitAssignment, materialize_gamma, score
from .symmetry import SymmetryAnalysis
from .tree import PhyloTree, TreeError


class PolytopeError(ValueError):
    """A certified property of the description failed to hold."""


@dataclass
class Inequality:
    coeffs: tuple[Fraction, ...]          # one per taxon, in tree.taxa order
    rhs: Fraction
    sense: str                            # "<=" or ">="
    kind: str                             # "lb" | "allocation"
    generator: dict
    normal_form: tuple = ()
    support_points: tuple[int, ...] = ()  # indices into the extreme point list
    support_count: int = 0                # affinely independent tight extremes

    def evaluate(self, s: Sequence[Fraction]) -> Fraction:
        return sum(c * x for c, x in zip(self.coeffs, s))

    def holds(self, s: Sequence[Fraction]) -> bool:
        v = self.evaluate(s)
        return v <= self.rhs if self.sense == "<=" else v >= self.rhs


@dataclass
class RejectedCandidate:
    inequality: Inequality
    support_dim: int
    reason: str


@dataclass
class CanonicalBasis:
    anchor: str
    edges: tuple[int, ...]                # E_B(x_i): one edge per free class
    phi: dict[int, str]                   # basis edge -> witness taxon
    beta0: dict[int, Fraction]            # class index -> corner value
    s0: tuple[Fraction, ...]
    vectors: dict[int, tuple[Fraction, ...]]   # basis edge -> perturbed score

    @property
    def taxa(self) -> tuple[str, ...]:
        return tuple(sorted({self.anchor, *self.phi.values()}))

    def matrix(self) -> list[tuple[Fraction, ...]]:
        return [self.s0, *(self.vectors[e] for e in self.edges)]


@dataclass
class PolytopeDescription:
    tree: PhyloTree
    analysis: SymmetryAnalysis
    extreme: list[tuple[Fraction, ...]]
    beta_witness: dict[tuple[Fraction, ...], dict[str, Fraction]]
    affine_equalities: list[tuple[tuple[Fraction, ...], Fraction]]
    facets: list[Inequality]
    rejected: list[RejectedCandidate]
    dimension: int
    zeta_count: int
    degenerate_lengths: bool = False

    @property
    def lb_facets(self) -> list[Inequality]:
        return [f for f in self.facets if f.kind == "lb"]

    @property
    def allocation_facets(self) -> list[Inequality]:
        return [f for f in self.facets if f.kind == "allocation"]

    def facet_count(self) -> int:
        return len(self.facets)


@dataclass
class MembershipVerdict:
    inside: bool
    violated: list[str] = field(default_factory=list)


def _corner_scores(tree: PhyloTree, analysis: SymmetryAnalysis):
    """Scores over every 0/1 corner of the split cube, with one witness each."""
    d = analysis.degrees_of_freedom
    points: dict[tuple[Fraction, ...], dict[str, Fraction]] = {}
    for bits in itertools.product((Fraction(1), Fraction(0)), repeat=d):
        beta = SplitAssignment.from_vector(analysis, bits)
        s = score(tree, materialize_gamma(tree, analysis, beta))
        key = tuple(s[t] for t in tree.taxa)
        points.setdefault(key, beta.named())
    return sorted(points), points


def extreme_points(tree: PhyloTree, analysis: SymmetryAnalysis) -> list[tuple[Fraction, ...]]:
    """Deduplicated extreme score vectors (taxon order = tree.taxa)."""
    ext, _ = _corner_scores(tree, analysis)
    return ext


# -- canonical bases ----------------------------------------------------------

def canonical_basis(tree: PhyloTree, analysis: SymmetryAnalysis, anchor: str) -> CanonicalBasis:
    """Anchored maximizer witness plus one maximal single-class flip per
    basis edge; the d+1 vectors are certified linearly independent."""
    d = analysis.degrees_of_freedom
    if d < 1:
        raise PolytopeError("canonical bases need at least one degree of freedom")
    witness = allocation.max_alloc_r(
        tree, analysis, tree.taxa, tree.taxa, anchor=anchor
    )
    if len(witness.consumed) != d:
        raise AssertionError("witness recursion failed to consume every free class")

    beta0: dict[int, Fraction] = {}
    edge_of_class: dict[int, int] = {}
    for cls_idx, (edge, mono) in witness.consumed.items():
        side = next(s for c, s in mono.factors if c == cls_idx)
        beta0[cls_idx] = Fraction(1) if side == 0 else Fraction(0)
        edge_of_class[cls_idx] = edge

    def score_at(beta_map: dict[int, Fraction]) -> tuple[Fraction, ...]:
        vec = [beta_map[c.index] for c in analysis.free_classes]
        s = score(tree, materialize_gamma(tree, analysis, SplitAssignment.from_vector(analysis, vec)))
        return tuple(s[t] for t in tree.taxa)

    s0 = score_at(beta0)
    lb = {t: allocation.lb_allocation(tree, analysis, t) for t in tree.taxa}
    idx = {t: i for i, t in enumerate(tree.taxa)}

    # witness taxa: deepest consumption first, one per zero side, never two
    # that share a tie group at a common edge (they would collapse the rank)
    def tied(a: str, b: str) -> bool:
        shared = tree.path_edge_set(a) & tree.path_edge_set(b)
        return any(analysis.ties(a, e, b, e) for e in shared)

    edges = sorted(edge_of_class.values(), key=lambda e: -tree.depth(e))
    phi: dict[int, str] = {}
    used: list[str] = [anchor]
    for e in edges:
        cls_idx = analysis.class_of[e].index
        consumed_side = next(s for c, s in witness.consumed[cls_idx][1].factors if c == cls_idx)
        other = analysis.first_child[e][1 - consumed_side]
        pool = sorted(
            tree.leafset(other),
            key=lambda t: (s0[idx[t]] - lb[t], t),
        )
        pick = next(
            (t for t in pool if t not in used and not any(tied(t, u) for u in used)),
            None,
        )
        if pick is None:
            raise AssertionError("no untied witness taxon available for a basis edge")
        used.append(pick)
        phi[e] = pick

    # s^e: reorient every free class met by the witness taxon's path toward
    # it, so the taxon reaches its maximum and the anchor drops by exactly
    # the reallocation amount
    vectors: dict[int, tuple[Fraction, ...]] = {}
    for e in edges:
        target = phi[e]
        adjusted = dict(beta0)
        for m in tree.path_to_leaf(target):
            cls = analysis.class_of[m]
            if not cls.free:
                continue
            side = next(s for c, s in analysis.monomial(target, m).factors if c == cls.index)
            adjusted[cls.index] = Fraction(1) if side == 0 else Fraction(0)
        vectors[e] = score_at(adjusted)

    basis = CanonicalBasis(anchor, tuple(edges), phi, beta0, s0, vectors)
    rank = linalg.exact_rank([list(r) for r in basis.matrix()])
    if rank != d + 1:
        raise PolytopeError(f"canonical basis for {anchor} has rank {rank}, expected {d + 1}")
    _check_basis_pattern(tree, analysis, basis, lb)
    return basis


def _check_basis_pattern(tree, analysis, basis: CanonicalBasis, lb) -> None:
    """The value pattern of the basis: s^e pins the anchor at UB - R, and the
    flip taxon strictly dominates the other coordinate taxa (generic lengths)."""
    idx = {t: i for i, t in enumerate(tree.taxa)}
    anchor = basis.anchor
    ub = allocation.ub_allocation(tree, analysis, anchor)
    if basis.s0[idx[anchor]] != ub:
        raise PolytopeError(f"s0 does not give {anchor} its maximum allocation")
    degenerate = any(l == 0 for l in tree.lengths.values())
    for e in basis.edges:
        flip = basis.phi[e]
        vec = basis.vectors[e]
        expected = ub - allocation.realloc(tree, analysis, anchor, flip)
        if vec[idx[anchor]] != expected:
            raise PolytopeError(
                f"basis vector for {tree.edge_name(e)} gives {anchor} "
                f"{vec[idx[anchor]]}, expected {expected}"
            )
        if degenerate:
            continue
        # the strict form of the dominance pattern holds for generic lengths
        # only; special lengths can produce ties, so certify the weak form
        for t in basis.taxa:
            if t in (anchor, flip):
                continue
            if not (basis.s0[idx[t]] >= vec[idx[t]] and vec[idx[flip]] >= vec[idx[t]]):
                raise PolytopeError(f"dominance pattern violated at {t} for {tree.edge_name(e)}")


def exchange_basis(tree: PhyloTree, analysis: SymmetryAnalysis, basis: CanonicalBasis) -> CanonicalBasis:
    """Swap roles with the witness of the deepest basis edge along the anchor's
    path; the new first vector pins the old anchor at its minimum."""
    path = tree.path_edge_set(basis.anchor)

    def shared_prefix(e: int) -> int:
        return len(set(tree.ancestors(e)[1:]) & path)

    deepest = max(basis.edges, key=lambda e: (shared_prefix(e), tree.depth(e)))
    partner = basis.phi[deepest]
    new_basis = canonical_basis(tree, analysis, partner)
    idx = {t: i for i, t in enumerate(tree.taxa)}
    lb = allocation.lb_allocation(tree, analysis, basis.anchor)
    if new_basis.s0[idx[basis.anchor]] != lb:
        raise PolytopeError(
            f"exchange basis fails to pin {basis.anchor} at its minimum allocation"
        )
    return new_basis


# -- Z families ----------------------------------------------------------------

def z_family(
    tree: PhyloTree, analysis: SymmetryAnalysis, x_k: str, taxa_y: Iterable[str]
) -> set[frozenset[str]]:
    """Subsets Z of Y minus x_k whose removal keeps Y - Z in one component."""
    y = frozenset(taxa_y)
    if x_k not in y:
        raise TreeError("x_k must belong to Y")
    members: set[frozenset[str]] = set()
    others = sorted(y - {x_k})
    scope = tree.induced_edge_set(y)
    for r in range(1, len(others) + 1):
        for combo in itertools.combinations(others, r):
            z = frozenset(combo)
            rest = y - z
            if len(rest) <= 1:
                members.add(z)
                continue
            removed = set()
            for t in z:
                removed.update(tree.path_to_leaf(t))
            surviving = set(scope) - removed
            comps = allocation._components(tree, surviving)
            if any(rest <= taxa for _, _, taxa in comps):
                members.add(z)
    return members


# -- facet assembly --------------------------------------------------------------

def _normalize(
    coeffs: Sequence[Fraction], rhs: Fraction, sense: str, eq_rref: list[list[Fraction]], pivots: list[int]
) -> tuple:
    """Canonical <=-form of an inequality modulo the affine hull."""
    row = list(coeffs) + [rhs]
    if sense == ">=":
        row = [-x for x in row]
    for r, c in zip(eq_rref, pivots):
        if row[c] != 0:
            f = row[c]
            row = [a - f * b for a, b in zip(row, r)]
    lcm = 1
    for x in row:
        lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in row]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    return tuple(ints)


def _find_matching(adj: dict[int, set[str]]) -> dict[int, str] | None:
    """A perfect bipartite matching edge -> taxon, or None."""
    match: dict[str, int] = {}

    def augment(e: int, seen: set[str]) -> bool:
        for t in sorted(adj[e]):
            if t in seen:
                continue
            seen.add(t)
            if t not in match or augment(match[t], seen):
                match[t] = e
                return True
        return False

    for e in sorted(adj):
        if not augment(e, set()):
            return None
    return {e: t for t, e in match.items()}


def _jacobian_rank(analysis: SymmetryAnalysis, pairs: list[tuple[str, int]]) -> int:
    """Rank of the map from split values to the matched gamma entries, at a
    generic rational point."""
    classes = [c.index for c in analysis.free_classes]
    point = {c: Fraction(1, p) for c, p in zip(classes, (3, 5, 7, 11, 13, 17, 19, 23, 29, 31))}
    rows = []
    for taxon, e in pairs:
        mono = analysis.monomial(taxon, e)
        row = []
        for c in classes:
            if (c, 0) in mono.factors or (c, 1) in mono.factors:
                side = 0 if (c, 0) in mono.factors else 1
                rest = Fraction(1, 2 ** mono.halves)
                for oc, os in mono.factors:
                    if oc == c:
                        continue
                    b = point[oc]
                    rest *= b if os == 0 else 1 - b
                row.append(rest if side == 0 else -rest)
            else:
                row.append(Fraction(0))
        rows.append(row)
    return linalg.exact_rank(rows)


def _exchange_partner(tree: PhyloTree, analysis: SymmetryAnalysis, basis: CanonicalBasis) -> str:
    """Witness of the deepest basis edge along the anchor's path."""
    path = tree.path_edge_set(basis.anchor)

    def shared_prefix(e: int) -> int:
        return len(set(tree.ancestors(e)[1:]) & path)

    deepest = max(basis.edges, key=lambda e: (shared_prefix(e), tree.depth(e)))
    return basis.phi[deepest]


def _x_k_is_valid(
    tree: PhyloTree, analysis: SymmetryAnalysis, basis: CanonicalBasis, x_k: str
) -> bool:
    """Whether Y minus x_k carries a bijection from the basis edge classes
    whose free choices fully specify the allocation matrix."""
    targets = {t for t in basis.taxa if t != x_k}
    adj: dict[int, set[str]] = {}
    for e in basis.edges:
        cls = analysis.class_of[e]
        adj[e] = {
            t for t in targets
            if any(m in tree.path_edge_set(t) for m in cls.members)
        }
    matching = _find_matching(adj)
    if matching is None:
        return False
    pairs = []
    for e, t in matching.items():
        member = next(m for m in analysis.class_of[e].members if m in tree.path_edge_set(t))
        pairs.append((t, member))
    return _jacobian_rank(analysis, pairs) == len(basis.edges)


def _select_x_k(tree: PhyloTree, analysis: SymmetryAnalysis, basis: CanonicalBasis) -> str | None:
    """The exchange partner when it validates, else the first taxon that does."""
    partner = _exchange_partner(tree, analysis, basis)
    order = [partner] + [t for t in basis.taxa if t not in (partner, basis.anchor)]
    for x_k in order:
        if _x_k_is_valid(tree, analysis, basis, x_k):
            return x_k
    return None


def facets(tree: PhyloTree, analysis: SymmetryAnalysis) -> PolytopeDescription:
    """Minimal description: n lower-bound facets plus the allocation family."""
    taxa = tree.taxa
    n = len(taxa)
    idx = {t: i for i, t in enumerate(taxa)}
    ext, beta_wit = _corner_scores(tree, analysis)
    chart = hull.affine_chart(ext)
    equalities = chart.equalities
    eq_rows = [[*c, r] for c, r in equalities]
    eq_rref, eq_pivots = linalg.rref(eq_rows)
    d = analysis.degrees_of_freedom
    degenerate = any(l == 0 for l in tree.lengths.values())

    lb = {t: allocation.lb_allocation(tree, analysis, t) for t in taxa}
    n_of = {t: analysis.n_of(t) for t in taxa}

    def support(ineq: Inequality) -> tuple[tuple[int, ...], int]:
        tight = [i for i, p in enumerate(ext) if ineq.evaluate(p) == ineq.rhs]
        pts = [ext[i] for i in tight]
        return tuple(tight), linalg.affine_rank(pts)

    def unit(t: str) -> tuple[Fraction, ...]:
        return tuple(Fraction(1) if u == t else Fraction(0) for u in taxa)

    facet_list: list[Inequality] = []
    lb_forms = set()
    for t in taxa:
        ineq = Inequality(unit(t), lb[t], ">=", "lb", {"taxon": t})
        ineq.normal_form = _normalize(ineq.coeffs, ineq.rhs, ineq.sense, eq_rref, eq_pivots)
        ineq.support_points, ineq.support_count = support(ineq)
        lb_forms.add(ineq.normal_form)
        facet_list.append(ineq)

    candidates: dict[frozenset[str], list[tuple[bool, Inequality]]] = {}

    if d >= 1:
        for x_i in taxa:
            basis = canonical_basis(tree, analysis, x_i)
            y = basis.taxa
            x_k = _select_x_k(tree, analysis, basis)
            if x_k is None:
                continue
            zs = z_family(tree, analysis, x_k, y)
            s0 = {t: basis.s0[idx[t]] for t in taxa}
            for r in range(1, len(y)):
                for combo in itertools.combinations(sorted(set(y) - {x_k}), r):
                    z = frozenset(combo)
                    if x_i not in z:
                        continue
                    rhs = allocation.max_alloc_r(tree, analysis, z, y).value
                    lb_sum = sum(
                        (allocation.lb_context(tree, analysis, t) for t in z), Fraction(0)
                    )
                    anchored = allocation.max_alloc_r(tree, analysis, z, y, anchor=x_i)
                    attained = anchored.value - lb_sum == rhs
                    tight_at_witness = (
                        sum(Fraction(n_of[t]) * (s0[t] - lb[t]) for t in z) == rhs
                    )
                    full_weights = all(entry.weight == 1 for entry in anchored.trace)
                    in_family = z in zs and attained and tight_at_witness and full_weights
                    coeffs = tuple(
                        Fraction(n_of[t]) if t in z else Fraction(0) for t in taxa
                    )
                    base = sum(Fraction(n_of[t]) * lb[t] for t in z)
                    ineq = Inequality(
                        coeffs,
                        rhs + base,
                        "<=",
                        "allocation",
                        {"Z": tuple(sorted(z)), "Y": y, "x_i": x_i, "x_k": x_k, "r": rhs},
                    )
                    ineq.normal_form = _normalize(ineq.coeffs, ineq.rhs, ineq.sense, eq_rref, eq_pivots)
                    ineq.support_points, ineq.support_count = support(ineq)
                    bad = [p for p in ext if not ineq.holds(p)]
                    if bad:
                        raise PolytopeError(
                            f"candidate for Z={sorted(z)} is violated by an extreme point {bad[0]}"
                        )
                    candidates.setdefault(z, []).append((in_family, ineq))

    # An allocation candidate can describe the same geometric face as a
    # lower-bound facet (the affine hull folds them together).  The family
    # keeps such a candidate only when it coincides with a single lower
    # bound; a face already covered by a whole tie group of lower bounds
    # carries no independent allocation content.
    lb_form_count: dict[tuple, int] = {}
    for f in facet_list:
        lb_form_count[f.normal_form] = lb_form_count.get(f.normal_form, 0) + 1
    accepted: dict[tuple, Inequality] = {}
    rejected: list[RejectedCandidate] = []
    for z in sorted(candidates, key=sorted):
        entries = candidates[z]
        family_entries = [ineq for ok, ineq in entries if ok]
        if family_entries:
            for ineq in family_entries:
                trivial = all(v == 0 for v in ineq.normal_form[:-1])
                if trivial or ineq.normal_form in accepted:
                    continue
                if lb_form_count.get(ineq.normal_form, 0) > 1:
                    continue
                if not degenerate and ineq.support_count < d:
                    raise PolytopeError(
                        f"facet for Z={sorted(z)} supported by only "
                        f"{ineq.support_count} affinely independent extremes"
                    )
                accepted[ineq.normal_form] = ineq
        else:
            ineq = entries[0][1]
            if not degenerate and ineq.support_count > d - 1:
                if not (ineq.normal_form in lb_form_count or ineq.normal_form in accepted
                        or all(v == 0 for v in ineq.normal_form[:-1])):
                    raise PolytopeError(
                        f"rejected Z={sorted(z)} unexpectedly supports a facet"
                    )
            rejected.append(
                RejectedCandidate(ineq, ineq.support_count - 1, "Y-Z split across components")
            )

    facet_list.extend(accepted[k] for k in sorted(accepted))
    if not degenerate:
        for f in facet_list:
            if f.kind == "lb" and f.support_count < d:
                raise PolytopeError(
                    f"lower-bound facet for {f.generator['taxon']} supported by "
                    f"{f.support_count} affinely independent extremes"
                )
    dim = linalg.affine_rank(ext) - 1
    if not degenerate and dim != d:
        raise PolytopeError(f"polytope dimension {dim} differs from the free-class count {d}")
    return PolytopeDescription(
        tree,
        analysis,
        ext,
        beta_wit,
        equalities,
        facet_list,
        rejected,
        dim,
        len(accepted),
        degenerate,
    )


# -- queries over a description ---------------------------------------------------

def membership(description: PolytopeDescription, s: Sequence[Fraction]) -> MembershipVerdict:
    tree = description.tree
    if len(s) != len(tree.taxa):
        raise TreeError("score vector has the wrong dimension")
    violated = []
    for coeffs, rhs in description.affine_equalities:
        v = sum(c * x for c, x in zip(coeffs, s))
        if v != rhs:
            violated.append(f"equality {rhs} != {v}")
    for f in description.facets:
        if not f.holds(s):
            violated.append(
                f"{f.kind} facet {f.generator} at {f.evaluate(s)} vs rhs {f.rhs}"
            )
    return MembershipVerdict(not violated, violated)


def optimize(description: PolytopeDescription, objective: Sequence[Fraction]):
    """Maximize a linear objective by exact evaluation over the vertex set."""
    if len(objective) != len(description.tree.taxa):
        raise TreeError("objective has the wrong dimension")
    values = [sum(c * x for c, x in zip(objective, p)) for p in description.extreme]
    best = max(values)
    optimizers = [p for p, v in zip(description.extreme, values) if v == best]
    for p in optimizers:
        verdict = membership(description, p)
        if not verdict.inside:
            raise PolytopeError(f"optimizer fails the H-representation: {verdict.violated}")
    return best, optimizers


@dataclass
class ProjectedDescription:
    taxa: tuple[str, ...]
    points: list[tuple[Fraction, ...]]
    facets: list[tuple[tuple[Fraction, ...], Fraction]]
    equalities: list[tuple[tuple[Fraction, ...], Fraction]]


def project(
    description: PolytopeDescription,
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    taxa_y: Iterable[str],
) -> ProjectedDescription:
    """Projection a_i = N(x_i) (s_i - LB(x_i)) onto a d-taxon coordinate set."""
    y = tuple(sorted(taxa_y))
    d = analysis.degrees_of_freedom
    if len(y) != d:
        raise TreeError(f"projection needs exactly {d} taxa")
    idx = {t: i for i, t in enumerate(tree.taxa)}
    lb = {t: allocation.lb_allocation(tree, analysis, t) for t in y}
    n_of = {t: analysis.n_of(t) for t in y}
    pts = sorted(
        {
            tuple(Fraction(n_of[t]) * (p[idx[t]] - lb[t]) for t in y)
            for p in description.extreme
        }
    )
    if linalg.affine_rank(pts) != linalg.affine_rank(description.extreme):
        raise PolytopeError("projection is not dimension-preserving")
    rep = hull.facets_of_points(pts)
    for size in range(1, len(y) + 1):
        for combo in itertools.combinations(y, size):
            bound = allocation.max_alloc_r(tree, analysis, combo, y).value
            for p in pts:
                total = sum(p[y.index(t)] for t in combo)
                if total > bound:
                    raise PolytopeError(
                        f"projected point violates the allocation bound for {combo}"
                    )
    return ProjectedDescription(y, pts, rep.facets, rep.equalities)
