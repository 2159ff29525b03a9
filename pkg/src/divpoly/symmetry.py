"""Shape classes, balance flags, edge equivalence classes and tie groups.

The neutrality conditions tie edges whose head subtrees are isomorphic as
rooted leaf-unlabeled trees, so edges fall into equivalence classes grouped
by the shape code of their head.  A class representative whose head has
non-isomorphic children carries exactly one free allocation choice; all
other columns are forced.  The number of free classes is the degrees of
freedom d of the tree and the dimension of its diversity index polytope.

Per-(taxon, edge) allocations are tracked as formal monomials in the free
split parameters (one parameter per free class, 1/2 factors at vertices
with isomorphic children).  Two taxa are tied at an edge exactly when their
monomials coincide, which makes tie groups exact and purely symbolic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator

from .tree import PhyloTree, TreeError

LEAF_CODE = "L"


@dataclass(frozen=True)
class Monomial:
    """Formal product of 1/2 factors and per-class split factors.

    `factors` holds (class_index, side) pairs; side 0 is the canonical first
    child of the splitting vertex, side 1 the other.  Classes cannot repeat
    along a root-to-leaf path, so no exponents are needed.
    """

    halves: int
    factors: frozenset[tuple[int, int]]

    def evaluate(self, beta: dict[int, Fraction]) -> Fraction:
        value = Fraction(1, 2 ** self.halves)
        for cls, side in self.factors:
            b = beta[cls]
            value *= b if side == 0 else 1 - b
        return value

    def classes(self) -> frozenset[int]:
        return frozenset(cls for cls, _ in self.factors)

    def render(self, names: dict[int, str]) -> str:
        parts = []
        if self.halves:
            parts.append(f"(1/2)^{self.halves}" if self.halves > 1 else "1/2")
        for cls, side in sorted(self.factors):
            base = f"b[{names[cls]}]"
            parts.append(base if side == 0 else f"(1-{base})")
        return "*".join(parts) if parts else "1"


@dataclass(frozen=True)
class TieGroup:
    """Maximal set of taxa forced to share x's allocation at edge e."""

    taxa: frozenset[str]
    anchor_taxon: str
    anchor_edge: int
    certificate: Monomial


class EdgeClass:
    """One neutrality-induced equivalence class of edges."""

    def __init__(self, index: int, code: str, members: tuple[int, ...], rep: int, free: bool):
        self.index = index
        self.code = code
        self.members = members
        self.rep = rep
        self.free = free

    def __repr__(self) -> str:
        kind = "free" if self.free else "dependent"
        return f"EdgeClass({self.index}, {kind}, {len(self.members)} edges)"


class SymmetryAnalysis:
    """All symmetry-derived structure of one tree, computed eagerly."""

    def __init__(self, tree: PhyloTree):
        self.tree = tree
        self.code: dict[int, str] = {}
        self.first_child: dict[int, tuple[int, ...]] = {}
        self._compute_codes(tree.root)

        self.balanced = {v: self._is_perfect(v) for v in tree.vertices()}
        self.children_iso = {
            v: len(tree.children.get(v, ())) == 2
            and self.code[tree.children[v][0]] == self.code[tree.children[v][1]]
            for v in tree.vertices()
        }
        self.h_balanced = {
            v: tree.is_leaf(v) or self.balanced[v] or self.children_iso[v]
            for v in tree.vertices()
        }

        self.classes = self._build_classes()
        self.class_of: dict[int, EdgeClass] = {}
        for cls in self.classes:
            for e in cls.members:
                self.class_of[e] = cls
        self.free_classes = [c for c in self.classes if c.free]
        self.dependent_classes = [c for c in self.classes if not c.free]
        self.independent_edges = tuple(c.rep for c in self.free_classes)   # E_f
        self.dependent_edges = tuple(c.rep for c in self.dependent_classes)  # E_c
        self.degrees_of_freedom = len(self.free_classes)

        self._monomials: dict[int, dict[str, Monomial]] = {}
        self._orbits: dict[int, tuple[frozenset[str], ...]] = {}

    # -- shape codes and canonical order -------------------------------------

    def _compute_codes(self, root: int) -> None:
        order = []
        stack = [root]
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(self.tree.children.get(v, ()))
        for v in reversed(order):
            kids = self.tree.children.get(v, ())
            if not kids:
                self.code[v] = LEAF_CODE
                self.first_child[v] = ()
            else:
                ranked = sorted(kids, key=lambda c: (self.code[c], min(self.tree.leafset(c))))
                self.first_child[v] = tuple(ranked)
                self.code[v] = "(" + "".join(self.code[c] for c in ranked) + ")"

    def _is_perfect(self, v: int) -> bool:
        depths = {self.tree.depth(self.tree.vertex_of_taxon[t]) for t in self.tree.leafset(v)}
        return len(depths) == 1

    def _build_classes(self) -> list[EdgeClass]:
        """Edge orbits under the automorphism group.

        Two edges are tied exactly when a symmetry of the whole tree maps one
        head subtree onto the other, which happens iff they are corresponding
        edges inside a pair of isomorphic sibling subtrees (possibly nested).
        Isomorphic subtrees in unrelated positions stay independent; tying
        them would couple allocation choices that no neutrality condition
        relates and inflate the polytope beyond its degrees of freedom.
        """
        parent: dict[int, int] = {e: e for e in self.tree.edges()}

        def find(e: int) -> int:
            while parent[e] != e:
                parent[e] = parent[parent[e]]
                e = parent[e]
            return e

        def union(a: int, b: int) -> None:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

        def merge_subtrees(a: int, b: int) -> None:
            union(a, b)
            for ca, cb in zip(self.first_child[a], self.first_child[b]):
                merge_subtrees(ca, cb)

        for v in self.tree.vertices():
            kids = self.first_child[v]
            if len(kids) == 2 and self.code[kids[0]] == self.code[kids[1]]:
                merge_subtrees(kids[0], kids[1])

        groups: dict[int, list[int]] = {}
        for e in self.tree.edges():
            groups.setdefault(find(e), []).append(e)
        keyed = []
        for members in groups.values():
            members = tuple(sorted(members, key=lambda e: sorted(self.tree.leafset(e))))
            rep = members[0]
            keyed.append((self.code[rep], sorted(self.tree.leafset(rep)), members, rep))
        keyed.sort(key=lambda item: (item[0], item[1]))
        classes = []
        for idx, (code, _, members, rep) in enumerate(keyed):
            free = not self.h_balanced[rep]
            classes.append(EdgeClass(idx, code, members, rep, free))
        return classes

    # -- alternative representative choices ----------------------------------

    def independent_sets(self) -> Iterator[tuple[int, ...]]:
        """Every valid choice of independent-edge representatives (the set F(T))."""
        pools = [c.members for c in self.free_classes]
        for combo in itertools.product(*pools):
            yield tuple(combo)

    def dependent_sets(self) -> Iterator[tuple[int, ...]]:
        pools = [c.members for c in self.dependent_classes]
        for combo in itertools.product(*pools):
            yield tuple(combo)

    def class_param_name(self, cls: EdgeClass) -> str:
        return ",".join(sorted(self.tree.leafset(cls.rep)))

    # -- monomials and tie groups ---------------------------------------------

    def monomials_at(self, e: int) -> dict[str, Monomial]:
        """Formal allocation gamma(x, e) for every taxon below head(e)."""
        if e not in self._monomials:
            out: dict[str, Monomial] = {}
            stack: list[tuple[int, int, frozenset[tuple[int, int]]]] = [(e, 0, frozenset())]
            while stack:
                v, halves, factors = stack.pop()
                kids = self.first_child[v]
                if not kids:
                    out[self.tree.labels[v]] = Monomial(halves, factors)
                elif self.children_iso[v]:
                    for c in kids:
                        stack.append((c, halves + 1, factors))
                else:
                    cls = self.class_of[v].index
                    for side, c in enumerate(kids):
                        stack.append((c, halves, factors | {(cls, side)}))
            self._monomials[e] = out
        return self._monomials[e]

    def monomial(self, taxon: str, e: int) -> Monomial:
        mono = self.monomials_at(e).get(taxon)
        if mono is None:
            raise TreeError(f"{self.tree.edge_name(e)} is not on the path to {taxon!r}")
        return mono

    def tie_group(self, taxon: str, e: int) -> TieGroup:
        """X-hat(x, e): the maximal taxa set tied to x at e, with certificate."""
        mono = self.monomial(taxon, e)
        taxa = frozenset(t for t, m in self.monomials_at(e).items() if m == mono)
        return TieGroup(taxa, taxon, e, mono)

    def group_size(self, taxon: str, e: int) -> int:
        return len(self.tie_group(taxon, e).taxa)

    def groups_at(self, e: int) -> list[frozenset[str]]:
        """Partition of the head leafset of e into tie groups."""
        by_mono: dict[Monomial, set[str]] = {}
        for t, m in self.monomials_at(e).items():
            by_mono.setdefault(m, set()).add(t)
        return sorted((frozenset(g) for g in by_mono.values()), key=sorted)

    def max_group(self, taxon: str) -> frozenset[str]:
        """X-hat(x): the largest tie group over balanced-head edges on P(x).

        Balanced-head groups on one path are nested, so this is the group of
        the shallowest balanced-head edge.
        """
        for e in self.tree.path_to_leaf(taxon):
            if self.balanced[e]:
                return self.tree.leafset(e)
        raise AssertionError("pendant edges always have balanced heads")

    def n_of(self, taxon: str) -> int:
        return len(self.max_group(taxon))

    def ties(self, x: str, e_x: int, y: str, e_y: int) -> bool:
        """Whether a neutrality/consistency tie forces gamma(x,e_x)=gamma(y,e_y)."""
        if self.class_of[e_x] is not self.class_of[e_y]:
            return False
        try:
            return self.monomial(x, e_x) == self.monomial(y, e_y)
        except TreeError:
            return False

    def tie_count(self, x: str, y: str) -> int:
        """Number of tied (edge, edge) class pairs between two taxa's paths."""
        count = 0
        px = self.tree.path_to_leaf(x)
        py = self.tree.path_to_leaf(y)
        for e_x in px:
            for e_y in py:
                if self.class_of[e_x] is self.class_of[e_y] and self.ties(x, e_x, y, e_y):
                    count += 1
        return count

    # -- canonical pairings and orbits ---------------------------------------

    def pairing(self, e_from: int, e_to: int) -> dict[str, str]:
        """Canonical leaf bijection between two isomorphic head subtrees."""
        if self.code[e_from] != self.code[e_to]:
            raise TreeError("pairing requires isomorphic head subtrees")
        out: dict[str, str] = {}
        stack = [(e_from, e_to)]
        while stack:
            a, b = stack.pop()
            ka, kb = self.first_child[a], self.first_child[b]
            if not ka:
                out[self.tree.labels[a]] = self.tree.labels[b]
            else:
                stack.extend(zip(ka, kb))
        return out

    def orbits(self, v: int) -> tuple[frozenset[str], ...]:
        """Leaf orbits of the automorphism group of the pendant subtree at v.

        These are exactly the per-column tie groups that conditions (1)-(3)
        force, without any consistency requirement.
        """
        if v not in self._orbits:
            parent: dict[str, str] = {}

            def find(t: str) -> str:
                while parent.get(t, t) != t:
                    parent[t] = parent.get(parent[t], parent[t])
                    t = parent[t]
                return t

            def union(a: str, b: str) -> None:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

            def walk(u: int) -> None:
                kids = self.first_child[u]
                if not kids:
                    return
                for c in kids:
                    walk(c)
                if self.code[kids[0]] == self.code[kids[1]]:
                    for a, b in self.pairing(kids[0], kids[1]).items():
                        union(a, b)

            walk(v)
            groups: dict[str, set[str]] = {}
            for t in self.tree.leafset(v):
                groups.setdefault(find(t), set()).add(t)
            self._orbits[v] = tuple(sorted((frozenset(g) for g in groups.values()), key=sorted))
        return self._orbits[v]


def shape_code(tree: PhyloTree, v: int) -> str:
    """Canonical code of the rooted unlabeled shape of the pendant subtree at v."""
    kids = tree.children.get(v, ())
    if not kids:
        return LEAF_CODE
    return "(" + "".join(sorted(shape_code(tree, c) for c in kids)) + ")"


def is_balanced(tree: PhyloTree, v: int) -> bool:
    """All leaves of T[v] equidistant from v (perfect subtree)."""
    depths = {tree.depth(tree.vertex_of_taxon[t]) for t in tree.leafset(v)}
    return len(depths) == 1


def is_h_balanced(tree: PhyloTree, v: int) -> bool:
    """Leaf, perfect, or two isomorphic child subtrees."""
    kids = tree.children.get(v, ())
    if not kids:
        return True
    if is_balanced(tree, v):
        return True
    return len(kids) == 2 and shape_code(tree, kids[0]) == shape_code(tree, kids[1])


def edge_classes(tree: PhyloTree) -> list[EdgeClass]:
    return analyze(tree).classes


def analyze(tree: PhyloTree) -> SymmetryAnalysis:
    return SymmetryAnalysis(tree)
