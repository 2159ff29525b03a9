"""Rooted binary phylogenetic trees with exact rational edge lengths.

A tree is stored as an immutable collection of integer vertex ids.  Every
non-root vertex identifies exactly one edge, namely the edge from its parent,
so edges are referred to by their head vertex id throughout the package.
Edge lengths are `fractions.Fraction` values and all queries are pure.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence


class NewickError(ValueError):
    """Malformed Newick input; `position` is the 0-based offset in the source."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class TreeError(ValueError):
    """Structurally invalid tree or bad query arguments."""


_TOKEN = re.compile(r"[A-Za-z0-9_.+'|-]+")
_LENGTH = re.compile(r"-?\d+(?:\.\d+)?(?:/\d+)?")


def parse_length(text: str) -> Fraction:
    """Parse a decimal or p/q literal into an exact rational."""
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    return Fraction(text)


def format_length(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class PhyloTree:
    """Rooted tree over named taxa.

    Instances produced by `parse_newick` are strictly binary (root out-degree
    2, inner vertices out-degree 2).  Instances produced by `induced_subtree`
    or `removal_forest` may retain pass-through vertices of out-degree 1;
    edge identity (head vertex id) is preserved across all derived trees so
    that edge sets computed on the full tree stay meaningful.
    """

    def __init__(
        self,
        root: int,
        parent: Mapping[int, int],
        children: Mapping[int, tuple[int, ...]],
        labels: Mapping[int, str],
        lengths: Mapping[int, Fraction],
    ):
        self.root = root
        self.parent = dict(parent)
        self.children = dict(children)
        self.labels = dict(labels)      # leaf vertex id -> taxon name
        self.lengths = dict(lengths)    # head vertex id -> edge length
        self.taxon_of = dict(self.labels)
        self.vertex_of_taxon = {name: v for v, name in self.labels.items()}
        self._leafset: dict[int, frozenset[str]] = {}
        self._depth: dict[int, int] = {}
        self._fill(root, 0)
        self.taxa: tuple[str, ...] = tuple(sorted(self.vertex_of_taxon))

    def _fill(self, v: int, depth: int) -> frozenset[str]:
        self._depth[v] = depth
        kids = self.children.get(v, ())
        if not kids:
            ls = frozenset([self.labels[v]])
        else:
            ls = frozenset().union(*(self._fill(c, depth + 1) for c in kids))
        self._leafset[v] = ls
        return ls

    # -- basic queries ------------------------------------------------------

    def vertices(self) -> Iterator[int]:
        yield self.root
        stack = list(self.children.get(self.root, ()))
        while stack:
            v = stack.pop()
            yield v
            stack.extend(self.children.get(v, ()))

    def edges(self) -> list[int]:
        """All edges, as head vertex ids, sorted by (depth, leafset)."""
        heads = [v for v in self.vertices() if v != self.root]
        heads.sort(key=lambda v: (self._depth[v], sorted(self._leafset[v])))
        return heads

    def is_leaf(self, v: int) -> bool:
        return not self.children.get(v, ())

    def leaves(self) -> list[int]:
        return [v for v in self.vertices() if self.is_leaf(v)]

    def leafset(self, v: int) -> frozenset[str]:
        return self._leafset[v]

    def depth(self, v: int) -> int:
        return self._depth[v]

    def length(self, head: int) -> Fraction:
        return self.lengths[head]

    def total_length(self) -> Fraction:
        return sum(self.lengths.values(), Fraction(0))

    def edge_name(self, head: int) -> str:
        inner = ",".join(sorted(self._leafset[head]))
        return f"e({{{inner}}})"

    def edge_by_leafset(self, leafset: Iterable[str]) -> int:
        """Head vertex of the edge whose head subtree has exactly this leafset."""
        want = frozenset(leafset)
        for v in self.vertices():
            if v != self.root and self._leafset[v] == want:
                return v
        raise TreeError(f"no edge with head leafset {sorted(want)}")

    def vertex_by_leafset(self, leafset: Iterable[str]) -> int:
        want = frozenset(leafset)
        for v in self.vertices():
            if self._leafset[v] == want:
                return v
        raise TreeError(f"no vertex with leafset {sorted(want)}")

    def ancestors(self, v: int) -> list[int]:
        """Vertices from the root down to v, inclusive."""
        chain = [v]
        while chain[-1] != self.root:
            chain.append(self.parent[chain[-1]])
        chain.reverse()
        return chain

    def is_ancestor(self, a: int, d: int) -> bool:
        while d != self.root:
            if d == a:
                return True
            d = self.parent[d]
        return a == self.root

    def path_to_leaf(self, taxon: str) -> list[int]:
        """Edges (head ids) from the root to the named leaf, in order."""
        if taxon not in self.vertex_of_taxon:
            raise TreeError(f"unknown taxon {taxon!r}")
        return self.ancestors(self.vertex_of_taxon[taxon])[1:]

    def path_edge_set(self, taxon: str) -> frozenset[int]:
        return frozenset(self.path_to_leaf(taxon))

    # -- derived trees ------------------------------------------------------

    def pendant_subtree(self, v: int) -> "PhyloTree":
        """The maximal subtree rooted at v, with lengths restricted."""
        if v not in self._leafset:
            raise TreeError(f"unknown vertex {v}")
        keep = set()
        stack = [v]
        while stack:
            u = stack.pop()
            keep.add(u)
            stack.extend(self.children.get(u, ()))
        return PhyloTree(
            v,
            {u: p for u, p in self.parent.items() if u in keep and u != v},
            {u: k for u, k in self.children.items() if u in keep},
            {u: s for u, s in self.labels.items() if u in keep},
            {u: l for u, l in self.lengths.items() if u in keep and u != v},
        )

    def induced_subtree(self, taxa: Iterable[str]) -> "PhyloTree":
        """Spanning subtree from the root to the given taxa.

        Pass-through vertices keep out-degree 1 rather than being contracted,
        so edge identity survives restriction.
        """
        want = set(taxa)
        if not want:
            raise TreeError("induced subtree of an empty taxon set")
        unknown = want - set(self.taxa)
        if unknown:
            raise TreeError(f"unknown taxa {sorted(unknown)}")
        keep = {self.root}
        for t in want:
            keep.update(self.ancestors(self.vertex_of_taxon[t]))
        return PhyloTree(
            self.root,
            {u: p for u, p in self.parent.items() if u in keep and u != self.root},
            {u: tuple(c for c in k if c in keep) for u, k in self.children.items() if u in keep},
            {u: s for u, s in self.labels.items() if u in keep},
            {u: l for u, l in self.lengths.items() if u in keep and u != self.root},
        )

    def induced_edge_set(self, taxa: Iterable[str]) -> frozenset[int]:
        """Edges of the induced subtree, without building it."""
        out: set[int] = set()
        for t in taxa:
            out.update(self.path_to_leaf(t))
        return frozenset(out)

    def removal_forest(self, taxa_y: Iterable[str], taxa_z: Iterable[str]) -> "Forest":
        """Forest obtained from T(Y) by deleting all edges on the paths to Z.

        Singleton components are dropped.  Components preserve original
        vertex ids and are rooted at their vertex closest to the old root.
        """
        y = set(taxa_y)
        z = set(taxa_z)
        if not z:
            raise TreeError("Z must be nonempty")
        if not z <= y:
            raise TreeError("Z must be a subset of Y")
        sub = self.induced_subtree(y)
        removed = set()
        for t in z:
            removed.update(sub.path_to_leaf(t))
        survivors = [v for v in sub.edges() if v not in removed]
        return Forest._from_edges(self, sub, survivors, provenance=(frozenset(y), frozenset(z)))

    # -- serialization ------------------------------------------------------

    def serialize(self) -> str:
        """Canonical Newick: children sorted by their smallest leaf label."""

        def emit(v: int) -> str:
            kids = self.children.get(v, ())
            if not kids:
                body = self.labels[v]
            else:
                parts = sorted((emit(c), min(self._leafset[c])) for c in kids)
                body = "(" + ",".join(p for p, _ in parts) + ")"
            if v == self.root:
                return body
            return body + ":" + format_length(self.lengths[v])

        return emit(self.root) + ";"

    def __repr__(self) -> str:
        return f"PhyloTree({self.serialize()!r})"

    # -- validation ---------------------------------------------------------

    def validate_binary(self) -> None:
        for v in self.vertices():
            kids = self.children.get(v, ())
            if kids and len(kids) != 2:
                raise TreeError(f"vertex {v} has out-degree {len(kids)}")
            if not kids and v not in self.labels:
                raise TreeError(f"unlabeled leaf vertex {v}")
        if len(set(self.labels.values())) != len(self.labels):
            raise TreeError("duplicate leaf labels")
        for head, l in self.lengths.items():
            if l < 0:
                raise TreeError(f"negative length on {self.edge_name(head)}")


class Forest:
    """Disjoint rooted components left after deleting path edges from T(Y)."""

    def __init__(self, components: Sequence[PhyloTree], provenance):
        self.components = list(components)
        self.provenance = provenance

    @staticmethod
    def _from_edges(base: PhyloTree, sub: PhyloTree, surviving: Sequence[int], provenance) -> "Forest":
        by_root: dict[int, list[int]] = {}
        find: dict[int, int] = {}

        def anchor(v: int) -> int:
            # walk up through surviving edges to the component root
            while v in survivors_set:
                v = sub.parent[v]
            return v

        survivors_set = set(surviving)
        for head in surviving:
            r = anchor(head)
            by_root.setdefault(r, []).append(head)
        comps = []
        for r in sorted(by_root, key=lambda r: sorted(sub.leafset(r))):
            members = set(by_root[r]) | {r}
            comp = PhyloTree(
                r,
                {v: sub.parent[v] for v in by_root[r]},
                {v: tuple(c for c in sub.children.get(v, ()) if c in members) for v in members},
                {v: s for v, s in sub.labels.items() if v in members},
                {v: sub.lengths[v] for v in by_root[r]},
            )
            comps.append(comp)
        comps.sort(key=lambda c: min(c.taxa) if c.taxa else "")
        return Forest(comps, provenance)

    def component_of(self, taxon: str) -> PhyloTree:
        for comp in self.components:
            if taxon in comp.vertex_of_taxon:
                return comp
        raise TreeError(f"taxon {taxon!r} not present in the forest")

    def leafsets(self) -> list[frozenset[str]]:
        return [frozenset(c.taxa) for c in self.components]

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[PhyloTree]:
        return iter(self.components)


def parse_newick(text: str) -> PhyloTree:
    """Parse a single rooted Newick expression with named leaves.

    Lengths are optional (default 1) and may be decimals or "p/q".  Raises
    `NewickError` with a source position on malformed input and `TreeError`
    on structural violations (non-binary vertex, duplicate label, negative
    length).
    """
    src = text.strip()
    pos = 0
    counter = 0
    parent: dict[int, int] = {}
    children: dict[int, tuple[int, ...]] = {}
    labels: dict[int, str] = {}
    lengths: dict[int, Fraction] = {}

    def fresh() -> int:
        nonlocal counter
        counter += 1
        return counter - 1

    def peek() -> str:
        return src[pos] if pos < len(src) else ""

    def parse_node() -> tuple[int, Fraction | None]:
        nonlocal pos
        if peek() == "(":
            start = pos
            pos += 1
            v = fresh()
            kids = [parse_child(v)]
            while peek() == ",":
                pos += 1
                kids.append(parse_child(v))
            if peek() != ")":
                raise NewickError("expected ')' or ','", pos)
            pos += 1
            if len(kids) != 2:
                raise NewickError(f"non-binary vertex with {len(kids)} children", start)
            children[v] = tuple(kids)
            # optional internal label, ignored for identity
            m = _TOKEN.match(src, pos)
            if m:
                pos = m.end()
        else:
            m = _TOKEN.match(src, pos)
            if not m:
                raise NewickError("expected a leaf name or '('", pos)
            v = fresh()
            name = m.group()
            if name in labels.values():
                raise NewickError(f"duplicate leaf label {name!r}", pos)
            labels[v] = name
            children[v] = ()
            pos = m.end()
        length = None
        if peek() == ":":
            pos += 1
            lm = _LENGTH.match(src, pos)
            if not lm:
                raise NewickError("expected a length after ':'", pos)
            length = parse_length(lm.group())
            if length < 0:
                raise NewickError("negative length", pos)
            pos = lm.end()
        return v, length

    def parse_child(par: int) -> int:
        v, length = parse_node()
        parent[v] = par
        lengths[v] = Fraction(1) if length is None else length
        return v

    root, root_len = parse_node()
    if root_len is not None:
        raise NewickError("length on the root is not allowed", pos)
    if peek() != ";":
        raise NewickError("expected ';'", pos)
    pos += 1
    if pos != len(src):
        raise NewickError("trailing characters after ';'", pos)
    if not children.get(root, ()):
        raise NewickError("tree must have a root of out-degree 2", 0)
    tree = PhyloTree(root, parent, children, labels, lengths)
    tree.validate_binary()
    return tree
