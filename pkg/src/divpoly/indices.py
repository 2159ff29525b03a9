"""Diversity indices: the consistent split parametrization and checkers.

A consistent index is determined by one split fraction per free shape class:
the share of any mass arriving at a vertex of that class that is routed to
its canonical first child.  Vertices with isomorphic children split 1/2-1/2.
Materializing those choices yields the full allocation matrix Gamma, whose
column for edge e distributes the length of e over the taxa below its head.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .symmetry import SymmetryAnalysis
from .tree import PhyloTree, TreeError


class SplitAssignment:
    """One exact rational in [0,1] per free shape class.

    Keys are free-class parameter names (the sorted leafset of the class
    representative's head, comma-joined), as produced by
    `SymmetryAnalysis.class_param_name`.
    """

    def __init__(self, analysis: SymmetryAnalysis, values: Mapping[str, Fraction]):
        self.analysis = analysis
        self.by_class: dict[int, Fraction] = {}
        names = {analysis.class_param_name(c): c for c in analysis.free_classes}
        unknown = set(values) - set(names)
        if unknown:
            raise TreeError(f"unknown split parameters {sorted(unknown)}")
        missing = set(names) - set(values)
        if missing:
            raise TreeError(f"missing split parameters {sorted(missing)}")
        for name, cls in names.items():
            b = Fraction(values[name])
            if not 0 <= b <= 1:
                raise TreeError(f"split {name} = {b} outside [0,1]")
            self.by_class[cls.index] = b

    @staticmethod
    def from_vector(analysis: SymmetryAnalysis, vector: Iterable[Fraction]) -> "SplitAssignment":
        """Assign values to free classes in class order."""
        vec = [Fraction(v) for v in vector]
        if len(vec) != len(analysis.free_classes):
            raise TreeError(f"expected {len(analysis.free_classes)} split values")
        values = {
            analysis.class_param_name(c): v for c, v in zip(analysis.free_classes, vec)
        }
        return SplitAssignment(analysis, values)

    def named(self) -> dict[str, Fraction]:
        return {
            self.analysis.class_param_name(c): self.by_class[c.index]
            for c in self.analysis.free_classes
        }


@dataclass
class IndexMatrix:
    """Sparse Gamma: per edge, the allocation of its length over taxa."""

    tree: PhyloTree
    columns: dict[int, dict[str, Fraction]]
    provenance: str = "raw"

    def gamma(self, taxon: str, e: int) -> Fraction:
        return self.columns.get(e, {}).get(taxon, Fraction(0))


@dataclass
class ConditionReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass
class ConsistencyReport:
    """Consistency constants k keyed by (vertex leafset, deeper edge, shallower edge)."""

    constants: dict[tuple[frozenset[str], int, int], Fraction] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def materialize_gamma(tree: PhyloTree, analysis: SymmetryAnalysis, beta: SplitAssignment) -> IndexMatrix:
    """Gamma matrix of the consistent index with the given split choices."""
    columns: dict[int, dict[str, Fraction]] = {}
    for e in tree.edges():
        col = {
            taxon: mono.evaluate(beta.by_class)
            for taxon, mono in analysis.monomials_at(e).items()
        }
        columns[e] = {t: g for t, g in col.items() if g != 0}
    return IndexMatrix(tree, columns, provenance="split-assignment")


def score(tree: PhyloTree, gamma: IndexMatrix) -> dict[str, Fraction]:
    """s = Gamma * l, an exact score per taxon."""
    out = {t: Fraction(0) for t in tree.taxa}
    for e, col in gamma.columns.items():
        length = tree.length(e)
        if length == 0:
            continue
        for taxon, g in col.items():
            out[taxon] += g * length
    return out


def fair_proportion(tree: PhyloTree) -> dict[str, Fraction]:
    """Each edge shared uniformly over the taxa below its head."""
    out = {t: Fraction(0) for t in tree.taxa}
    for e in tree.edges():
        share = tree.length(e) / len(tree.leafset(e))
        for taxon in tree.leafset(e):
            out[taxon] += share
    return out


def fair_proportion_matrix(tree: PhyloTree) -> IndexMatrix:
    columns = {
        e: {t: Fraction(1, len(tree.leafset(e))) for t in tree.leafset(e)}
        for e in tree.edges()
    }
    return IndexMatrix(tree, columns, provenance="fair-proportion")


def check_conditions(tree: PhyloTree, analysis: SymmetryAnalysis, gamma: IndexMatrix) -> ConditionReport:
    """Verify convexity, descent and the neutrality ties of a raw Gamma.

    Neutrality is checked in its extended reading: within each column the
    allocation must be constant on every automorphism orbit of the head
    subtree, and columns of class-mate edges must be copies of each other
    under the canonical leaf pairing.
    """
    report = ConditionReport()
    for e in tree.edges():
        col = gamma.columns.get(e, {})
        below = tree.leafset(e)
        total = sum(col.values(), Fraction(0))
        if total != 1:
            report.violations.append(f"convexity: column {tree.edge_name(e)} sums to {total}")
        for taxon, g in col.items():
            if taxon not in below and g != 0:
                report.violations.append(
                    f"descent: gamma({taxon}, {tree.edge_name(e)}) = {g} off the path"
                )
        for orbit in analysis.orbits(e):
            values = {col.get(t, Fraction(0)) for t in orbit}
            if len(values) > 1:
                report.violations.append(
                    f"neutrality: column {tree.edge_name(e)} not constant on {sorted(orbit)}"
                )
    for cls in analysis.classes:
        rep = cls.rep
        rep_col = gamma.columns.get(rep, {})
        for other in cls.members:
            if other == rep:
                continue
            pair = analysis.pairing(rep, other)
            for taxon, image in pair.items():
                lhs = rep_col.get(taxon, Fraction(0))
                rhs = gamma.columns.get(other, {}).get(image, Fraction(0))
                if lhs != rhs:
                    report.violations.append(
                        "neutrality: columns "
                        f"{tree.edge_name(rep)} and {tree.edge_name(other)} "
                        f"disagree at {taxon}->{image}"
                    )
    return report


def check_consistency(tree: PhyloTree, gamma: IndexMatrix) -> ConsistencyReport:
    """Find the consistency constants k, or report the pairs lacking one.

    For an internal vertex v and edges e1 deeper than e2 on P(v), k is the
    common ratio of the two child-sum pairs; both-zero pairs are vacuous.
    """
    report = ConsistencyReport()

    def child_sums(v: int, e: int) -> list[Fraction]:
        col = gamma.columns.get(e, {})
        return [
            sum((col.get(t, Fraction(0)) for t in tree.leafset(w)), Fraction(0))
            for w in tree.children[v]
        ]

    for v in tree.vertices():
        if tree.is_leaf(v):
            continue
        path = [e for e in tree.ancestors(v) if e != tree.root]
        for i, shallow in enumerate(path):
            for deep in path[i + 1:]:
                sums_deep = child_sums(v, deep)
                sums_shallow = child_sums(v, shallow)
                if all(s == 0 for s in sums_deep) and all(s == 0 for s in sums_shallow):
                    continue
                k: Fraction | None = None
                consistent = True
                for sd, ss in zip(sums_deep, sums_shallow):
                    if ss == 0:
                        if sd != 0:
                            consistent = False
                        continue
                    ratio = sd / ss
                    if k is None:
                        k = ratio
                    elif ratio != k:
                        consistent = False
                if consistent and k is None:
                    # deep sums vanish while shallow ones do not: k = 0
                    k = Fraction(0)
                key = (tree.leafset(v), deep, shallow)
                if consistent and k is not None and k >= 0:
                    report.constants[key] = k
                else:
                    report.violations.append(
                        f"no consistency constant at vertex {{{','.join(sorted(tree.leafset(v)))}}} "
                        f"for edges {tree.edge_name(deep)}, {tree.edge_name(shallow)}"
                    )
    return report
