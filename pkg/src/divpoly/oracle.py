"""Brute-force construction of the polytope from the index conditions alone.

The convexity, descent and neutrality conditions constrain each edge class
independently, so the score set factorizes into a Minkowski sum of per-class
polytopes.  Within one class the feasible columns form a simplex over the
automorphism orbits of the representative head, copied to the other members
through the canonical pairing.  No consistency is imposed anywhere, which
makes agreement with the split-parametrization description a genuine check
that consistent indices already realize every achievable score vector.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from . import hull, linalg
from .indices import IndexMatrix
from .symmetry import EdgeClass, SymmetryAnalysis
from .tree import PhyloTree, TreeError

DEFAULT_LEAF_GUARD = 10


class OracleError(ValueError):
    pass


@dataclass
class ClassBlock:
    """Extreme score contributions of one edge class."""

    edge_class: EdgeClass
    groups: tuple[frozenset[str], ...]
    vertices: list[tuple[Fraction, ...]]    # one contribution vector per group
    columns: list[dict[int, dict[str, Fraction]]]  # per group: edge -> column


@dataclass
class HullResult:
    vertices: list[tuple[Fraction, ...]]
    equalities: list[tuple[tuple[Fraction, ...], Fraction]]
    facets: list[tuple[tuple[Fraction, ...], Fraction]]   # coeffs . s <= rhs

    @property
    def dim(self) -> int:
        return linalg.affine_rank(self.vertices) - 1


@dataclass
class ComparisonReport:
    equal: bool
    problems: list[str]
    witness: tuple[Fraction, ...] | None = None


def class_blocks(tree: PhyloTree, analysis: SymmetryAnalysis) -> list[ClassBlock]:
    """Per class: one extreme column per orbit of the representative head,
    copied to every member via the canonical pairing and weighted by lengths."""
    idx = {t: i for i, t in enumerate(tree.taxa)}
    blocks = []
    for cls in analysis.classes:
        rep = cls.rep
        groups = analysis.orbits(rep)
        vertices = []
        columns = []
        for group in groups:
            share = Fraction(1, len(group))
            cols: dict[int, dict[str, Fraction]] = {
                rep: {t: share for t in group}
            }
            for other in cls.members:
                if other == rep:
                    continue
                pair = analysis.pairing(rep, other)
                cols[other] = {pair[t]: share for t in group}
            vec = [Fraction(0)] * len(tree.taxa)
            for e, col in cols.items():
                length = tree.length(e)
                for t, g in col.items():
                    vec[idx[t]] += g * length
            vertices.append(tuple(vec))
            columns.append(cols)
        blocks.append(ClassBlock(cls, groups, vertices, columns))
    return blocks


def block_matrix(tree: PhyloTree, blocks: Sequence[ClassBlock], choices: Sequence[int]) -> IndexMatrix:
    """Assemble a full Gamma from one orbit choice per class."""
    columns: dict[int, dict[str, Fraction]] = {}
    for block, choice in zip(blocks, choices):
        for e, col in block.columns[choice].items():
            columns[e] = dict(col)
    return IndexMatrix(tree, columns, provenance="oracle-block")


def minkowski_hull(
    tree: PhyloTree,
    analysis: SymmetryAnalysis,
    blocks: Sequence[ClassBlock] | None = None,
    leaf_guard: int = DEFAULT_LEAF_GUARD,
) -> HullResult:
    """Exact hull of the Minkowski sum of the class contribution polytopes."""
    if len(tree.taxa) > leaf_guard:
        raise OracleError(
            f"{len(tree.taxa)} leaves exceed the oracle guard of {leaf_guard}"
        )
    if blocks is None:
        blocks = class_blocks(tree, analysis)
    n = len(tree.taxa)
    base = tuple(Fraction(0) for _ in range(n))
    points = [base]
    for block in blocks:
        verts = block.vertices
        if len(verts) == 1:
            points = [tuple(a + b for a, b in zip(p, verts[0])) for p in points]
            continue
        summed = {tuple(a + b for a, b in zip(p, v)) for p in points for v in verts}
        points = hull.extreme_points(sorted(summed))
    rep = hull.facets_of_points(points)
    return HullResult(sorted(points), rep.equalities, rep.facets)


def compare(description, hull_result: HullResult) -> ComparisonReport:
    """Vertex sets must match exactly and both H-representations must carve
    out the same region, certified by exact vertex enumeration of each."""
    problems: list[str] = []
    witness = None
    desc_v = set(description.extreme)
    oracle_v = set(hull_result.vertices)
    if desc_v != oracle_v:
        extra = sorted(oracle_v - desc_v) + sorted(desc_v - oracle_v)
        witness = extra[0] if extra else None
        problems.append(
            f"vertex sets differ: {len(desc_v)} from the description, "
            f"{len(oracle_v)} from the oracle"
        )
    for coeffs, rhs in hull_result.facets:
        bad = [p for p in description.extreme if sum(c * x for c, x in zip(coeffs, p)) > rhs]
        if bad:
            witness = witness or bad[0]
            problems.append("an oracle facet cuts off a description vertex")
    for f in description.facets:
        bad = [p for p in hull_result.vertices if not f.holds(p)]
        if bad:
            witness = witness or bad[0]
            problems.append(f"{f.kind} facet {f.generator} cuts off an oracle vertex")
    n = len(description.tree.taxa)
    ineqs = []
    for f in description.facets:
        if f.sense == "<=":
            ineqs.append((list(f.coeffs), f.rhs))
        else:
            ineqs.append(([-c for c in f.coeffs], -f.rhs))
    try:
        desc_region_v = set(
            hull.vertices_of_system(description.affine_equalities, ineqs, n)
        )
    except hull.GeometryError as exc:
        problems.append(f"description region is not a polytope: {exc}")
        desc_region_v = set()
    if desc_region_v and desc_region_v != oracle_v:
        extra = sorted(desc_region_v - oracle_v) + sorted(oracle_v - desc_region_v)
        witness = witness or (extra[0] if extra else None)
        problems.append(
            "the description region has different vertices than the oracle hull"
        )
    oracle_ineqs = [(list(c), r) for c, r in hull_result.facets]
    try:
        oracle_region_v = set(
            hull.vertices_of_system(hull_result.equalities, oracle_ineqs, n)
        )
    except hull.GeometryError as exc:
        problems.append(f"oracle region is not a polytope: {exc}")
        oracle_region_v = set()
    if oracle_region_v and oracle_region_v != oracle_v:
        problems.append("oracle H-representation does not reproduce its vertices")
    return ComparisonReport(not problems, problems, witness)


# -- rank lemma harness --------------------------------------------------------

def sample_rank_lemma_instance(rng: random.Random, max_m: int = 8):
    """Random (A, B) satisfying the full-rank lemma hypotheses.

    A has constant positive rows; B is diagonal (b11 >= 0, bii > 0 for i >= 2)
    with at most m-1 negative off-diagonal entries, at most one per row and
    at most one per column.
    """
    m = rng.randint(2, max_m)
    a_vals = [Fraction(rng.randint(1, 12), rng.randint(1, 6)) for _ in range(m)]
    a = [[a_vals[i]] * m for i in range(m)]
    b = [[Fraction(0)] * m for _ in range(m)]
    b[0][0] = Fraction(rng.randint(0, 8), rng.randint(1, 4))
    for i in range(1, m):
        b[i][i] = Fraction(rng.randint(1, 10), rng.randint(1, 4))
    cells = [(i, j) for i in range(m) for j in range(m) if i != j]
    rng.shuffle(cells)
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    placed = 0
    budget = rng.randint(0, m - 1)
    for i, j in cells:
        if placed == budget:
            break
        if i in used_rows or j in used_cols:
            continue
        b[i][j] = -Fraction(rng.randint(1, 9), rng.randint(1, 3))
        used_rows.add(i)
        used_cols.add(j)
        placed += 1
    return a, b


def rank_lemma_holds(a: Sequence[Sequence[Fraction]], b: Sequence[Sequence[Fraction]]) -> bool:
    m = len(a)
    total = [[a[i][j] + b[i][j] for j in range(m)] for i in range(m)]
    return linalg.exact_rank(total) == m
