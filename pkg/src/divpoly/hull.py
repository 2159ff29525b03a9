"""Exact polyhedral kernel: double description over integer homogeneous data.

Supports the two desk-scale conversions the package needs, both exact:

* `facets_of_points` (V- to H-representation) via the polar polytope, and
* `vertices_of_system` (H- to V-representation) via homogenization,

with degenerate inputs handled by an explicit affine-hull reduction first.
Rays are primitive integer tuples; adjacency in the double description step
uses the standard combinatorial zero-set test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

from . import linalg

Point = tuple[Fraction, ...]
IntRow = tuple[int, ...]


class GeometryError(ValueError):
    pass


def _primitive(vec: Sequence[int]) -> IntRow:
    g = 0
    for x in vec:
        g = gcd(g, abs(x))
    if g in (0, 1):
        return tuple(vec)
    return tuple(x // g for x in vec)


def _int_row(fracs: Sequence[Fraction]) -> IntRow:
    lcm = 1
    for f in fracs:
        lcm = lcm * f.denominator // gcd(lcm, f.denominator)
    return _primitive([int(f * lcm) for f in fracs])


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


def dd_cone(rows: list[IntRow], dim: int) -> list[IntRow]:
    """Extreme rays of {y : row . y >= 0 for every row}.

    Requires the row matrix to have full column rank (pointed cone); raises
    GeometryError otherwise.
    """
    rows = [r for r in rows if any(r)]
    frac_rows = [[Fraction(x) for x in r] for r in rows]
    red, pivots = linalg.rref(frac_rows)
    if len(pivots) < dim:
        raise GeometryError("cone is not pointed (row rank below dimension)")

    # greedy independent square subsystem for the initial simplex of rays
    chosen: list[int] = []
    basis: list[list[Fraction]] = []
    for i, row in enumerate(frac_rows):
        if len(chosen) == dim:
            break
        cand = basis + [row]
        if linalg.exact_rank(cand) > len(basis):
            basis.append(row)
            chosen.append(i)
    square = [frac_rows[i] for i in chosen]
    rays: list[IntRow] = []
    for j in range(dim):
        unit = [Fraction(1) if k == j else Fraction(0) for k in range(dim)]
        col = linalg.solve(square, unit)
        assert col is not None
        rays.append(_int_row(col))

    processed = list(chosen)
    for idx, row in enumerate(rows):
        if idx in chosen:
            continue
        tight = {
            r: frozenset(i for i in processed if _dot(rows[i], r) == 0) for r in rays
        }
        plus = [r for r in rays if _dot(row, r) > 0]
        zero = [r for r in rays if _dot(row, r) == 0]
        minus = [r for r in rays if _dot(row, r) < 0]
        new_rays = set(plus) | set(zero)
        for rp in plus:
            for rm in minus:
                common = tight[rp] & tight[rm]
                adjacent = True
                for other in rays:
                    if other is rp or other is rm:
                        continue
                    if common <= tight[other]:
                        adjacent = False
                        break
                if not adjacent:
                    continue
                sp = _dot(row, rp)
                sm = _dot(row, rm)
                new_rays.add(_primitive([sp * b - sm * a for a, b in zip(rp, rm)]))
        rays = sorted(new_rays)
        processed.append(idx)
    return rays


@dataclass
class AffineChart:
    """Exact parametrization of the affine hull of a point set.

    Points on the hull satisfy `equalities`; `coords` maps a hull point to
    full-dimensional coordinates (a subset of shifted coordinates), and
    facet rows in chart coordinates lift back with `lift_inequality`.
    """

    base: Point
    pivot_cols: tuple[int, ...]
    equalities: list[tuple[tuple[Fraction, ...], Fraction]]
    ambient_dim: int

    @property
    def dim(self) -> int:
        return len(self.pivot_cols)

    def coords(self, p: Sequence[Fraction]) -> Point:
        return tuple(p[c] - self.base[c] for c in self.pivot_cols)

    def lift_inequality(self, coeffs: Sequence[Fraction], rhs: Fraction) -> tuple[tuple[Fraction, ...], Fraction]:
        full = [Fraction(0)] * self.ambient_dim
        shift = Fraction(0)
        for a, c in zip(coeffs, self.pivot_cols):
            full[c] = a
            shift += a * self.base[c]
        return tuple(full), rhs + shift


def affine_chart(points: Sequence[Point]) -> AffineChart:
    if not points:
        raise GeometryError("no points")
    base = points[0]
    n = len(base)
    diffs = [[x - b for x, b in zip(p, base)] for p in points[1:]]
    _, pivots = linalg.rref(diffs)
    eq_rows = linalg.nullspace(diffs) if diffs else [
        [Fraction(1) if j == i else Fraction(0) for j in range(n)] for i in range(n)
    ]
    equalities = []
    for row in eq_rows:
        coeffs = _int_row(row)
        coeffs_f = tuple(Fraction(c) for c in coeffs)
        rhs = sum(c * x for c, x in zip(coeffs_f, base))
        equalities.append((coeffs_f, rhs))
    return AffineChart(base, tuple(pivots), equalities, n)


@dataclass
class HRep:
    """Exact H-representation: equalities plus irredundant facet inequalities."""

    equalities: list[tuple[tuple[Fraction, ...], Fraction]]
    facets: list[tuple[tuple[Fraction, ...], Fraction]]   # coeffs . x <= rhs
    dim: int


def facets_of_points(points: Sequence[Point]) -> HRep:
    """Irredundant H-representation of the convex hull of a point set."""
    pts = sorted(set(points))
    if not pts:
        raise GeometryError("no points")
    chart = affine_chart(pts)
    k = chart.dim
    if k == 0:
        return HRep(chart.equalities, [], 0)
    coords = [chart.coords(p) for p in pts]
    center = tuple(sum(col, Fraction(0)) / len(coords) for col in zip(*coords))
    rows: list[IntRow] = []
    for t in coords:
        shifted = [x - c for x, c in zip(t, center)]
        rows.append(_int_row([Fraction(1), *(-x for x in shifted)]))
    rows.append(_int_row([Fraction(1)] + [Fraction(0)] * k))
    rays = dd_cone(rows, k + 1)
    facets = []
    for ray in rays:
        if ray[0] <= 0:
            raise GeometryError("polar polytope is unbounded; hull degenerate")
        normal = tuple(Fraction(x, ray[0]) for x in ray[1:])
        # facet in chart coords: normal . (t - center) <= 1
        rhs = Fraction(1) + sum(n * c for n, c in zip(normal, center))
        coeffs, full_rhs = chart.lift_inequality(normal, rhs)
        ints = _int_row([*coeffs, full_rhs])
        facets.append((tuple(Fraction(v) for v in ints[:-1]), Fraction(ints[-1])))
    facets.sort()
    return HRep(chart.equalities, facets, k)


def extreme_points(points: Sequence[Point]) -> list[Point]:
    """The subset of points that are vertices of the convex hull."""
    pts = sorted(set(points))
    if len(pts) <= 1:
        return pts
    rep = facets_of_points(pts)
    if rep.dim == 0:
        return pts[:1]
    out = []
    for p in pts:
        active = [list(c) for c, b in rep.facets if sum(x * y for x, y in zip(c, p)) == b]
        # p is a vertex iff its active facet normals pin the whole chart
        span = active + [list(c) for c, _ in rep.equalities]
        if linalg.exact_rank(span) == len(p):
            out.append(p)
    return out


def vertices_of_system(
    equalities: Sequence[tuple[Sequence[Fraction], Fraction]],
    inequalities: Sequence[tuple[Sequence[Fraction], Fraction]],
    dim: int,
) -> list[Point]:
    """All vertices of {x : eq, coeffs . x <= rhs}; raises if unbounded."""
    if equalities:
        a = [list(c) for c, _ in equalities]
        b = [r for _, r in equalities]
        particular = linalg.solve(a, b)
        if particular is None:
            return []
        null = linalg.nullspace(a)
    else:
        particular = [Fraction(0)] * dim
        null = [[Fraction(1) if j == i else Fraction(0) for j in range(dim)] for i in range(dim)]
    k = len(null)
    if k == 0:
        p = tuple(particular)
        ok = all(sum(c * x for c, x in zip(coeffs, p)) <= rhs for coeffs, rhs in inequalities)
        return [p] if ok else []
    rows: list[IntRow] = []
    for coeffs, rhs in inequalities:
        ap = sum(c * x for c, x in zip(coeffs, particular))
        an = [sum(c * null[j][i] for i, c in enumerate(coeffs)) for j in range(k)]
        rows.append(_int_row([rhs - ap, *(-x for x in an)]))
    rows.append(_int_row([Fraction(1)] + [Fraction(0)] * k))
    rays = dd_cone(rows, k + 1)
    verts = []
    for ray in rays:
        if ray[0] == 0:
            raise GeometryError("polyhedron is unbounded")
        t = [Fraction(x, ray[0]) for x in ray[1:]]
        point = tuple(
            particular[i] + sum(null[j][i] * t[j] for j in range(k))
            for i in range(dim)
        )
        verts.append(point)
    return sorted(set(verts))
