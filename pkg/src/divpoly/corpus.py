"""Bundled reference trees and the anchored facts each must reproduce.

Loading a corpus tree re-checks its facts; a failed check raises
`CorpusError` so that a broken reconstruction can never feed the test suite
or the CLI silently.
"""

from __future__ import annotations

from fractions import Fraction
from importlib import resources

from . import allocation
from .symmetry import SymmetryAnalysis, analyze
from .tree import PhyloTree, parse_newick

CORPUS_NAMES = ("t6", "t9", "fig1_right", "fig2")


class CorpusError(AssertionError):
    pass


def _read(name: str) -> str:
    return resources.files("divpoly.data").joinpath(f"{name}.nwk").read_text()


def _require(cond: bool, name: str, fact: str) -> None:
    if not cond:
        raise CorpusError(f"corpus tree {name!r} fails its anchored fact: {fact}")


def _check_t6(tree: PhyloTree, analysis: SymmetryAnalysis) -> None:
    _require(analysis.degrees_of_freedom == 2, "t6", "two degrees of freedom")
    free = {frozenset(tree.leafset(e)) for e in analysis.independent_edges}
    _require(
        free == {frozenset({"x1", "x2", "x3"}), frozenset({"x1", "x2", "x3", "x4", "x5"})},
        "t6",
        "independent edges at the 3-leaf and 5-leaf heads",
    )
    _require(allocation.lb_allocation(tree, analysis, "x6") == 1, "t6", "LB(x6) = 1")
    _require(
        allocation.ub_allocation(tree, analysis, "x1") == Fraction(5, 2),
        "t6",
        "UB(x1) = 5/2",
    )


def _check_t9(tree: PhyloTree, analysis: SymmetryAnalysis) -> None:
    _require(analysis.degrees_of_freedom == 3, "t9", "three degrees of freedom")
    free = {frozenset(tree.leafset(e)) for e in analysis.independent_edges}
    expected = {
        frozenset({"x1", "x2", "x3"}),
        frozenset({"x1", "x2", "x3", "x4", "x5", "x6", "x7"}),
        frozenset({"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8"}),
    }
    _require(free == expected, "t9", "independent edges e13, e15, e16")
    lb = {t: allocation.lb_allocation(tree, analysis, t) for t in ("x1", "x4", "x8")}
    _require(lb["x1"] == Fraction(3, 2), "t9", "LB(x1) = 3/2")
    _require(lb["x4"] == Fraction(7, 4), "t9", "LB(x4) = 7/4")
    _require(lb["x8"] == 1, "t9", "LB(x8) = 1")
    n = {t: analysis.n_of(t) for t in ("x1", "x3", "x4", "x8")}
    _require(n == {"x1": 2, "x3": 1, "x4": 4, "x8": 1}, "t9", "group sizes 2/1/4/1")
    for taxa, value in ((("x8",), 1), (("x4", "x8"), 2), (("x1", "x4", "x8"), 3)):
        got = allocation.max_alloc_r(tree, analysis, taxa, ("x1", "x3", "x4", "x8")).value
        _require(got == value, "t9", f"max allocation for {taxa} is {value}")


def _check_fig(tree: PhyloTree, analysis: SymmetryAnalysis, name: str) -> None:
    _require(analysis.degrees_of_freedom == 2, name, "two degrees of freedom")
    reps = allocation.representatives(tree, analysis, "x1", tree.taxa)
    _require(
        set(reps.chosen) == {"x2", "x3", "x4", "x6", "x8"},
        name,
        "representatives of F(X - x1)",
    )
    group = analysis.tie_group("x1", tree.edge_by_leafset({"x1", "x2", "x3", "x4", "x5", "x7"})).taxa
    _require(group == frozenset({"x1", "x2", "x4", "x7"}), name, "four-way tie group")
    y = ("x1", "x2", "x5", "x6", "x7")
    r1 = allocation.max_alloc_r(tree, analysis, y, y, anchor="x1")
    lb_sum = sum((allocation.lb_context(tree, analysis, t) for t in y), Fraction(0))
    _require(r1.value - lb_sum == 4, name, "anchored allocation for x1 over Y")
    r5 = allocation.max_alloc_r(tree, analysis, y, y, anchor="x5")
    _require(r5.value - lb_sum == 2, name, "anchored allocation for x5 over Y")


_CHECKS = {
    "t6": _check_t6,
    "t9": _check_t9,
    "fig1_right": lambda t, a: _check_fig(t, a, "fig1_right"),
    "fig2": lambda t, a: _check_fig(t, a, "fig2"),
}


def load(name: str) -> tuple[PhyloTree, SymmetryAnalysis]:
    if name not in CORPUS_NAMES:
        raise KeyError(f"unknown corpus tree {name!r}")
    tree = parse_newick(_read(name))
    analysis = analyze(tree)
    _CHECKS[name](tree, analysis)
    return tree, analysis


def load_all() -> dict[str, tuple[PhyloTree, SymmetryAnalysis]]:
    return {name: load(name) for name in CORPUS_NAMES}
