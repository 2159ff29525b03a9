"""Tree generation and the description-vs-oracle verification sweep."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from . import oracle, polytope
from .symmetry import analyze
from .tree import PhyloTree, parse_newick

RANDOM_LENGTH_POOL = (Fraction(1), Fraction(1, 2), Fraction(2), Fraction(3))


def all_shapes(max_leaves: int) -> list[str]:
    """Canonical Newick strings of every rooted binary shape with unit
    lengths, from 2 up to max_leaves leaves, taxa labeled x1, x2, ... in
    serialization order."""
    shapes: dict[int, list[str]] = {1: ["L"]}
    for n in range(2, max_leaves + 1):
        seen = set()
        out = []
        for a in range(1, n // 2 + 1):
            for left in shapes[a]:
                for right in shapes[n - a]:
                    key = "(" + "".join(sorted((left, right))) + ")"
                    if key not in seen:
                        seen.add(key)
                        out.append(key)
        shapes[n] = out

    def to_newick(code: str) -> str:
        counter = [0]
        pos = [0]

        def walk() -> str:
            if code[pos[0]] == "L":
                pos[0] += 1
                counter[0] += 1
                return f"x{counter[0]}:1"
            pos[0] += 1  # "("
            left = walk()
            right = walk()
            pos[0] += 1  # ")"
            return f"({left},{right}):1"

        body = walk()
        # strip the root length
        return body.rsplit(":", 1)[0] + ";"

    trees = []
    for n in range(2, max_leaves + 1):
        trees.extend(to_newick(code) for code in shapes[n])
    return trees


def random_tree(rng: random.Random, max_leaves: int) -> PhyloTree:
    """Random topology by repeated joining, lengths from the small pool."""
    n = rng.randint(2, max_leaves)
    labels = [f"x{i + 1}" for i in range(n)]
    rng.shuffle(labels)
    nodes = [f"{name}:{_fmt(rng.choice(RANDOM_LENGTH_POOL))}" for name in labels]
    while len(nodes) > 1:
        i = rng.randrange(len(nodes))
        a = nodes.pop(i)
        j = rng.randrange(len(nodes))
        b = nodes.pop(j)
        if len(nodes) == 0:
            nodes.append(f"({a},{b});")
        else:
            nodes.append(f"({a},{b}):{_fmt(rng.choice(RANDOM_LENGTH_POOL))}")
    return parse_newick(nodes[0])


def _fmt(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass
class SweepResult:
    checked: int
    failures: list[tuple[str, list[str]]]

    @property
    def ok(self) -> bool:
        return not self.failures


def verify_tree(tree: PhyloTree) -> oracle.ComparisonReport:
    analysis = analyze(tree)
    description = polytope.facets(tree, analysis)
    hull = oracle.minkowski_hull(tree, analysis)
    return oracle.compare(description, hull)


def verify_sweep(
    max_leaves: int = 7,
    random_count: int = 0,
    seed: int = 0,
    random_max_leaves: int = 8,
    leaf_guard: int | None = None,
) -> SweepResult:
    """Exhaustive shapes up to max_leaves plus seeded random trees."""
    failures = []
    checked = 0
    for newick in all_shapes(max_leaves):
        tree = parse_newick(newick)
        try:
            report = verify_tree(tree)
            problems = report.problems
        except Exception as exc:   # surfaced, never swallowed silently
            problems = [f"exception: {exc}"]
        checked += 1
        if problems:
            failures.append((tree.serialize(), problems))
    rng = random.Random(seed)
    for _ in range(random_count):
        tree = random_tree(rng, random_max_leaves)
        try:
            report = verify_tree(tree)
            problems = report.problems
        except Exception as exc:
            problems = [f"exception: {exc}"]
        checked += 1
        if problems:
            failures.append((tree.serialize(), problems))
    return SweepResult(checked, failures)
