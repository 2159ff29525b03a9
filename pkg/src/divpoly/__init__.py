"""Exact diversity index polytopes of rooted binary phylogenetic trees."""

from .tree import PhyloTree, Forest, NewickError, TreeError, parse_newick
from .symmetry import (
    SymmetryAnalysis,
    TieGroup,
    analyze,
    edge_classes,
    is_balanced,
    is_h_balanced,
    shape_code,
)
from .indices import (
    IndexMatrix,
    SplitAssignment,
    check_conditions,
    check_consistency,
    fair_proportion,
    fair_proportion_matrix,
    materialize_gamma,
    score,
)
from .allocation import (
    AllocationReport,
    allocation_report,
    edge_selector,
    lb_allocation,
    max_alloc_r,
    mb_allocation,
    realloc,
    representatives,
    ub_allocation,
)
from .polytope import (
    CanonicalBasis,
    PolytopeDescription,
    PolytopeError,
    canonical_basis,
    exchange_basis,
    extreme_points,
    facets,
    membership,
    optimize,
    project,
    z_family,
)
from .oracle import (
    HullResult,
    OracleError,
    class_blocks,
    compare,
    minkowski_hull,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
