"""Matchings on finite trees and the determinantal measures of their projection kernels."""

__version__ = "0.1.0"

from .config import Caps, CapExceeded, current_caps
from .trees import (
    Bipartition,
    Graph,
    RootedTree,
    Tree,
    TreeError,
    bipartition_by_parity,
    parse_graph,
    parse_tree,
    root_at,
)
from .laws import SubsetLaw, tv_distance

__all__ = [
    "__version__",
    "Caps",
    "CapExceeded",
    "current_caps",
    "Bipartition",
    "Graph",
    "RootedTree",
    "Tree",
    "TreeError",
    "bipartition_by_parity",
    "parse_graph",
    "parse_tree",
    "root_at",
    "SubsetLaw",
    "tv_distance",
]
