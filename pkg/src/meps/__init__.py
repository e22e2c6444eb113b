"""Hypergraph agents whose deliberation walks carry several excitations at once."""
from ._kernels import BACKEND
from .clips import Clip, ClipTable, Hyperedge, canon
from .deliberation import (
    CouplingMaps,
    DeadEnd,
    MappingError,
    Termination,
    WalkRecord,
    apply_edge,
    couple_in,
    step,
    walk,
)
from .learning import LearningParams, update_glow, update_h, update_split
from .probability import Softmax, Standard, to_probabilities
from .table import (
    BiasKind,
    CategoryCutoffs,
    ConfigurationError,
    FeedForward,
    ManyBodyTable,
    build_table,
    count_parameters,
    relevant_hvalues,
)

__version__ = "0.1.0"
