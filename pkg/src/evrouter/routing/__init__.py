from .oracle import exhaustive_oracle
from .search import (
    Query,
    SearchResult,
    SearchStats,
    bellman_ford_energy,
    dijkstra_energy,
)
from .shifts import (
    ALGORITHMS,
    AlphaBounds,
    ContractViolation,
    HeightAlpha,
    JohnsonPotential,
    NegativeCycleError,
    NoShift,
    PiShift,
    PotShift,
    Prepared,
    RoutingError,
    ShiftStrategy,
    alpha_scan,
    johnson_preprocess,
    kernel_inputs,
    make_height_alpha,
    prepare,
)
from .runner import solve

__all__ = [
    "ALGORITHMS",
    "AlphaBounds",
    "ContractViolation",
    "HeightAlpha",
    "JohnsonPotential",
    "NegativeCycleError",
    "NoShift",
    "PiShift",
    "PotShift",
    "Prepared",
    "Query",
    "RoutingError",
    "SearchResult",
    "SearchStats",
    "ShiftStrategy",
    "alpha_scan",
    "bellman_ford_energy",
    "dijkstra_energy",
    "exhaustive_oracle",
    "johnson_preprocess",
    "kernel_inputs",
    "make_height_alpha",
    "prepare",
    "solve",
]
