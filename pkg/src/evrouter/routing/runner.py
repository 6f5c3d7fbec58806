"""Dispatch a query to the search matching a prepared algorithm."""
from __future__ import annotations

from ..energy import EnergyModelKind, LoadConfig, VehicleSpec
from ..graph import RoadGraph
from .search import Query, SearchResult, bellman_ford_energy, dijkstra_energy
from .shifts import Prepared


def solve(
    prepared: Prepared,
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    query: Query,
    *,
    arrays=None,
) -> SearchResult:
    if prepared.name == "bellman-ford":
        return bellman_ford_energy(graph, vehicle, load, kind, query, arrays=arrays)
    return dijkstra_energy(graph, vehicle, load, kind, query, prepared.shift, arrays=arrays)
