"""Brute-force ground truth over all simple paths (small graphs only)."""
from __future__ import annotations

from ..energy import EnergyModelKind, LoadConfig, VehicleSpec, battery_adjust, edge_cost
from ..graph import RoadGraph
from .search import Query, SearchResult, SearchStats, infeasible

MAX_ORACLE_VERTICES = 12


def exhaustive_oracle(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    query: Query,
) -> SearchResult:
    """Enumerate every simple origin-destination path and simulate it.

    Edge costs come straight from :func:`edge_cost`; the battery rules are
    applied hop by hop.  The feasible path that ends with the most energy
    wins (ties: the one found first).
    """
    if graph.n_vertices > MAX_ORACLE_VERTICES:
        raise ValueError(f"oracle limited to {MAX_ORACLE_VERTICES} vertices")
    e_max = vehicle.capacity
    succ = {
        v.id: [(e.target, edge_cost(graph, e, vehicle, load, kind)) for e in graph.out_edges(v.id)]
        for v in graph.vertices
    }
    best: list = [None, None]  # energy left, path
    visited = 0

    def walk(u: int, energy: float, path: list[int], trace: list[float]):
        nonlocal visited
        visited += 1
        if u == query.destination:
            if best[0] is None or energy > best[0]:
                best[0], best[1] = energy, (list(path), list(trace))
            return
        for v, cost in succ[u]:
            if v in path or energy < cost:
                continue
            nxt = energy - battery_adjust(energy, cost, e_max)
            path.append(v)
            trace.append(nxt)
            walk(v, nxt, path, trace)
            path.pop()
            trace.pop()

    walk(query.origin, query.initial_energy, [query.origin], [query.initial_energy])
    stats = SearchStats(settled=visited)
    if best[0] is None:
        return infeasible(stats)
    path, trace = best[1]
    return SearchResult(True, path, query.initial_energy - best[0], trace, stats)
