"""Energy-optimal point-to-point search."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..energy import NONNEG_TOL, EnergyModelKind, LoadConfig, VehicleSpec, battery_adjust
from ..graph import RoadGraph
from . import _kernels as K
from .shifts import (
    ContractViolation,
    JohnsonPotential,
    NegativeCycleError,
    NoShift,
    RoutingError,
    ShiftStrategy,
    _describe,
    kernel_inputs,
)


@dataclass(frozen=True)
class Query:
    origin: int
    destination: int
    initial_energy: float


@dataclass
class SearchStats:
    settled: int = 0
    scanned: int = 0
    relaxed: int = 0
    pushes: int = 0
    clamp_events: int = 0
    rounds: int = 0
    wall_time: float = 0.0


@dataclass
class SearchResult:
    feasible: bool
    path: list[int]
    total_energy: float
    energy_trace: list[float]
    stats: SearchStats = field(default_factory=SearchStats)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "path": self.path,
            "total_energy": self.total_energy if self.feasible else None,
            "energy_trace": self.energy_trace,
            "stats": asdict(self.stats),
        }


def infeasible(stats: SearchStats | None = None) -> SearchResult:
    return SearchResult(False, [], float("nan"), [], stats or SearchStats())


def _check_query(graph: RoadGraph, vehicle: VehicleSpec, query: Query) -> tuple[int, int]:
    if not 0.0 <= query.initial_energy <= vehicle.capacity:
        raise RoutingError(
            f"initial energy {query.initial_energy} outside [0, {vehicle.capacity}]"
        )
    return graph.index_of(query.origin), graph.index_of(query.destination)


def _walk_back(pred_edge: np.ndarray, tails: np.ndarray, src: int, dst: int) -> list[int]:
    slots = []
    v = dst
    while v != src:
        k = pred_edge[v]
        if k < 0 or len(slots) > pred_edge.shape[0]:
            raise ContractViolation("predecessor chain does not lead back to the origin")
        slots.append(int(k))
        v = int(tails[k])
    slots.reverse()
    return slots


def _trace(costs: np.ndarray, e_init: float, e_max: float) -> list[float]:
    e = e_init
    trace = [e]
    for c in costs.tolist():
        e -= battery_adjust(e, c, e_max)
        trace.append(e)
    return trace


def _result(graph, arrays, slots, src, e_init, e_max, total, stats) -> SearchResult:
    _, _, lengths, dh, codes, coef = arrays
    slots = np.asarray(slots, dtype=np.int64)
    s = dh[slots] / lengths[slots]
    q = coef[codes[slots]]
    costs = (q[:, 0] * s * s + q[:, 1] * s + q[:, 2]) * lengths[slots] / 100.0
    trace = _trace(costs, e_init, e_max)
    path_idx = [src] + graph.heads[slots].tolist()
    if len(set(path_idx)) != len(path_idx):
        raise ContractViolation("search returned a path with a repeated vertex")
    if min(trace) < -NONNEG_TOL or max(trace) > e_max + NONNEG_TOL:
        raise ContractViolation("energy trace left [0, capacity]")
    return SearchResult(True, graph.ids(path_idx), total, trace, stats)


def _stats(raw: np.ndarray, wall: float) -> SearchStats:
    return SearchStats(
        settled=int(raw[K.SETTLED]),
        scanned=int(raw[K.SCANNED]),
        relaxed=int(raw[K.RELAXED]),
        pushes=int(raw[K.PUSHES]),
        clamp_events=int(raw[K.CLAMPS]),
        rounds=int(raw[K.ROUNDS]),
        wall_time=wall,
    )


def dijkstra_energy(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    query: Query,
    shift: ShiftStrategy = NoShift(),
    *,
    arrays=None,
    early_exit: bool = True,
) -> SearchResult:
    """Energy-optimal Dijkstra search on reduced costs.

    Parameters
    ----------
    shift : shift strategy
        Supplies the per-edge shift subtracted from the (battery-adjusted)
        edge cost.  Strategies that guarantee non-negative reduced costs
        (Johnson, height-alpha, no shift) raise ``ContractViolation`` when
        that guarantee fails; pot/pi follow the clamp-and-count rule and
        report clamps in ``stats.clamp_events``.
    arrays : tuple, optional
        Precomputed :func:`kernel_inputs`; saves re-deriving them per query.
    early_exit : bool
        Stop once the destination is settled.  ``False`` settles every
        reachable vertex first (same answer, more work).

    Returns
    -------
    SearchResult
        ``total_energy`` is the initial energy minus the energy left at the
        destination.
    """
    src, dst = _check_query(graph, vehicle, query)
    arrays = arrays or kernel_inputs(graph, vehicle, load, kind)
    potential = shift.potential if isinstance(shift, JohnsonPotential) else _zeros(graph.n_vertices)
    t0 = time.perf_counter()
    C, E, pred, pred_edge, order, raw = K.dijkstra_energy_kernel(
        *arrays, shift.coefficient(vehicle, load, kind), potential,
        src, dst if early_exit else -1, query.initial_energy, vehicle.capacity, NONNEG_TOL,
    )
    stats = _stats(raw, time.perf_counter() - t0)
    if shift.strict and stats.clamp_events:
        edge = _describe(graph, int(raw[K.FIRST_CLAMP]))
        raise ContractViolation(f"negative reduced cost on edge {edge} under {type(shift).__name__}")
    if E[dst] == -np.inf:
        return infeasible(stats)
    slots = _walk_back(pred_edge, graph.tails, src, dst)
    total = query.initial_energy - float(E[dst])
    return _result(graph, arrays, slots, src, query.initial_energy, vehicle.capacity, total, stats)


_ZEROS: dict[int, np.ndarray] = {}


def _zeros(n: int) -> np.ndarray:
    z = _ZEROS.get(n)
    if z is None:
        z = np.zeros(n)
        z.setflags(write=False)
        _ZEROS[n] = z
    return z


def bellman_ford_energy(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    query: Query,
    *,
    arrays=None,
) -> SearchResult:
    """Reference label-correcting search with the same battery rules."""
    src, dst = _check_query(graph, vehicle, query)
    arrays = arrays or kernel_inputs(graph, vehicle, load, kind)
    t0 = time.perf_counter()
    E, pred, pred_edge, raw, negative_cycle = K.bellman_ford_energy_kernel(
        *arrays, src, query.initial_energy, vehicle.capacity
    )
    stats = _stats(raw, time.perf_counter() - t0)
    stats.settled = int(np.count_nonzero(E > -np.inf))
    if negative_cycle:
        raise NegativeCycleError("energy labels kept improving: the graph has a negative cycle")
    if E[dst] == -np.inf:
        return infeasible(stats)
    slots = _walk_back(pred_edge, graph.tails, src, dst)
    total = query.initial_energy - float(E[dst])
    return _result(graph, arrays, slots, src, query.initial_energy, vehicle.capacity, total, stats)
