"""Shift strategies that turn energy costs into non-negative reduced costs."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..energy import (
    NONNEG_TOL,
    EnergyModelKind,
    LoadConfig,
    VehicleSpec,
    coefficient_table,
    edge_costs,
    edge_pattern_codes,
    effective_mass,
    pi_coefficient,
    pot_coefficient,
)
from ..graph import RoadGraph
from . import _kernels


class RoutingError(RuntimeError):
    pass


class NegativeCycleError(RoutingError):
    pass


class ContractViolation(RoutingError):
    """A shift produced a negative reduced cost where it promised not to."""


@dataclass(frozen=True)
class NoShift:
    """Plain energy-constrained Dijkstra; valid only without negative costs."""

    strict = True
    graph_passes = 0

    def coefficient(self, vehicle, load, kind) -> float:
        return 0.0


@dataclass(frozen=True)
class PotShift:
    """Gravitational potential of the loaded vehicle; needs no preprocessing."""

    strict = False
    graph_passes = 0

    def coefficient(self, vehicle, load, kind) -> float:
        return pot_coefficient(vehicle, effective_mass(load, kind))


@dataclass(frozen=True)
class PiShift:
    """Path-independent part of the fitted model (pattern-averaged a1, b1)."""

    strict = False
    graph_passes = 0

    def coefficient(self, vehicle, load, kind) -> float:
        return pi_coefficient(vehicle, effective_mass(load, kind))


@dataclass(frozen=True)
class HeightAlpha:
    """Height-proportional potential ``alpha * h`` (alpha in Wh/100m)."""

    alpha: float
    strict = True
    graph_passes = 1

    def coefficient(self, vehicle, load, kind) -> float:
        return self.alpha


@dataclass(frozen=True, eq=False)
class JohnsonPotential:
    """Per-vertex potential from Bellman-Ford over a virtual source.

    ``potential`` is indexed by the graph's dense vertex index.
    """

    potential: np.ndarray
    graph_passes: int = 1
    strict = True

    def coefficient(self, vehicle, load, kind) -> float:
        return 0.0


ShiftStrategy = NoShift | PotShift | PiShift | HeightAlpha | JohnsonPotential


@dataclass(frozen=True)
class AlphaBounds:
    lower: float
    upper: float

    @property
    def midpoint(self) -> float:
        lo, hi = self.lower, self.upper
        if math.isinf(lo) and math.isinf(hi):
            return 0.0
        if math.isinf(lo):
            return hi
        if math.isinf(hi):
            return lo
        return 0.5 * (lo + hi)

    def __contains__(self, alpha: float) -> bool:
        return self.lower <= alpha <= self.upper


def kernel_inputs(graph: RoadGraph, vehicle: VehicleSpec, load: LoadConfig, kind: EnergyModelKind):
    """CSR arrays plus the folded coefficient table for the kernels."""
    return (
        graph.offsets,
        graph.heads,
        graph.lengths,
        graph.dh,
        edge_pattern_codes(graph, vehicle, kind),
        coefficient_table(vehicle, load, kind),
    )


def alpha_scan(
    graph: RoadGraph, vehicle: VehicleSpec, load: LoadConfig, kind: EnergyModelKind
) -> AlphaBounds:
    """Admissible range of ``alpha`` from one pass over all edges.

    Each edge with a height change bounds ``alpha`` by ``cost / dh`` (dh in
    100 m units): from below on descents, from above on climbs.  Missing
    bounds are reported as infinities.
    """
    if graph.n_vertices == 0:
        raise RoutingError("alpha scan on an empty graph")
    cost = edge_costs(graph, vehicle, load, kind)
    dh = graph.dh / 100.0
    flat = dh == 0.0
    if np.any(cost[flat] < -NONNEG_TOL):
        k = int(np.flatnonzero(flat & (cost < -NONNEG_TOL))[0])
        raise RoutingError(f"flat edge {_describe(graph, k)} has negative cost; no alpha can fix it")
    down, up = dh < 0, dh > 0
    lower = float(np.max(cost[down] / dh[down])) if down.any() else -math.inf
    upper = float(np.min(cost[up] / dh[up])) if up.any() else math.inf
    if lower > upper:
        raise RoutingError(f"no valid alpha: lower bound {lower:.3f} exceeds upper bound {upper:.3f}")
    return AlphaBounds(lower, upper)


def make_height_alpha(bounds: AlphaBounds, policy: str | float = "midpoint") -> HeightAlpha:
    if policy == "midpoint":
        return HeightAlpha(bounds.midpoint)
    alpha = float(policy)
    if alpha not in bounds:
        raise RoutingError(f"alpha {alpha} outside [{bounds.lower}, {bounds.upper}]")
    return HeightAlpha(alpha)


def johnson_preprocess(
    graph: RoadGraph, vehicle: VehicleSpec, load: LoadConfig, kind: EnergyModelKind
) -> JohnsonPotential:
    arrays = kernel_inputs(graph, vehicle, load, kind)
    potential, rounds, negative_cycle = _kernels.johnson_potential_kernel(*arrays)
    if negative_cycle:
        raise NegativeCycleError("negative cycle under the given cost model")
    cost = edge_costs(graph, vehicle, load, kind)
    reduced = cost + potential[graph.tails] - potential[graph.heads]
    bad = np.flatnonzero(reduced < -NONNEG_TOL)
    if bad.size:
        k = int(bad[0])
        raise ContractViolation(
            f"Johnson potential leaves reduced cost {reduced[k]:.3g} on edge {_describe(graph, k)}"
        )
    potential.setflags(write=False)
    return JohnsonPotential(potential=potential, graph_passes=int(rounds) + 1)


def _describe(graph: RoadGraph, slot: int) -> str:
    e = graph.edges[graph.edge_order[slot]]
    return f"{e.source}->{e.target}"


@dataclass
class Prepared:
    """A shift strategy together with what it cost to build."""

    name: str
    shift: ShiftStrategy
    seconds: float
    graph_passes: int
    params: dict = field(default_factory=dict)


ALGORITHMS = ("bellman-ford", "johnson", "johnson-alpha", "dijkstra-pot", "dijkstra-pi")


def prepare(
    algorithm: str,
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
) -> Prepared:
    """Run whatever preprocessing ``algorithm`` needs, timed."""
    t0 = time.perf_counter()
    if algorithm in ("bellman-ford", "dijkstra"):
        # plain "dijkstra" is only valid when no edge cost is negative
        return Prepared(algorithm, NoShift(), 0.0, 0)
    if algorithm == "dijkstra-pot":
        shift = PotShift()
        params = {"coefficient": shift.coefficient(vehicle, load, kind)}
    elif algorithm == "dijkstra-pi":
        shift = PiShift()
        params = {"coefficient": shift.coefficient(vehicle, load, kind)}
    elif algorithm == "johnson":
        shift = johnson_preprocess(graph, vehicle, load, kind)
        params = {}
    elif algorithm == "johnson-alpha":
        bounds = alpha_scan(graph, vehicle, load, kind)
        shift = make_height_alpha(bounds)
        params = {"alpha_lower": bounds.lower, "alpha_upper": bounds.upper, "alpha": shift.alpha}
    else:
        raise RoutingError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)} or dijkstra")
    return Prepared(algorithm, shift, time.perf_counter() - t0, shift.graph_passes, params)
