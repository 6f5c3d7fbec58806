"""Vehicle energy model: quadratic efficiency, edge and path costs, shifts.

Efficiency coefficients are in Wh/100m (and Wh/100m per kg of load), so an
edge of ``l`` metres costs ``efficiency * l / 100`` Wh.  That conversion is
applied here and nowhere else.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .graph import PATTERN_CODE, PATTERNS, SPEED_PATTERNS, Edge, RoadGraph, gradient

KG_PER_PASSENGER = 75.0
DEFAULT_G_PER_KG = 0.273
DEFAULT_PATTERN_SPEEDS = {"Slow": 19.0, "Medium": 40.0, "High": 57.0, "ExtraHigh": 92.0}
BUNDLED_VEHICLES = {
    "leaf": "nissan_leaf",
    "ion": "peugeot_ion",
    "ev1": "gm_ev1",
}
NONNEG_TOL = 1e-9


class EnergyModelError(ValueError):
    pass


@dataclass(frozen=True)
class PatternCoefficients:
    """Coefficients of one driving pattern.

    ``a*`` scale with the extra mass (Wh/100m per kg), ``b*`` do not.
    """

    a2: float
    a1: float
    a0: float
    b2: float
    b1: float
    b0: float

    def __post_init__(self):
        for name in ("a2", "a1", "a0", "b2", "b1", "b0"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise EnergyModelError(f"coefficient {name} must be finite and >= 0, got {value}")

    @classmethod
    def from_lists(cls, a: Sequence[float], b: Sequence[float]) -> "PatternCoefficients":
        if len(a) != 3 or len(b) != 3:
            raise EnergyModelError("expected [x2, x1, x0] triples for 'a' and 'b'")
        return cls(*map(float, a), *map(float, b))

    @property
    def a(self) -> tuple[float, float, float]:
        return (self.a2, self.a1, self.a0)

    @property
    def b(self) -> tuple[float, float, float]:
        return (self.b2, self.b1, self.b0)

    def with_load(self, m: float) -> tuple[float, float, float]:
        """Quadratic, linear and constant terms for extra mass ``m``."""
        return (m * self.a2 + self.b2, m * self.a1 + self.b1, m * self.a0 + self.b0)


@dataclass(frozen=True)
class VehicleSpec:
    name: str
    capacity: float
    kerb_mass: float
    patterns: Mapping[str, PatternCoefficients]
    g_per_kg: float = DEFAULT_G_PER_KG
    pattern_speeds: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_PATTERN_SPEEDS))
    mean_a1: float | None = field(init=False, default=None, compare=False)
    mean_b1: float | None = field(init=False, default=None, compare=False)

    def __post_init__(self):
        if not self.capacity > 0:
            raise EnergyModelError(f"{self.name}: capacity must be > 0")
        if not self.kerb_mass > 0:
            raise EnergyModelError(f"{self.name}: kerb mass must be > 0")
        if "Overall" not in self.patterns:
            raise EnergyModelError(f"{self.name}: patterns must include 'Overall'")
        unknown = set(self.patterns) - set(PATTERNS)
        if unknown:
            raise EnergyModelError(f"{self.name}: unknown pattern label(s) {sorted(unknown)}")
        if not self.pattern_speeds:
            raise EnergyModelError(f"{self.name}: pattern_speeds must not be empty")
        if all(p in self.patterns for p in SPEED_PATTERNS):
            object.__setattr__(self, "mean_a1", float(np.mean([self.patterns[p].a1 for p in SPEED_PATTERNS])))
            object.__setattr__(self, "mean_b1", float(np.mean([self.patterns[p].b1 for p in SPEED_PATTERNS])))

    def with_capacity(self, capacity: float) -> "VehicleSpec":
        return VehicleSpec(
            self.name, capacity, self.kerb_mass, self.patterns, self.g_per_kg, self.pattern_speeds
        )


@dataclass(frozen=True)
class LoadConfig:
    extra_mass: float = 0.0

    def __post_init__(self):
        if not self.extra_mass >= 0:
            raise EnergyModelError(f"extra mass must be >= 0, got {self.extra_mass}")

    @classmethod
    def passengers(cls, n: int) -> "LoadConfig":
        return cls(KG_PER_PASSENGER * n)


class EnergyModelKind(enum.Enum):
    BASIC = "basic"
    MASS_ONLY = "mass"
    PATTERN_ONLY = "pattern"
    FULL = "full"

    @property
    def uses_load(self) -> bool:
        return self in (EnergyModelKind.MASS_ONLY, EnergyModelKind.FULL)

    @property
    def uses_patterns(self) -> bool:
        return self in (EnergyModelKind.PATTERN_ONLY, EnergyModelKind.FULL)


def effective_mass(load: LoadConfig, kind: EnergyModelKind) -> float:
    return load.extra_mass if kind.uses_load else 0.0


# -- vehicle files ------------------------------------------------------------

def vehicle_from_dict(doc: dict) -> VehicleSpec:
    try:
        patterns = {
            label: PatternCoefficients.from_lists(rec["a"], rec["b"])
            for label, rec in doc["patterns"].items()
        }
        return VehicleSpec(
            name=str(doc["name"]),
            capacity=float(doc["capacity_wh"]),
            kerb_mass=float(doc["kerb_mass_kg"]),
            patterns=patterns,
            g_per_kg=float(doc.get("g_per_kg", DEFAULT_G_PER_KG)),
            pattern_speeds={
                k: float(v) for k, v in doc.get("pattern_speeds_kmh", DEFAULT_PATTERN_SPEEDS).items()
            },
        )
    except KeyError as exc:
        raise EnergyModelError(f"vehicle spec is missing field {exc}") from None


def vehicle_to_dict(vehicle: VehicleSpec) -> dict:
    return {
        "name": vehicle.name,
        "capacity_wh": vehicle.capacity,
        "kerb_mass_kg": vehicle.kerb_mass,
        "g_per_kg": vehicle.g_per_kg,
        "pattern_speeds_kmh": dict(vehicle.pattern_speeds),
        "patterns": {
            label: {"a": list(c.a), "b": list(c.b)} for label, c in vehicle.patterns.items()
        },
    }


def load_vehicle(source: str | Path) -> VehicleSpec:
    """Load a vehicle spec from a JSON file or a bundled name (leaf, ion, ev1)."""
    key = str(source)
    if key in BUNDLED_VEHICLES or key in BUNDLED_VEHICLES.values():
        stem = BUNDLED_VEHICLES.get(key, key)
        text = resources.files("evrouter.data.vehicles").joinpath(f"{stem}.json").read_text()
    else:
        text = Path(source).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnergyModelError(f"{source}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    return vehicle_from_dict(doc)


def bundled_vehicles() -> dict[str, VehicleSpec]:
    return {short: load_vehicle(short) for short in BUNDLED_VEHICLES}


# -- per-edge model -----------------------------------------------------------

def efficiency(coeffs: PatternCoefficients, m: float, s: float) -> float:
    """Energy efficiency in Wh/100m at extra mass ``m`` and grade ``s``."""
    q2, q1, q0 = coeffs.with_load(m)
    return q2 * s * s + q1 * s + q0


def assign_pattern(avg_speed: float, pattern_speeds: Mapping[str, float]) -> str:
    """Driving pattern whose reference speed is nearest; ties go to the slower one."""
    if not pattern_speeds:
        raise EnergyModelError("pattern_speeds must not be empty")
    return min(pattern_speeds, key=lambda p: (abs(avg_speed - pattern_speeds[p]), pattern_speeds[p]))


def assign_pattern_codes(speeds: np.ndarray, pattern_speeds: Mapping[str, float]) -> np.ndarray:
    labels = sorted(pattern_speeds, key=lambda p: pattern_speeds[p])
    refs = np.array([pattern_speeds[p] for p in labels])
    nearest = np.argmin(np.abs(np.asarray(speeds)[:, None] - refs[None, :]), axis=1)
    codes = np.array([PATTERN_CODE[p] for p in labels], dtype=np.int64)
    return codes[nearest]


def _edge_coeffs(edge: Edge, vehicle: VehicleSpec, kind: EnergyModelKind) -> PatternCoefficients:
    if not kind.uses_patterns:
        return vehicle.patterns["Overall"]
    label = edge.pattern or assign_pattern(edge.avg_speed, vehicle.pattern_speeds)
    try:
        return vehicle.patterns[label]
    except KeyError:
        raise EnergyModelError(f"{vehicle.name} has no coefficients for pattern {label!r}") from None


def edge_cost(
    graph: RoadGraph,
    edge: Edge,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind = EnergyModelKind.FULL,
) -> float:
    """Energy (Wh) to traverse ``edge``; negative when it regenerates."""
    s = gradient(graph, edge)
    eff = efficiency(_edge_coeffs(edge, vehicle, kind), effective_mass(load, kind), s)
    return eff * edge.length / 100.0


def _cheapest_edge(graph, u, v, vehicle, load, kind) -> tuple[Edge, float]:
    candidates = graph.edges_between(u, v)
    if not candidates:
        raise EnergyModelError(f"no edge from {u} to {v}")
    costs = [edge_cost(graph, e, vehicle, load, kind) for e in candidates]
    j = int(np.argmin(costs))
    return candidates[j], costs[j]


def path_edges(graph, path, vehicle, load, kind=EnergyModelKind.FULL) -> list[tuple[Edge, float]]:
    """(edge, raw cost) per hop, taking the cheapest of any parallel edges."""
    return [_cheapest_edge(graph, u, v, vehicle, load, kind) for u, v in zip(path, path[1:])]


def path_cost(
    graph: RoadGraph,
    path: Sequence[int],
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind = EnergyModelKind.FULL,
) -> float:
    """Sum of raw edge costs along a vertex sequence (no battery limits)."""
    return float(sum(c for _, c in path_edges(graph, path, vehicle, load, kind)))


def cost_neg(
    graph: RoadGraph,
    path: Sequence[int],
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind = EnergyModelKind.FULL,
) -> float:
    """Linear-in-grade part of the path cost, the only part that can go negative."""
    m = effective_mass(load, kind)
    total = 0.0
    for edge, _ in path_edges(graph, path, vehicle, load, kind):
        c = _edge_coeffs(edge, vehicle, kind)
        s = gradient(graph, edge)
        total += (m * c.a1 + c.b1) * s * edge.length / 100.0
    return total


def mean_linear_coeffs(vehicle: VehicleSpec) -> tuple[float, float]:
    """Unweighted mean of ``a1`` and ``b1`` over the four speed patterns."""
    if vehicle.mean_a1 is None:
        missing = [p for p in SPEED_PATTERNS if p not in vehicle.patterns]
        raise EnergyModelError(f"{vehicle.name}: missing pattern(s) {missing}")
    return vehicle.mean_a1, vehicle.mean_b1


def pi_coefficient(vehicle: VehicleSpec, m: float) -> float:
    """Wh per 100 m of climb used by the path-independent shift."""
    a1, b1 = mean_linear_coeffs(vehicle)
    return m * a1 + b1


def pot_coefficient(vehicle: VehicleSpec, m: float) -> float:
    """Wh per 100 m of climb: gravitational potential of the loaded vehicle."""
    return (vehicle.kerb_mass + m) * vehicle.g_per_kg


def _dh(graph: RoadGraph, edge: Edge) -> float:
    return graph.vertex(edge.target).elevation - graph.vertex(edge.source).elevation


def shift_pi(graph: RoadGraph, edge: Edge, vehicle: VehicleSpec, load: LoadConfig) -> float:
    return pi_coefficient(vehicle, load.extra_mass) * _dh(graph, edge) / 100.0


def shift_pot(graph: RoadGraph, edge: Edge, vehicle: VehicleSpec, load: LoadConfig) -> float:
    return pot_coefficient(vehicle, load.extra_mass) * _dh(graph, edge) / 100.0


@dataclass
class ClampCounter:
    """Counts reduced costs that had to be raised to zero."""

    events: int = 0


def reduced_cost(cost_e: float, shift: float, counter: ClampCounter | None = None) -> float:
    red = cost_e - shift
    if red < 0.0:
        if counter is not None and red < -NONNEG_TOL:
            counter.events += 1
        return 0.0
    return red


def battery_adjust(e_u: float, cost_e: float, e_max: float) -> float:
    """Raise a regenerating cost so the successor's energy caps at ``e_max``."""
    if e_u - cost_e > e_max:
        return e_u - e_max
    return cost_e


# -- vectorised forms used by the search layer --------------------------------

def coefficient_table(vehicle: VehicleSpec, load: LoadConfig, kind: EnergyModelKind) -> np.ndarray:
    """Rows ``[q2, q1, q0]`` indexed by pattern code, load folded in.

    Kinds that ignore patterns get the Overall row in every slot; rows for
    patterns the vehicle does not define are NaN.
    """
    m = effective_mass(load, kind)
    table = np.full((len(PATTERNS), 3), np.nan)
    overall = vehicle.patterns["Overall"].with_load(m)
    for label, code in PATTERN_CODE.items():
        if not kind.uses_patterns:
            table[code] = overall
        elif label in vehicle.patterns:
            table[code] = vehicle.patterns[label].with_load(m)
    return table


def edge_pattern_codes(graph: RoadGraph, vehicle: VehicleSpec, kind: EnergyModelKind) -> np.ndarray:
    codes = graph.resolved_pattern_codes(dict(vehicle.pattern_speeds))
    if kind.uses_patterns:
        used = {PATTERNS[c] for c in np.unique(codes)}
        missing = used - set(vehicle.patterns)
        if missing:
            raise EnergyModelError(
                f"{vehicle.name} has no coefficients for pattern(s) {sorted(missing)}"
            )
    return codes


def edge_costs(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind = EnergyModelKind.FULL,
) -> np.ndarray:
    """Raw cost of every edge, in the graph's CSR slot order."""
    table = coefficient_table(vehicle, load, kind)
    codes = edge_pattern_codes(graph, vehicle, kind)
    s = graph.dh / graph.lengths
    q = table[codes]
    return (q[:, 0] * s * s + q[:, 1] * s + q[:, 2]) * graph.lengths / 100.0


@dataclass
class EnergyReplay:
    trace: list[float]
    feasible: bool
    consumed: float


def replay_path(
    graph: RoadGraph,
    path: Sequence[int],
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    e_init: float,
) -> EnergyReplay:
    """Drive ``path`` from ``e_init`` with the battery cap applied.

    Energy may go below zero; that only marks the replay infeasible so that
    consumption is still reported for paths that would strand the vehicle.
    """
    e = e_init
    trace = [e]
    feasible = 0.0 <= e <= vehicle.capacity
    for _, cost in path_edges(graph, path, vehicle, load, kind):
        if e < cost:
            feasible = False
        cost = battery_adjust(e, cost, vehicle.capacity)
        e -= cost
        trace.append(e)
    return EnergyReplay(trace=trace, feasible=feasible, consumed=e_init - e)
