"""Benchmarks and studies over batches of random queries."""
from __future__ import annotations

import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order

from .drivecycle import (
    DEFAULT_MASSES,
    DEFAULT_SLOPES,
    SpeedProfile,
    VehicleDynamicsParams,
    fit_patterns,
    full_cycle,
    generate_dataset,
)
from .energy import (
    DEFAULT_G_PER_KG,
    EnergyModelKind,
    LoadConfig,
    VehicleSpec,
    path_edges,
    replay_path,
    vehicle_from_dict,
)
from .graph import RoadGraph
from .routing import (
    ALGORITHMS,
    PotShift,
    Query,
    RoutingError,
    SearchResult,
    bellman_ford_energy,
    dijkstra_energy,
    kernel_inputs,
    prepare,
    solve,
)

CROSS_CHECK_TOL = 1e-6


class CrossCheckError(RoutingError):
    """Algorithms disagreed on an optimum; timings would be meaningless."""


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("EVROUTER_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    workers = worker_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- query sampling -----------------------------------------------------------

def sample_pairs(graph: RoadGraph, n: int, seed: int) -> list[tuple[int, int]]:
    """Uniform (origin, destination) id pairs, rejecting unreachable ones.

    Reachability ignores energy: it is a plain graph search, so any later
    infeasibility is down to the battery.
    """
    if n < 1:
        raise ValueError("need at least one query")
    nv = graph.n_vertices
    if nv < 2:
        raise ValueError("need at least two vertices to sample queries")
    adj = csr_matrix(
        (np.ones(graph.n_edges), (graph.tails, graph.heads)), shape=(nv, nv)
    )
    rng = np.random.default_rng(seed)
    reach: dict[int, np.ndarray] = {}
    pairs = []
    attempts = 0
    while len(pairs) < n:
        attempts += 1
        if attempts > 100 * n:
            raise RoutingError("could not sample enough reachable pairs")
        o, d = (int(x) for x in rng.integers(0, nv, 2))
        if o == d:
            continue
        if o not in reach:
            seen = np.zeros(nv, dtype=bool)
            seen[breadth_first_order(adj, o, directed=True, return_predecessors=False)] = True
            reach[o] = seen
        if reach[o][d]:
            pairs.append((graph.vertices[o].id, graph.vertices[d].id))
    return pairs


def sample_queries(graph: RoadGraph, vehicle: VehicleSpec, n: int, seed: int, soc: float) -> list[Query]:
    if not 0 < soc <= 1:
        raise ValueError(f"soc must lie in (0, 1], got {soc}")
    e_init = soc * vehicle.capacity
    return [Query(o, d, e_init) for o, d in sample_pairs(graph, n, seed)]


def same_answer(a: SearchResult, b: SearchResult, tol: float = CROSS_CHECK_TOL) -> bool:
    if a.feasible != b.feasible:
        return False
    return not a.feasible or abs(a.total_energy - b.total_energy) <= tol


# -- runtime benchmark --------------------------------------------------------

@dataclass
class BenchRow:
    algorithm: str
    prep_s: float
    prep_passes: int
    avg_s: float
    max_s: float
    n_queries: int
    n_feasible: int
    cross_check: bool


def run_bench(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    kind: EnergyModelKind,
    algorithms=ALGORITHMS,
    n_queries: int = 100,
    seed: int = 0,
    soc: float = 0.7,
    repeats: int = 5,
) -> list[BenchRow]:
    """Time every algorithm on the same seeded workload.

    One discarded warm-up pass, then ``repeats`` timed passes; each query's
    time is the median over passes.  All algorithms must agree on every
    query before any timing is returned.
    """
    queries = sample_queries(graph, vehicle, n_queries, seed, soc)
    arrays = kernel_inputs(graph, vehicle, load, kind)
    rows = []
    answers: dict[str, list[SearchResult]] = {}
    for alg in algorithms:
        prepare(alg, graph, vehicle, load, kind)  # warm-up
        preps = [prepare(alg, graph, vehicle, load, kind) for _ in range(repeats)]
        prep = preps[0]
        prep_s = statistics.median(p.seconds for p in preps)
        answers[alg] = [solve(prep, graph, vehicle, load, kind, q, arrays=arrays) for q in queries]
        times = np.empty((repeats, len(queries)))
        for r in range(repeats):
            for i, q in enumerate(queries):
                t0 = time.perf_counter()
                solve(prep, graph, vehicle, load, kind, q, arrays=arrays)
                times[r, i] = time.perf_counter() - t0
        per_query = np.median(times, axis=0)
        rows.append(BenchRow(
            alg, prep_s, prep.graph_passes, float(per_query.mean()), float(per_query.max()),
            len(queries), sum(a.feasible for a in answers[alg]), False,
        ))
    diffs = cross_check(queries, answers)
    if diffs:
        raise CrossCheckError("algorithms disagree:\n" + "\n".join(diffs))
    for row in rows:
        row.cross_check = True
    return rows


def cross_check(queries: list[Query], answers: dict[str, list[SearchResult]]) -> list[str]:
    names = list(answers)
    diffs = []
    for i, q in enumerate(queries):
        ref = answers[names[0]][i]
        for name in names[1:]:
            other = answers[name][i]
            if not same_answer(ref, other):
                diffs.append(
                    f"query {q.origin}->{q.destination}: {names[0]}="
                    f"{_fmt(ref)} {name}={_fmt(other)}"
                )
    return diffs


def _fmt(r: SearchResult) -> str:
    return f"{r.total_energy:.9f}" if r.feasible else "infeasible"


# -- model comparison ---------------------------------------------------------

@dataclass
class ComparisonRow:
    model: str
    n_pairs: int
    dp_pct: float
    dl_min: float
    dl_avg: float
    dl_max: float
    dcost_min: float
    dcost_avg: float
    dcost_max: float
    dcost_recost_min: float
    dcost_recost_avg: float
    dcost_recost_max: float
    dcost_ef_min: float
    dcost_ef_avg: float
    dcost_ef_max: float


def path_length(graph: RoadGraph, path, vehicle, load, kind) -> float:
    return sum(e.length for e, _ in path_edges(graph, path, vehicle, load, kind))


def _mma(values) -> tuple[float, float, float]:
    if not values:
        return (float("nan"),) * 3
    arr = np.asarray(values, dtype=float)
    return float(arr.min()), float(arr.mean()), float(arr.max())


def compare_models(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    n_queries: int = 100,
    seed: int = 0,
    soc: float = 0.7,
    kinds=(EnergyModelKind.MASS_ONLY, EnergyModelKind.PATTERN_ONLY, EnergyModelKind.FULL),
) -> list[ComparisonRow]:
    """Optimal paths under each richer model against the Basic model.

    Bellman-Ford is the reference search.  Two energy differences are
    reported: ``dcost`` is the richer optimum minus the Basic optimum, and
    ``dcost_recost`` is the Basic path re-driven under the richer model minus
    the richer optimum.  Pairs infeasible under either model are skipped.
    """
    queries = sample_queries(graph, vehicle, n_queries, seed, soc)
    basic = EnergyModelKind.BASIC
    base_arrays = kernel_inputs(graph, vehicle, load, basic)
    base = _pmap(lambda q: bellman_ford_energy(graph, vehicle, load, basic, q, arrays=base_arrays), queries)
    rows = []
    for kind in kinds:
        arrays = kernel_inputs(graph, vehicle, load, kind)
        rich = _pmap(lambda q: bellman_ford_energy(graph, vehicle, load, kind, q, arrays=arrays), queries)
        differ, dl, dc, drc, def_ = 0, [], [], [], []
        n = 0
        for q, b, r in zip(queries, base, rich):
            if not (b.feasible and r.feasible):
                continue
            n += 1
            differ += b.path != r.path
            len_b = path_length(graph, b.path, vehicle, load, basic)
            len_r = path_length(graph, r.path, vehicle, load, kind)
            dl.append(len_r - len_b)
            dc.append(r.total_energy - b.total_energy)
            recost = replay_path(graph, b.path, vehicle, load, kind, q.initial_energy).consumed
            drc.append(recost - r.total_energy)
            if len_b > 0 and len_r > 0:
                def_.append(r.total_energy / len_r * 100 - b.total_energy / len_b * 100)
        rows.append(ComparisonRow(
            kind.value, n, 100.0 * differ / n if n else float("nan"),
            *_mma(dl), *_mma(dc), *_mma(drc), *_mma(def_),
        ))
    return rows


# -- round-trip feasibility ---------------------------------------------------

@dataclass
class FeasibilityRow:
    origin: int
    destination: int
    distance_m: float
    energy_basic: float
    energy_full: float
    deviation_pct: float
    feasible_basic: bool
    feasible_full: bool


def plan_round_trip(graph, vehicle, load, kind, origin, dest, e_init, arrays=None) -> list[int] | None:
    """Energy-optimal A->B then B->A (second leg starts with what is left)."""
    out = dijkstra_energy(graph, vehicle, load, kind, Query(origin, dest, e_init), PotShift(), arrays=arrays)
    if not out.feasible:
        return None
    e_mid = out.energy_trace[-1]
    back = dijkstra_energy(graph, vehicle, load, kind, Query(dest, origin, e_mid), PotShift(), arrays=arrays)
    if not back.feasible:
        return None
    return out.path + back.path[1:]


def basic_round_trip(graph, vehicle, load, origin, dest, e_init, arrays=None) -> list[int] | None:
    """Basic-model round trip from ``e_init``, else from a full pack, else uncapped."""
    basic = EnergyModelKind.BASIC
    path = plan_round_trip(graph, vehicle, load, basic, origin, dest, e_init, arrays)
    if path is None:
        path = plan_round_trip(graph, vehicle, load, basic, origin, dest, vehicle.capacity, arrays)
    if path is None:
        unlimited = replace(vehicle, capacity=1e12)
        path = plan_round_trip(graph, unlimited, load, basic, origin, dest, unlimited.capacity, arrays)
    return path


def feasibility_study(
    graph: RoadGraph,
    vehicle: VehicleSpec,
    load: LoadConfig,
    soc: float,
    n_trips: int,
    seed: int = 0,
) -> list[FeasibilityRow]:
    """Round trips planned with the Basic model, then driven under Full.

    Trips the Basic model cannot complete from ``soc`` are planned from a
    full battery instead, and trips too long even for that are planned with
    an uncapped pack, so every sampled pair yields a row.  Both replays
    always start from ``soc`` with the real capacity.
    """
    basic, full = EnergyModelKind.BASIC, EnergyModelKind.FULL
    e_init = soc * vehicle.capacity
    arrays = kernel_inputs(graph, vehicle, load, basic)
    pairs = sample_pairs(graph, n_trips, seed)

    def one(pair):
        o, d = pair
        path = basic_round_trip(graph, vehicle, load, o, d, e_init, arrays)
        if path is None:
            return None  # no way back at all
        rb = replay_path(graph, path, vehicle, load, basic, e_init)
        rf = replay_path(graph, path, vehicle, load, full, e_init)
        dev = (rf.consumed - rb.consumed) / rb.consumed * 100 if rb.consumed != 0 else float("nan")
        return FeasibilityRow(
            o, d, path_length(graph, path, vehicle, load, basic), rb.consumed, rf.consumed,
            dev, rb.feasible, rf.feasible,
        )

    return [r for r in _pmap(one, pairs) if r is not None]


# -- model fitting ------------------------------------------------------------

def fit_vehicle(
    dynamics: VehicleDynamicsParams,
    profiles: list[SpeedProfile],
    name: str = "fitted",
    capacity_wh: float = 40000.0,
    masses=DEFAULT_MASSES,
    slopes=DEFAULT_SLOPES,
) -> dict:
    """Simulate, fit every pattern and return a vehicle-spec document.

    The Overall row is fitted on all profiles driven back to back.  The
    document carries a ``fit_report`` block with R^2 per pattern and loads
    with the normal vehicle loader.
    """
    cycle = [p for p in profiles if p.label != "Overall"]
    overall = [p for p in profiles if p.label == "Overall"] or [full_cycle(cycle)]
    samples = generate_dataset(dynamics, cycle + overall, masses, slopes)
    fits = fit_patterns(samples)
    doc = {
        "name": name,
        "capacity_wh": float(capacity_wh),
        "kerb_mass_kg": dynamics.M,
        "g_per_kg": DEFAULT_G_PER_KG,
        "pattern_speeds_kmh": {p.label: round(p.mean_speed_kmh, 6) for p in cycle},
        "patterns": {
            label: {"a": list(f.coefficients.a), "b": list(f.coefficients.b)} for label, f in fits.items()
        },
        "fit_report": {label: f.report() for label, f in fits.items()},
    }
    vehicle_from_dict(doc)  # format contract
    return doc


def rows_to_dicts(rows) -> list[dict]:
    return [asdict(r) for r in rows]
