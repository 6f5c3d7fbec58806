"""Reproducible synthetic road networks with controlled elevation statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial import Delaunay, QhullError

from .energy import DEFAULT_PATTERN_SPEEDS
from .graph import MAX_GRADIENT, SPEED_PATTERNS, Edge, RoadGraph, Vertex

N_WAVES = 6


class GenerationError(ValueError):
    pass


def _default_mix() -> dict[str, float]:
    return {"Slow": 0.2, "Medium": 0.4, "High": 0.3, "ExtraHigh": 0.1}


@dataclass(frozen=True)
class SyntheticGraphParams:
    """Knobs for :func:`generate_synthetic`.

    ``elevation_amplitude`` sets the relief of the raw sinusoid field; the
    field is then rescaled so the mean absolute gradient over all edges hits
    ``target_avg_abs_gradient``.  ``spacing_m`` is the typical distance
    between neighbouring junctions and ``base_elevation`` the mean height.
    """

    n_vertices: int = 1000
    avg_degree: float = 2.4
    elevation_amplitude: float = 50.0
    elevation_wavelength: float = 3000.0
    target_avg_abs_gradient: float = 0.016
    speed_mix: dict = field(default_factory=_default_mix)
    seed: int = 0
    spacing_m: float = 200.0
    base_elevation: float = 200.0

    def validate(self) -> None:
        if self.n_vertices < 2:
            raise GenerationError("n_vertices must be at least 2")
        if not self.avg_degree >= 1:
            raise GenerationError("avg_degree must be at least 1")
        if not 0 < self.target_avg_abs_gradient < MAX_GRADIENT:
            raise GenerationError(f"target_avg_abs_gradient must lie in (0, {MAX_GRADIENT})")
        if self.elevation_amplitude <= 0 or self.elevation_wavelength <= 0 or self.spacing_m <= 0:
            raise GenerationError("amplitude, wavelength and spacing must be positive")
        unknown = set(self.speed_mix) - set(SPEED_PATTERNS)
        if unknown:
            raise GenerationError(f"unknown speed_mix patterns: {sorted(unknown)}")
        w = np.array(list(self.speed_mix.values()), dtype=float)
        if w.size == 0 or np.any(w < 0) or w.sum() <= 0:
            raise GenerationError("speed_mix weights must be non-negative with a positive sum")


def _candidate_roads(xy: np.ndarray) -> np.ndarray:
    n = len(xy)
    if n >= 4:
        try:
            tri = Delaunay(xy)
        except QhullError as exc:  # degenerate point sets
            raise GenerationError(f"triangulation failed: {exc}") from exc
        s = tri.simplices
        pairs = np.concatenate([s[:, [0, 1]], s[:, [1, 2]], s[:, [0, 2]]])
    else:
        pairs = np.array([(i, j) for i in range(n) for j in range(i + 1, n)])
    pairs = np.sort(pairs, axis=1)
    return np.unique(pairs, axis=0)


def _hilbert_index(xy: np.ndarray, order: int = 16) -> np.ndarray:
    side = 1 << order
    lo = xy.min(axis=0)
    span = np.maximum(xy.max(axis=0) - lo, 1e-12)
    q = np.minimum(((xy - lo) / span * (side - 1)).astype(np.int64), side - 1)
    x, y = q[:, 0].copy(), q[:, 1].copy()
    d = np.zeros(len(xy), dtype=np.int64)
    s = side >> 1
    while s > 0:
        rx = (x & s) > 0
        ry = (y & s) > 0
        d += s * s * ((3 * rx) ^ ry)
        # rotate quadrant
        flip = ~ry
        swap_x = flip & rx
        x = np.where(swap_x, side - 1 - x, x)
        y = np.where(swap_x, side - 1 - y, y)
        x, y = np.where(flip, y, x), np.where(flip, x, y)
        s >>= 1
    return d


def _arcs(xy: np.ndarray, avg_degree: float, rng: np.random.Generator) -> np.ndarray:
    """Directed arcs (tail, head) forming a strongly connected network."""
    n = len(xy)
    n_arcs = max(int(round(avg_degree * n)), n)
    if avg_degree < 2:
        # one directed tour through all vertices plus some reversed arcs
        tour = np.argsort(_hilbert_index(xy), kind="stable")
        fwd = np.stack([tour, np.roll(tour, -1)], axis=1)
        extra = min(n_arcs - n, n)
        back = fwd[rng.choice(n, size=extra, replace=False)][:, ::-1]
        return np.concatenate([fwd, back])

    cand = _candidate_roads(xy)
    n_roads = n_arcs // 2
    w = np.linalg.norm(xy[cand[:, 0]] - xy[cand[:, 1]], axis=1)
    mst = minimum_spanning_tree(coo_matrix((w, (cand[:, 0], cand[:, 1])), shape=(n, n))).tocoo()
    tree = np.sort(np.stack([mst.row, mst.col], axis=1), axis=1)
    if len(tree) != n - 1:
        raise GenerationError("candidate road set is disconnected")
    in_tree = np.zeros(len(cand), dtype=bool)
    key = cand[:, 0] * n + cand[:, 1]
    in_tree[np.isin(key, tree[:, 0] * n + tree[:, 1])] = True
    rest = np.flatnonzero(~in_tree)
    n_extra = n_roads - (n - 1)
    if n_extra > len(rest):
        raise GenerationError(
            f"avg_degree {avg_degree} needs {n_roads} roads but the planar candidate set has {len(cand)}"
        )
    pick = rng.choice(rest, size=max(n_extra, 0), replace=False)
    roads = np.concatenate([cand[in_tree], cand[np.sort(pick)]])
    return np.concatenate([roads, roads[:, ::-1]])


def _elevation_field(xy: np.ndarray, p: SyntheticGraphParams, rng: np.random.Generator) -> np.ndarray:
    theta = rng.uniform(0, 2 * math.pi, N_WAVES)
    wavelength = p.elevation_wavelength * rng.uniform(0.6, 1.6, N_WAVES)
    phase = rng.uniform(0, 2 * math.pi, N_WAVES)
    amp = rng.uniform(0.5, 1.0, N_WAVES)
    amp *= p.elevation_amplitude / amp.sum()
    k = 2 * math.pi / wavelength
    proj = xy[:, :1] * np.cos(theta) + xy[:, 1:] * np.sin(theta)
    return (amp * np.sin(k * proj + phase)).sum(axis=1)


def generate_synthetic(params: SyntheticGraphParams) -> RoadGraph:
    """Random planar road network over a smooth elevation field.

    Junctions are scattered uniformly in a square.  For ``avg_degree >= 2``
    two-way roads are taken from the Delaunay triangulation (spanning tree
    first, then random extra links); below that a directed tour plus some
    reverse arcs is used.  Either way every vertex can reach every other.
    """
    params.validate()
    p = params
    rng = np.random.default_rng(p.seed)
    n = p.n_vertices
    side = p.spacing_m * math.sqrt(n)
    xy = rng.uniform(0.0, side, size=(n, 2))

    arcs = _arcs(xy, p.avg_degree, rng)
    # one detour factor per road so both directions share a length
    pair_key = np.minimum(arcs[:, 0], arcs[:, 1]) * n + np.maximum(arcs[:, 0], arcs[:, 1])
    uniq, inv = np.unique(pair_key, return_inverse=True)
    detour = rng.uniform(1.0, 1.2, len(uniq))[inv]
    lengths = np.linalg.norm(xy[arcs[:, 0]] - xy[arcs[:, 1]], axis=1) * detour
    lengths = np.maximum(lengths, 1.0)

    labels = list(p.speed_mix)
    probs = np.array([p.speed_mix[k] for k in labels], dtype=float)
    probs /= probs.sum()
    road_pattern = rng.choice(len(labels), size=len(uniq), p=probs)[inv]
    ref = np.array([DEFAULT_PATTERN_SPEEDS[k] for k in labels])
    speeds = ref[road_pattern] * rng.uniform(0.9, 1.1, len(uniq))[inv]

    raw = _elevation_field(xy, p, rng)
    dh = raw[arcs[:, 1]] - raw[arcs[:, 0]]
    mean_abs = float(np.mean(np.abs(dh) / lengths))
    if not mean_abs > 0:
        raise GenerationError("elevation field is flat over the sampled network")
    scale = p.target_avg_abs_gradient / mean_abs
    max_s = float(np.max(np.abs(dh) / lengths)) * scale
    if max_s > MAX_GRADIENT:
        raise GenerationError(
            f"hitting mean |s|={p.target_avg_abs_gradient} needs max |s|={max_s:.3f} > {MAX_GRADIENT}; "
            "increase elevation_wavelength"
        )
    elev = p.base_elevation + scale * raw

    vertices = [Vertex(i, float(elev[i])) for i in range(n)]
    edges = [
        Edge(int(a), int(b), float(l), float(v), labels[c])
        for (a, b), l, v, c in zip(arcs.tolist(), lengths.tolist(), speeds.tolist(), road_pattern.tolist())
    ]
    return RoadGraph(vertices, edges)


@dataclass(frozen=True)
class GraphStats:
    n_vertices: int
    n_edges: int
    mean_abs_gradient: float
    max_abs_gradient: float
    total_length_m: float
    elevation_range_m: float


def graph_stats(graph: RoadGraph) -> GraphStats:
    s = np.abs(graph.dh / graph.lengths) if graph.n_edges else np.zeros(1)
    return GraphStats(
        graph.n_vertices,
        graph.n_edges,
        float(s.mean()),
        float(s.max()),
        float(graph.lengths.sum()),
        float(np.ptp(graph.elevations)) if graph.n_vertices else 0.0,
    )
