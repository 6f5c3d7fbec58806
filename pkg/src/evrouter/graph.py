"""Road network model, validation and file formats.

Lengths are metres throughout; speeds are km/h.  A :class:`RoadGraph` is
immutable once built and keeps a CSR view (edges grouped by tail vertex)
that the search kernels consume directly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MAX_GRADIENT = 0.30

PATTERNS = ("Slow", "Medium", "High", "ExtraHigh", "Overall")
SPEED_PATTERNS = PATTERNS[:4]
PATTERN_CODE = {name: i for i, name in enumerate(PATTERNS)}


class GraphError(ValueError):
    """Malformed or inconsistent road network data."""


@dataclass(frozen=True)
class Vertex:
    id: int
    elevation: float
    lat: float | None = None
    lon: float | None = None


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    length: float
    avg_speed: float
    pattern: str | None = None


class RoadGraph:
    """Directed road graph with per-vertex elevation.

    Parallel edges and one-way links are allowed.  Vertex ids are arbitrary
    integers; internally every vertex also has a dense index in ``[0, n)``
    following the order in which vertices were given.
    """

    def __init__(
        self,
        vertices: Iterable[Vertex],
        edges: Iterable[Edge],
        *,
        loci: Sequence[str] | None = None,
    ):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        self.edges: tuple[Edge, ...] = tuple(edges)
        self._index: dict[int, int] = {}
        for i, vx in enumerate(self.vertices):
            if vx.id in self._index:
                raise GraphError(f"vertex {vx.id}: duplicate id")
            if not math.isfinite(vx.elevation):
                raise GraphError(f"vertex {vx.id}: elevation must be finite")
            self._index[vx.id] = i

        elev = np.array([vx.elevation for vx in self.vertices], dtype=np.float64)
        for i, e in enumerate(self.edges):
            locus = loci[i] if loci is not None else f"edge #{i}"
            _check_edge(e, self._index, elev, locus)

        n, m = len(self.vertices), len(self.edges)
        tails = np.fromiter((self._index[e.source] for e in self.edges), np.int64, m)
        heads = np.fromiter((self._index[e.target] for e in self.edges), np.int64, m)
        order = np.argsort(tails, kind="stable")
        self.edge_order = order  # CSR slot -> position in self.edges
        self.tails = tails[order]
        self.heads = heads[order]
        self.lengths = np.array([e.length for e in self.edges], dtype=np.float64)[order]
        self.speeds = np.array([e.avg_speed for e in self.edges], dtype=np.float64)[order]
        self.pattern_codes = np.array(
            [PATTERN_CODE[e.pattern] if e.pattern is not None else -1 for e in self.edges],
            dtype=np.int64,
        )[order]
        self.elevations = elev
        self.dh = elev[self.heads] - elev[self.tails]
        self.offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.tails, minlength=n), out=self.offsets[1:])
        for arr in (
            self.tails, self.heads, self.lengths, self.speeds, self.pattern_codes,
            self.elevations, self.dh, self.offsets, self.edge_order,
        ):
            arr.setflags(write=False)
        self._resolved: dict[tuple, np.ndarray] = {}

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"RoadGraph(n_vertices={self.n_vertices}, n_edges={self.n_edges})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return self.vertices == other.vertices and self.edges == other.edges

    def index_of(self, vertex_id: int) -> int:
        try:
            return self._index[vertex_id]
        except KeyError:
            raise GraphError(f"unknown vertex id {vertex_id}") from None

    def has_vertex(self, vertex_id: int) -> bool:
        return vertex_id in self._index

    def vertex(self, vertex_id: int) -> Vertex:
        return self.vertices[self.index_of(vertex_id)]

    def out_edges(self, vertex_id: int) -> list[Edge]:
        i = self.index_of(vertex_id)
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return [self.edges[j] for j in self.edge_order[lo:hi]]

    def edges_between(self, u: int, v: int) -> list[Edge]:
        return [e for e in self.out_edges(u) if e.target == v]

    def ids(self, indices: Iterable[int]) -> list[int]:
        return [self.vertices[i].id for i in indices]

    def resolved_pattern_codes(self, pattern_speeds: dict[str, float]) -> np.ndarray:
        """Per-slot pattern codes, filling unlabelled edges by nearest speed.

        Cached per distinct ``pattern_speeds`` mapping.
        """
        key = tuple(sorted(pattern_speeds.items()))
        codes = self._resolved.get(key)
        if codes is None:
            from .energy import assign_pattern_codes

            codes = self.pattern_codes.copy()
            missing = codes < 0
            if missing.any():
                codes[missing] = assign_pattern_codes(self.speeds[missing], pattern_speeds)
            codes.setflags(write=False)
            self._resolved[key] = codes
        return codes


def _check_edge(e: Edge, index: dict[int, int], elev: np.ndarray, locus: str) -> None:
    for end in (e.source, e.target):
        if end not in index:
            raise GraphError(f"{locus}: dangling endpoint, unknown vertex id {end}")
    if not (math.isfinite(e.length) and e.length > 0):
        raise GraphError(f"{locus}: length must be > 0, got {e.length}")
    if not (math.isfinite(e.avg_speed) and e.avg_speed > 0):
        raise GraphError(f"{locus}: avg_speed must be > 0, got {e.avg_speed}")
    if e.pattern is not None and e.pattern not in PATTERN_CODE:
        raise GraphError(f"{locus}: unknown pattern label {e.pattern!r}")
    s = (elev[index[e.target]] - elev[index[e.source]]) / e.length
    if abs(s) > MAX_GRADIENT:
        raise GraphError(
            f"{locus}: gradient {s:+.3f} exceeds the |s| <= {MAX_GRADIENT} bound"
        )


def gradient(graph: RoadGraph, edge: Edge) -> float:
    """Road grade ``(h(to) - h(from)) / length`` of ``edge``."""
    dh = graph.vertex(edge.target).elevation - graph.vertex(edge.source).elevation
    return dh / edge.length


# -- file formats -----------------------------------------------------------

def _opt_float(text: str | None) -> float | None:
    if text is None or text.strip() == "":
        return None
    return float(text)


def _read_csv_rows(path: Path, required: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise GraphError(f"{path.name} line 1: missing column(s) {', '.join(missing)}")
        for row in reader:
            yield reader.line_num, row


def _load_csv_pair(directory: Path) -> RoadGraph:
    vertices = []
    vpath = directory / "vertices.csv"
    for line, row in _read_csv_rows(vpath, ("id", "elevation_m")):
        try:
            vertices.append(
                Vertex(
                    id=int(row["id"]),
                    elevation=float(row["elevation_m"]),
                    lat=_opt_float(row.get("lat")),
                    lon=_opt_float(row.get("lon")),
                )
            )
        except (TypeError, ValueError) as exc:
            raise GraphError(f"vertices.csv line {line}: {exc}") from None
    edges, loci = [], []
    epath = directory / "edges.csv"
    for line, row in _read_csv_rows(epath, ("from", "to", "length_m", "avg_speed_kmh")):
        try:
            pattern = (row.get("pattern") or "").strip() or None
            edges.append(
                Edge(
                    source=int(row["from"]),
                    target=int(row["to"]),
                    length=float(row["length_m"]),
                    avg_speed=float(row["avg_speed_kmh"]),
                    pattern=pattern,
                )
            )
        except (TypeError, ValueError) as exc:
            raise GraphError(f"edges.csv line {line}: {exc}") from None
        loci.append(f"edges.csv line {line}")
    return RoadGraph(vertices, edges, loci=loci)


def _load_json(path: Path) -> RoadGraph:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path.name}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise GraphError(f"{path.name}: expected an object with 'vertices' and 'edges'")
    vertices = []
    for i, rec in enumerate(doc["vertices"]):
        try:
            vertices.append(
                Vertex(
                    id=int(rec["id"]),
                    elevation=float(rec["elevation_m"]),
                    lat=None if rec.get("lat") is None else float(rec["lat"]),
                    lon=None if rec.get("lon") is None else float(rec["lon"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"vertices[{i}]: bad record ({exc})") from None
    edges, loci = [], []
    for i, rec in enumerate(doc["edges"]):
        try:
            edges.append(
                Edge(
                    source=int(rec["from"]),
                    target=int(rec["to"]),
                    length=float(rec["length_m"]),
                    avg_speed=float(rec["avg_speed_kmh"]),
                    pattern=rec.get("pattern"),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"edges[{i}]: bad record ({exc})") from None
        loci.append(f"edges[{i}]")
    return RoadGraph(vertices, edges, loci=loci)


def _guess_format(path: Path) -> str:
    return "csv-pair" if path.is_dir() else "json"


def load_graph(path: str | Path, format: str | None = None) -> RoadGraph:
    """Read and validate a road graph.

    ``csv-pair`` expects a directory holding ``vertices.csv`` and
    ``edges.csv``; ``json`` expects a single document.  With ``format=None``
    a directory is read as csv-pair and anything else as json.
    """
    path = Path(path)
    fmt = format or _guess_format(path)
    if fmt == "csv-pair":
        return _load_csv_pair(path)
    if fmt == "json":
        return _load_json(path)
    raise GraphError(f"unknown graph format {fmt!r}")


def _vertex_record(vx: Vertex) -> dict:
    rec = {"id": vx.id, "elevation_m": vx.elevation}
    if vx.lat is not None or vx.lon is not None:
        rec["lat"], rec["lon"] = vx.lat, vx.lon
    return rec


def _edge_record(e: Edge) -> dict:
    rec = {"from": e.source, "to": e.target, "length_m": e.length, "avg_speed_kmh": e.avg_speed}
    if e.pattern is not None:
        rec["pattern"] = e.pattern
    return rec


def graph_to_dict(graph: RoadGraph) -> dict:
    return {
        "vertices": [_vertex_record(v) for v in graph.vertices],
        "edges": [_edge_record(e) for e in graph.edges],
    }


def save_graph(graph: RoadGraph, path: str | Path, format: str = "json") -> None:
    path = Path(path)
    if format == "json":
        path.write_text(json.dumps(graph_to_dict(graph), separators=(",", ":")), encoding="utf-8")
        return
    if format != "csv-pair":
        raise GraphError(f"unknown graph format {format!r}")
    path.mkdir(parents=True, exist_ok=True)
    with_coords = any(v.lat is not None or v.lon is not None for v in graph.vertices)
    with open(path / "vertices.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "elevation_m", "lat", "lon"] if with_coords else ["id", "elevation_m"])
        for v in graph.vertices:
            row = [v.id, repr(v.elevation)]
            if with_coords:
                row += ["" if v.lat is None else repr(v.lat), "" if v.lon is None else repr(v.lon)]
            w.writerow(row)
    with_pattern = any(e.pattern is not None for e in graph.edges)
    with open(path / "edges.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["from", "to", "length_m", "avg_speed_kmh"] + (["pattern"] if with_pattern else [])
        w.writerow(header)
        for e in graph.edges:
            row = [e.source, e.target, repr(e.length), repr(e.avg_speed)]
            if with_pattern:
                row.append(e.pattern or "")
            w.writerow(row)
