from __future__ import annotations

import numpy as np
import pytest

from evrouter.energy import (
    DEFAULT_PATTERN_SPEEDS,
    PatternCoefficients,
    VehicleSpec,
    load_vehicle,
)
from evrouter.graph import Edge, RoadGraph, Vertex

# criterion number -> (passed, detail); filled by the acceptance tests
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def toy_vehicle(b=(0.0, 0.0, 10.0), a=(0.0, 0.0, 0.0), capacity=1000.0, kerb=1000.0, name="toy"):
    """Same coefficients for every pattern, so costs are easy to hand-compute."""
    c = PatternCoefficients.from_lists(list(a), list(b))
    return VehicleSpec(
        name=name,
        capacity=capacity,
        kerb_mass=kerb,
        patterns={p: c for p in ("Slow", "Medium", "High", "ExtraHigh", "Overall")},
        g_per_kg=0.273,
        pattern_speeds=dict(DEFAULT_PATTERN_SPEEDS),
    )


def make_graph(elevations, edges):
    """``edges`` are (from, to, length) or (from, to, length, speed[, pattern])."""
    vs = [Vertex(i, float(h)) for i, h in enumerate(elevations)]
    es = []
    for rec in edges:
        u, v, length, *rest = rec
        speed = rest[0] if rest else 40.0
        pattern = rest[1] if len(rest) > 1 else None
        es.append(Edge(u, v, float(length), float(speed), pattern))
    return RoadGraph(vs, es)


def random_small_graph(rng: np.random.Generator, n: int, p_edge: float = 0.35) -> RoadGraph:
    """Dense-ish random digraph with steep-but-legal hills."""
    elev = rng.uniform(0.0, 120.0, n)
    edges = []
    for u in range(n):
        for v in range(n):
            if u != v and rng.random() < p_edge:
                dh = abs(elev[v] - elev[u])
                length = max(dh / 0.25, 100.0) * rng.uniform(1.0, 3.0)
                speed = float(rng.choice([19.0, 40.0, 57.0, 92.0])) * rng.uniform(0.9, 1.1)
                edges.append((u, v, length, speed))
    return make_graph(elev, edges)


@pytest.fixture(scope="session")
def leaf():
    return load_vehicle("leaf")


@pytest.fixture(scope="session")
def ion():
    return load_vehicle("ion")


@pytest.fixture(scope="session")
def ev1():
    return load_vehicle("ev1")
