from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from evrouter.energy import EnergyModelKind, LoadConfig, PatternCoefficients, VehicleSpec, edge_costs
from evrouter.routing import (
    ALGORITHMS,
    AlphaBounds,
    ContractViolation,
    NegativeCycleError,
    NoShift,
    PiShift,
    PotShift,
    Query,
    RoutingError,
    alpha_scan,
    bellman_ford_energy,
    dijkstra_energy,
    exhaustive_oracle,
    johnson_preprocess,
    kernel_inputs,
    make_height_alpha,
    prepare,
    solve,
)
from evrouter.synthetic import SyntheticGraphParams, generate_synthetic

from conftest import make_graph, random_small_graph, toy_vehicle

K = EnergyModelKind
NOLOAD = LoadConfig(0)


def diamond():
    # 0 -> 1 -> 3 climbs 3.5 m then drops 3 m: 4 Wh overall but needs 15 Wh up front
    # 0 -> 2 -> 3 is long and flat-ish: 10 Wh
    v = toy_vehicle(b=(0.0, 400.0, 1.0))
    g = make_graph([0.0, 3.5, 0.0, 0.5], [(0, 1, 100), (1, 3, 100), (0, 2, 400), (2, 3, 400)])
    return g, v


class TestDijkstra:
    def test_single_edge(self):
        v = toy_vehicle(b=(0.0, 0.0, 10.0))
        g = make_graph([0, 0], [(0, 1, 50)])
        r = dijkstra_energy(g, v, NOLOAD, K.BASIC, Query(0, 1, 10.0))
        assert r.feasible and r.path == [0, 1]
        assert r.total_energy == pytest.approx(5.0, abs=1e-12)
        assert r.energy_trace == pytest.approx([10.0, 5.0])

    def test_gate(self):
        v = toy_vehicle(b=(0.0, 0.0, 10.0))
        g = make_graph([0, 0], [(0, 1, 200)])
        r = dijkstra_energy(g, v, NOLOAD, K.BASIC, Query(0, 1, 10.0))
        assert not r.feasible and r.path == [] and r.energy_trace == []

    def test_diamond_takes_feasible_arm(self):
        g, v = diamond()
        r = dijkstra_energy(g, v, NOLOAD, K.BASIC, Query(0, 3, 10.0), PotShift())
        assert r.path == [0, 2, 3]
        assert r.total_energy == pytest.approx(10.0)
        o = exhaustive_oracle(g, v, NOLOAD, K.BASIC, Query(0, 3, 10.0))
        assert o.path == r.path and o.total_energy == pytest.approx(r.total_energy, abs=1e-9)
        # with enough charge the short arm wins
        r = dijkstra_energy(g, v, NOLOAD, K.BASIC, Query(0, 3, 20.0), PotShift())
        assert r.path == [0, 1, 3] and r.total_energy == pytest.approx(4.0)

    def test_origin_is_destination(self, leaf):
        g = make_graph([0, 5], [(0, 1, 300)])
        for r in (
            dijkstra_energy(g, leaf, NOLOAD, K.FULL, Query(1, 1, 100.0), PotShift()),
            bellman_ford_energy(g, leaf, NOLOAD, K.FULL, Query(1, 1, 100.0)),
        ):
            assert r.feasible and r.path == [1] and r.total_energy == 0.0 and r.energy_trace == [100.0]

    def test_unknown_vertex(self, leaf):
        g = make_graph([0, 5], [(0, 1, 300)])
        with pytest.raises(Exception, match="7"):
            dijkstra_energy(g, leaf, NOLOAD, K.FULL, Query(0, 7, 100.0))

    def test_initial_energy_range(self, leaf):
        g = make_graph([0, 5], [(0, 1, 300)])
        with pytest.raises(RoutingError):
            dijkstra_energy(g, leaf, NOLOAD, K.FULL, Query(0, 1, leaf.capacity + 1))

    def test_no_shift_rejects_negative_costs(self, leaf):
        g = make_graph([20, 0], [(0, 1, 300)])
        with pytest.raises(ContractViolation, match="0->1"):
            dijkstra_energy(g, leaf, NOLOAD, K.FULL, Query(0, 1, 100.0), NoShift())

    def test_no_shift_fine_on_flat(self, leaf):
        g = make_graph([0, 0, 0], [(0, 1, 300), (1, 2, 300), (0, 2, 700)])
        r = dijkstra_energy(g, leaf, NOLOAD, K.FULL, Query(0, 2, 1000.0), NoShift())
        assert r.path == [0, 1, 2]

    def test_early_exit_same_answer_less_work(self, leaf):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=2000, seed=3))
        q = Query(0, 17, 0.7 * leaf.capacity)
        a = dijkstra_energy(g, leaf, NOLOAD, K.FULL, q, PotShift())
        b = dijkstra_energy(g, leaf, NOLOAD, K.FULL, q, PotShift(), early_exit=False)
        assert a.path == b.path and a.total_energy == b.total_energy
        assert a.stats.settled <= b.stats.settled == g.n_vertices

    def test_pot_and_pi_agree(self, ev1):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=1500, seed=8, target_avg_abs_gradient=0.03))
        load = LoadConfig.passengers(2)
        for dst in (5, 99, 1400):
            q = Query(0, dst, 0.5 * ev1.capacity)
            a = dijkstra_energy(g, ev1, load, K.FULL, q, PotShift())
            b = dijkstra_energy(g, ev1, load, K.FULL, q, PiShift())
            assert a.total_energy == pytest.approx(b.total_energy, abs=1e-6)


class TestBellmanFord:
    def test_negative_cycle_guard(self):
        # test-only: coefficient table with a negative constant term makes every flat edge gain energy
        v = toy_vehicle(b=(0.0, 0.0, 10.0), capacity=1e6)
        g = make_graph([0, 0, 0], [(0, 1, 100), (1, 0, 100), (1, 2, 100)])
        *head, coef = kernel_inputs(g, v, NOLOAD, K.BASIC)
        rigged = (*head, coef - np.array([0.0, 0.0, 20.0]))
        with pytest.raises(NegativeCycleError):
            bellman_ford_energy(g, v, NOLOAD, K.BASIC, Query(0, 2, 100.0), arrays=rigged)

    def test_matches_dijkstra_on_hills(self, ion):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=800, seed=21, target_avg_abs_gradient=0.039))
        for dst in (3, 400, 799):
            q = Query(0, dst, 0.3 * ion.capacity)
            a = bellman_ford_energy(g, ion, LoadConfig(300), K.FULL, q)
            b = dijkstra_energy(g, ion, LoadConfig(300), K.FULL, q, PotShift())
            assert a.feasible == b.feasible
            assert a.total_energy == pytest.approx(b.total_energy, abs=1e-9)


class TestJohnson:
    def test_flat_graph_zero_potential(self, leaf):
        g = make_graph([5, 5, 5], [(0, 1, 100), (1, 2, 100), (2, 0, 100)])
        shift = johnson_preprocess(g, leaf, NOLOAD, K.FULL)
        assert np.all(shift.potential == 0.0)

    def test_chain(self):
        # cost is 4 Wh per metre of climb, so the 2.5 m drop is a -10 Wh edge
        v = toy_vehicle(b=(0.0, 400.0, 0.0))
        g = make_graph([2.5, 2.5, 0.0], [(0, 1, 100), (1, 2, 100)])
        shift = johnson_preprocess(g, v, NOLOAD, K.BASIC)
        assert shift.potential.tolist() == pytest.approx([0.0, 0.0, -10.0])
        reduced = edge_costs(g, v, NOLOAD, K.BASIC) + shift.potential[g.tails] - shift.potential[g.heads]
        assert np.all(reduced >= 0)

    def test_random_graph_validates(self, leaf):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=100, seed=2, target_avg_abs_gradient=0.04))
        shift = johnson_preprocess(g, leaf, LoadConfig(150), K.FULL)
        reduced = edge_costs(g, leaf, LoadConfig(150), K.FULL) + shift.potential[g.tails] - shift.potential[g.heads]
        assert reduced.min() >= -1e-9
        assert shift.graph_passes >= 2
        assert not shift.potential.flags.writeable


class TestAlpha:
    def test_single_uphill_edge(self):
        v = toy_vehicle(b=(0.0, 400.0, 1.0))
        g = make_graph([0, 10], [(0, 1, 1000)])
        assert edge_costs(g, v, NOLOAD, K.BASIC)[0] == pytest.approx(50.0)
        b = alpha_scan(g, v, NOLOAD, K.BASIC)
        assert b.upper == pytest.approx(500.0)
        assert b.lower == -math.inf

    def test_lower_above_upper(self):
        # per-pattern slopes: the downhill edge has alpha_e 600, the uphill one 400
        def row(b1):
            return PatternCoefficients(0, 0, 0, 0, b1, 0)

        v = VehicleSpec("odd", 1000.0, 1000.0, {"Slow": row(600), "ExtraHigh": row(400), "Overall": row(500),
                                                "Medium": row(500), "High": row(500)})
        g = make_graph([10, 0, 10], [(0, 1, 1000, 19), (1, 2, 1000, 92)])
        with pytest.raises(RoutingError, match="lower bound 600.000 exceeds upper bound 400.000"):
            alpha_scan(g, v, NOLOAD, K.PATTERN_ONLY)

    def test_midpoint(self):
        assert make_height_alpha(AlphaBounds(218.18, 541.98)).alpha == pytest.approx(380.08)
        assert AlphaBounds(-math.inf, 500.0).midpoint == 500.0
        assert AlphaBounds(100.0, math.inf).midpoint == 100.0
        assert AlphaBounds(-math.inf, math.inf).midpoint == 0.0

    def test_custom_alpha_boundary(self):
        bounds = AlphaBounds(218.18, 541.98)
        assert make_height_alpha(bounds, 541.98).alpha == 541.98
        with pytest.raises(RoutingError):
            make_height_alpha(bounds, 542.98)

    def test_scan_brackets_physical_shifts(self, leaf):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=3000, seed=1))
        b = alpha_scan(g, leaf, NOLOAD, K.FULL)
        assert 421.512 in b
        assert 382.875 in b


class TestPrepare:
    def test_passes(self, leaf):
        g = generate_synthetic(SyntheticGraphParams(n_vertices=500, seed=6))
        got = {a: prepare(a, g, leaf, NOLOAD, K.FULL) for a in ALGORITHMS}
        assert got["dijkstra-pot"].graph_passes == got["dijkstra-pi"].graph_passes == 0
        assert got["dijkstra-pot"].seconds == 0.0 or got["dijkstra-pot"].seconds < 1e-3
        assert got["johnson-alpha"].graph_passes == 1
        assert got["johnson"].graph_passes > 1
        assert got["dijkstra-pot"].params["coefficient"] == pytest.approx(421.512)

    def test_unknown(self, leaf):
        g = make_graph([0, 0], [(0, 1, 100)])
        with pytest.raises(RoutingError, match="unknown algorithm"):
            prepare("a-star", g, leaf, NOLOAD, K.FULL)


class TestOracle:
    def test_two_vertex(self, leaf):
        g = make_graph([0, 2], [(0, 1, 250)])
        q = Query(0, 1, 1000.0)
        o = exhaustive_oracle(g, leaf, NOLOAD, K.FULL, q)
        d = dijkstra_energy(g, leaf, NOLOAD, K.FULL, q, PotShift())
        assert o.path == d.path and o.total_energy == pytest.approx(d.total_energy, abs=1e-12)

    def test_cap_active(self):
        # downhill start at full charge: the regenerated energy on the first edge is lost
        v = toy_vehicle(b=(0.0, 400.0, 1.0), capacity=100.0)
        g = make_graph([10, 0, 1], [(0, 1, 100), (1, 2, 100)])
        raw = float(edge_costs(g, v, NOLOAD, K.BASIC).sum())
        o = exhaustive_oracle(g, v, NOLOAD, K.BASIC, Query(0, 2, 100.0))
        assert o.total_energy >= raw
        assert o.total_energy == pytest.approx(5.0)
        assert o.energy_trace == pytest.approx([100.0, 100.0, 95.0])

    def test_size_limit(self, leaf):
        g = make_graph([0] * 13, [])
        with pytest.raises(ValueError):
            exhaustive_oracle(g, leaf, NOLOAD, K.FULL, Query(0, 1, 10.0))

    def test_random_six_vertex_instances(self, ion):
        rng = np.random.default_rng(123)
        small = VehicleSpec("ion-small", 150.0, ion.kerb_mass, ion.patterns, ion.g_per_kg, ion.pattern_speeds)
        for _ in range(200):
            g = random_small_graph(rng, 6)
            q = Query(0, int(rng.integers(1, 6)), float(rng.uniform(0, small.capacity)))
            o = exhaustive_oracle(g, small, NOLOAD, K.FULL, q)
            b = bellman_ford_energy(g, small, NOLOAD, K.FULL, q)
            assert o.feasible == b.feasible
            if o.feasible:
                assert b.total_energy == pytest.approx(o.total_energy, abs=1e-9)


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 8),
    vehicle=st.sampled_from(["leaf", "ion", "ev1"]),
    capacity=st.floats(20.0, 400.0),
    soc=st.floats(0.0, 1.0),
    mass=st.sampled_from([0.0, 75.0, 225.0, 450.0]),
    kind=st.sampled_from(list(K)),
)
def test_every_algorithm_matches_oracle(seed, n, vehicle, capacity, soc, mass, kind):
    from evrouter.energy import load_vehicle

    base = load_vehicle(vehicle)
    v = VehicleSpec(base.name, capacity, base.kerb_mass, base.patterns, base.g_per_kg, base.pattern_speeds)
    rng = np.random.default_rng(seed)
    g = random_small_graph(rng, n)
    load = LoadConfig(mass)
    q = Query(0, n - 1, soc * capacity)
    truth = exhaustive_oracle(g, v, load, kind, q)
    for name in ("bellman-ford", "dijkstra-pot", "dijkstra-pi", "johnson"):
        r = solve(prepare(name, g, v, load, kind), g, v, load, kind, q)
        assert r.feasible == truth.feasible, name
        if truth.feasible:
            assert r.total_energy == pytest.approx(truth.total_energy, abs=1e-9), name
            assert min(r.energy_trace) >= -1e-9 and max(r.energy_trace) <= capacity + 1e-9
