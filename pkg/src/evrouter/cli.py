"""Command-line entry point: ``evrouter <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .bench import CrossCheckError, compare_models, feasibility_study, fit_vehicle, rows_to_dicts, run_bench
from .drivecycle import (
    DEFAULT_MASSES,
    DEFAULT_SLOPES,
    DynamicsError,
    VehicleDynamicsParams,
    bundled_profiles,
    load_dynamics,
    load_profile_csv,
)
from .drivecycle.fitting import FitError
from .energy import EnergyModelError, EnergyModelKind, LoadConfig, load_vehicle
from .graph import GraphError, load_graph, save_graph
from .routing import ALGORITHMS, ContractViolation, NegativeCycleError, Query, RoutingError, prepare, solve
from .synthetic import GenerationError, SyntheticGraphParams, generate_synthetic, graph_stats
from .tables import to_csv, to_json

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_CONTRACT = 0, 1, 2, 3

SHIFTS = {
    "none": "dijkstra",
    "bellman-ford": "bellman-ford",
    "pot": "dijkstra-pot",
    "pi": "dijkstra-pi",
    "alpha": "johnson-alpha",
    "johnson": "johnson",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _mix(text: str) -> dict[str, float]:
    out = {}
    for part in text.split(","):
        key, _, val = part.partition("=")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad speed mix entry {part!r}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph file (.json) or csv-pair directory")
    common.add_argument("--vehicle", default="leaf", help="vehicle JSON or bundled name: leaf, ion, ev1")
    load = common.add_mutually_exclusive_group()
    load.add_argument("--passengers", type=int, default=None)
    load.add_argument("--load-kg", type=float, default=None)
    common.add_argument("--kind", choices=[k.value for k in EnergyModelKind], default="full")
    common.add_argument("--soc", type=float, default=0.7, help="initial state of charge in (0, 1]")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--out", help="output file (default: stdout)")

    p = _Parser(prog="evrouter", description="Energy-optimal EV routing toolkit.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("route", parents=[common], help="one energy-optimal query")
    r.add_argument("--origin", type=int, required=True)
    r.add_argument("--dest", type=int, required=True)
    r.add_argument("--shift", choices=sorted(SHIFTS), default="pot")

    b = sub.add_parser("bench", parents=[common], help="runtime comparison of the algorithms")
    b.add_argument("--algorithms", default=",".join(ALGORITHMS))
    b.add_argument("--n-queries", type=int, default=100)
    b.add_argument("--repeats", type=int, default=5)

    c = sub.add_parser("compare-models", parents=[common], help="richer energy models against Basic")
    c.add_argument("--n-queries", type=int, default=100)
    c.add_argument("--models", default="mass,pattern,full")

    f = sub.add_parser("feasibility", parents=[common], help="round trips planned with Basic, driven with Full")
    f.add_argument("--n-trips", type=int, default=500)

    fit = sub.add_parser("fit", parents=[common], help="simulate drive cycles and fit model coefficients")
    fit.add_argument("--dynamics", help="dynamics parameters JSON (default: built-in compact EV)")
    fit.add_argument("--profile", action="append", default=[], metavar="LABEL=CSV",
                     help="speed profile trace; repeatable (default: bundled profiles)")
    fit.add_argument("--masses", type=_floats, default=list(DEFAULT_MASSES))
    fit.add_argument("--slopes", type=_floats, default=list(DEFAULT_SLOPES))
    fit.add_argument("--name", default="fitted")
    fit.add_argument("--capacity-wh", type=float, default=40000.0)

    g = sub.add_parser("gen-graph", parents=[common], help="write a synthetic road network")
    g.add_argument("--n-vertices", type=int, default=1000)
    g.add_argument("--avg-degree", type=float, default=2.4)
    g.add_argument("--amplitude", type=float, default=50.0, help="raw elevation relief, m")
    g.add_argument("--wavelength", type=float, default=3000.0, help="elevation wavelength, m")
    g.add_argument("--target-gradient", type=float, default=0.016, help="mean |s| as a fraction")
    g.add_argument("--speed-mix", type=_mix, default=None, help="e.g. Slow=0.2,Medium=0.4,High=0.3,ExtraHigh=0.1")
    g.add_argument("--spacing", type=float, default=200.0, help="typical junction spacing, m")
    g.add_argument("--base-elevation", type=float, default=200.0)
    g.add_argument("--graph-format", choices=["json", "csv-pair"], default=None)
    return p


def _load(args) -> LoadConfig:
    if args.passengers is not None:
        if args.passengers < 0:
            raise ValueError("--passengers must be >= 0")
        return LoadConfig.passengers(args.passengers)
    return LoadConfig(args.load_kg or 0.0)


def _need_graph(args):
    if not args.graph:
        raise ValueError("--graph is required for this command")
    return load_graph(args.graph)


def _soc(args) -> float:
    if not 0 < args.soc <= 1:
        raise ValueError(f"--soc must lie in (0, 1], got {args.soc}")
    return args.soc


def _emit(text: str, args) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _table(rows: list[dict], args, decimals=None) -> None:
    if (args.format or "csv") == "json":
        _emit(to_json(rows), args)
    else:
        _emit(to_csv(rows, decimals), args)


def cmd_route(args) -> int:
    graph = _need_graph(args)
    vehicle = load_vehicle(args.vehicle)
    load, kind = _load(args), EnergyModelKind(args.kind)
    algorithm = SHIFTS[args.shift]
    prepared = prepare(algorithm, graph, vehicle, load, kind)
    query = Query(args.origin, args.dest, _soc(args) * vehicle.capacity)
    result = solve(prepared, graph, vehicle, load, kind, query)
    doc = {"algorithm": algorithm, **result.to_dict()}
    _emit(to_json(doc), args)
    return EXIT_OK if result.feasible else EXIT_INFEASIBLE


def cmd_bench(args) -> int:
    graph = _need_graph(args)
    algorithms = [a.strip() for a in args.algorithms.split(",") if a.strip()]
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")
    rows = run_bench(
        graph, load_vehicle(args.vehicle), _load(args), EnergyModelKind(args.kind),
        algorithms, args.n_queries, args.seed, _soc(args), args.repeats,
    )
    _table(rows_to_dicts(rows), args, {"prep_s": 3, "avg_s": 3, "max_s": 3})
    return EXIT_OK


def cmd_compare(args) -> int:
    graph = _need_graph(args)
    kinds = [EnergyModelKind(k.strip()) for k in args.models.split(",") if k.strip()]
    rows = compare_models(
        graph, load_vehicle(args.vehicle), _load(args), args.n_queries, args.seed, _soc(args), kinds
    )
    _table(rows_to_dicts(rows), args)
    return EXIT_OK


def cmd_feasibility(args) -> int:
    graph = _need_graph(args)
    rows = feasibility_study(
        graph, load_vehicle(args.vehicle), _load(args), _soc(args), args.n_trips, args.seed
    )
    _table(rows_to_dicts(rows), args)
    return EXIT_OK


def cmd_fit(args) -> int:
    dyn = load_dynamics(args.dynamics) if args.dynamics else VehicleDynamicsParams()
    if args.profile:
        profiles = []
        for spec in args.profile:
            label, sep, path = spec.partition("=")
            if not sep:
                raise ValueError(f"--profile expects LABEL=CSV, got {spec!r}")
            profiles.append(load_profile_csv(path, label))
    else:
        profiles = bundled_profiles()
    doc = fit_vehicle(dyn, profiles, args.name, args.capacity_wh, args.masses, args.slopes)
    _emit(to_json(doc), args)
    return EXIT_OK


def cmd_gen_graph(args) -> int:
    if not args.out:
        raise ValueError("gen-graph needs --out (a .json file or a directory)")
    kw = {}
    if args.speed_mix is not None:
        kw["speed_mix"] = args.speed_mix
    params = SyntheticGraphParams(
        n_vertices=args.n_vertices, avg_degree=args.avg_degree,
        elevation_amplitude=args.amplitude, elevation_wavelength=args.wavelength,
        target_avg_abs_gradient=args.target_gradient, seed=args.seed,
        spacing_m=args.spacing, base_elevation=args.base_elevation, **kw,
    )
    graph = generate_synthetic(params)
    out = Path(args.out)
    fmt = args.graph_format or ("json" if out.suffix == ".json" else "csv-pair")
    save_graph(graph, out, fmt)
    sidecar = out.with_name(out.stem + ".stats.json") if fmt == "json" else out / "stats.json"
    sidecar.write_text(to_json({"params": asdict(params), "stats": asdict(graph_stats(graph))}), encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "route": cmd_route,
    "bench": cmd_bench,
    "compare-models": cmd_compare,
    "feasibility": cmd_feasibility,
    "fit": cmd_fit,
    "gen-graph": cmd_gen_graph,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ContractViolation, CrossCheckError, NegativeCycleError) as exc:
        print(f"evrouter: internal contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (
        OSError, GraphError, EnergyModelError, GenerationError, DynamicsError, FitError,
        RoutingError, ValueError, json.JSONDecodeError,
    ) as exc:
        print(f"evrouter: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
