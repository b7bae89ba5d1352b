"""Command line entry point: simulate, analyze, plan, walk.

Exit codes: 0 success, 1 domain failure (plan conflicts, unreachable
nodes, missing data for a mode), 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import analysis, cellnet, engine, logio, overlay, scenario
from .errors import EmptyInput, InvalidArgument, NoBaseline, RelayCellError, Unreachable

OK, DOMAIN_FAILURE, USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE)


def _err(message: str) -> None:
    print(f"relaycell: {message}", file=sys.stderr)


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    config = scenario.load_scenario(args.scenario)
    out = Path(args.out)
    if not out.parent.exists():
        raise InvalidArgument(f"output directory {out.parent} does not exist")
    records = engine.run_scenario(config, args.seed)
    writer = logio.write_csv if out.suffix == ".csv" else logio.write_ndjson
    n = writer(records, out)
    print(f"{config.name}: {n} samples -> {out}")
    return OK


# -- analyze ----------------------------------------------------------------

def _tile_kwargs(args):
    return {"tile_width": args.tile_width, "tile_height": args.tile_height,
            "origin": tuple(args.origin)}


def _write_map(tmap, path, fmt, value_name, provenance=None):
    if fmt == "gnuplot":
        analysis.write_tilemap_gnuplot(tmap, path)
    else:
        analysis.write_tilemap_csv(tmap, path, value_name, provenance)


def _need(paths, n, mode):
    if len(paths) != n:
        raise InvalidArgument(f"mode {mode} takes exactly {n} input log(s), got {len(paths)}")


def _analyze_tilemap(args, logs):
    _need(logs, 1, "tilemap")
    tmap = analysis.tile_aggregate(logs[0], args.field, **_tile_kwargs(args))
    if not tmap.cells:
        raise EmptyInput(f"no {args.field} samples in {args.inputs[0]}")
    with logio.atomic_output(args.out) as tmp:
        _write_map(tmap, tmp, args.format, args.field)
    print(f"{len(tmap.cells)} tiles -> {args.out}")


def _analyze_bestserver(args, logs):
    _need(logs, 2, "bestserver")
    maps = [analysis.tile_aggregate(log, args.field, **_tile_kwargs(args)) for log in logs]
    best, provenance = analysis.best_server(*maps, field=args.field)
    if not best.cells:
        raise EmptyInput(f"no {args.field} samples in either log")
    out = Path(args.out)
    prov_path = Path(args.provenance) if args.provenance else out.with_name(
        out.stem + ".provenance" + (out.suffix or ".csv"))
    with logio.atomic_output(out) as tmp, logio.atomic_output(prov_path) as ptmp:
        _write_map(best, tmp, args.format, args.field)
        analysis.write_provenance_csv(provenance, best, ptmp)
    won = sum(1 for v in provenance.values() if v == analysis.TWO_HOP)
    print(f"{len(best.cells)} tiles ({won} from the two-hop log) -> {out}, {prov_path}")
    if args.field == "rsrp":
        try:
            ext = analysis.coverage_extension(maps[0], best, args.threshold, args.road_axis)
            print(f"coverage extension at {args.threshold:g} dBm: {ext:g} m")
        except NoBaseline as exc:
            print(f"coverage extension: n/a ({exc})")


def _analyze_cdf(args, logs):
    _need(logs, 1, "cdf")
    cdf = analysis.latency_cdf(logs[0])
    with logio.atomic_output(args.out) as tmp:
        if args.format == "gnuplot":
            analysis.write_cdf_gnuplot(cdf, tmp)
        else:
            analysis.write_cdf_csv(cdf, tmp)
    print(f"{len(cdf)} latencies, mean {cdf.mean:.3f} ms -> {args.out}")


def _analyze_compliance(args, logs):
    _need(logs, 1, "compliance")
    cdf = analysis.latency_cdf(logs[0])
    rows = [analysis.v2x_compliance(cdf, limit, args.reliability) for limit in args.limit]
    with logio.atomic_output(args.out) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["limit_ms", "required", "achieved", "passed"])
        for c in rows:
            w.writerow([f"{c.limit:g}", f"{c.required:g}", repr(c.achieved), str(c.passed).lower()])
    for c in rows:
        verdict = "pass" if c.passed else "fail"
        print(f"{c.limit:g} ms @ {c.required:g}: {verdict} (achieved {c.achieved:.4f})")


def _analyze_fit(args, logs):
    _need(logs, 1, "fit")
    if not args.scenario:
        raise InvalidArgument("mode fit needs --scenario for radio and ground parameters")
    config = scenario.load_scenario(args.scenario)
    src = config.node(config.probe.source)
    parent_id = dict(config.links).get(src.node_id)
    if parent_id is None:
        raise InvalidArgument(f"{src.node_id!r} has no serving cell in the scenario")
    parent = config.node(parent_id)
    if parent.position is None:
        raise InvalidArgument(f"serving cell {parent_id!r} must be static for a distance fit")
    pairs = [(d, r) for d, r in analysis.distance_samples(logs[0], parent.position)
             if d >= args.min_distance]
    fit = analysis.fit_two_ray(pairs, config.channel.ground, engine.link_radio(parent),
                               src.radio, config.channel.excess_loss_db_per_m)
    with logio.atomic_output(args.out) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["distance_m", "rsrp_dbm", "model_dbm"])
        for d, r in sorted(pairs):
            m = fit.model(engine.link_radio(parent), src.radio, d, config.channel.ground,
                          config.channel.excess_loss_db_per_m)
            w.writerow([repr(float(d)), repr(float(r)), repr(float(m))])
    print(f"two-ray fit over {len(pairs)} samples: offset {fit.offset:+.3f} dB, "
          f"rms {fit.rms:.3f} dB -> {args.out}")


_MODES = {"tilemap": _analyze_tilemap, "bestserver": _analyze_bestserver,
          "cdf": _analyze_cdf, "compliance": _analyze_compliance, "fit": _analyze_fit}


def cmd_analyze(args) -> int:
    logs = []
    for path in args.inputs:
        try:
            logs.append(logio.read_log(path))
        except OSError as exc:
            raise InvalidArgument(f"cannot read {path}: {exc.strerror}") from None
    _MODES[args.mode](args, logs)
    return OK


# -- plan / walk ------------------------------------------------------------

def cmd_plan(args) -> int:
    config = scenario.load_scenario(args.scenario, validate_plan=False)
    rows = [("node", "roles", "uplink [MHz]", "downlink [MHz]")]
    for n in config.nodes:
        roles = "+".join(sorted(n.roles))
        if n.served_allocation is None:
            rows.append((n.node_id, roles, "-", "-"))
            continue
        ul, dl = n.served_allocation.uplink, n.served_allocation.downlink
        rows.append((n.node_id, roles, f"{ul[0] / 1e6:g}-{ul[1] / 1e6:g}",
                     f"{dl[0] / 1e6:g}-{dl[1] / 1e6:g}"))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    for r in rows:
        print("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    conflicts = cellnet.validate_frequency_plan(config.nodes, config.links)
    if conflicts:
        for c in conflicts:
            print(f"conflict: {c}")
        return DOMAIN_FAILURE
    print("ok")
    return OK


def cmd_walk(args) -> int:
    config = scenario.load_scenario(args.scenario)
    topo = cellnet.build_topology(config.nodes, config.links)
    walk = overlay.encapsulation_walk(args.src, args.dst, topo)
    print(overlay.format_walk(walk))
    if args.payload is not None:
        sizes = overlay.air_interface_sizes(walk, args.payload)
        print(f"air-interface packet sizes for {args.payload} B payload: "
              + (", ".join(f"{s} B" for s in sizes) or "none"))
    return OK


# -- wiring -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relaycell", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="run a scenario and write its sample log")
    s.add_argument("--scenario", required=True, help="scenario file or bundled name")
    s.add_argument("--out", required=True, help="log path (.ndjson, or .csv)")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="turn sample logs into maps, CDFs and verdicts")
    a.add_argument("--mode", required=True, choices=sorted(_MODES))
    a.add_argument("--in", dest="inputs", nargs="+", required=True, metavar="LOG")
    a.add_argument("--out", required=True)
    a.add_argument("--format", choices=("csv", "gnuplot"), default="csv")
    a.add_argument("--field", choices=("rsrp", "latency"), default="rsrp")
    a.add_argument("--tile-width", type=float, default=4.0)
    a.add_argument("--tile-height", type=float, default=2.0)
    a.add_argument("--origin", type=float, nargs=2, default=(0.0, 0.0), metavar=("X", "Y"))
    a.add_argument("--provenance", help="bestserver: provenance map path")
    a.add_argument("--threshold", type=float, default=-110.0, help="bestserver: dBm")
    a.add_argument("--road-axis", choices=("x", "y"), default="x")
    a.add_argument("--limit", type=float, nargs="+", default=[20.0, 100.0],
                   help="compliance: latency limits in ms")
    a.add_argument("--reliability", type=float, default=0.95)
    a.add_argument("--scenario", help="fit: scenario the log came from")
    a.add_argument("--min-distance", type=float, default=1.0, help="fit: metres")
    a.set_defaults(func=cmd_analyze)

    pl = sub.add_parser("plan", help="check a scenario's frequency plan")
    pl.add_argument("--scenario", required=True)
    pl.set_defaults(func=cmd_plan)

    w = sub.add_parser("walk", help="print the encapsulation walk between two nodes")
    w.add_argument("--scenario", required=True)
    w.add_argument("--src", required=True)
    w.add_argument("--dst", required=True)
    w.add_argument("--payload", type=int, help="also print air-interface sizes")
    w.set_defaults(func=cmd_walk)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except scenario.ScenarioError as exc:
        _err(str(exc))
        return USAGE
    except (Unreachable, EmptyInput, NoBaseline) as exc:
        _err(str(exc))
        return DOMAIN_FAILURE
    except InvalidArgument as exc:
        _err(str(exc))
        return USAGE
    except RelayCellError as exc:
        _err(str(exc))
        return DOMAIN_FAILURE


if __name__ == "__main__":
    sys.exit(main())
