"""Scenario files: strict JSON in, validated ScenarioConfig out.

Unknown keys are rejected, every reference must resolve, and each
diagnostic carries the dotted field path and the line it came from.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from . import cellnet, engine, overlay, rfmodel
from .errors import InvalidConfig, RelayCellError

BUNDLED = ("lab_single_hop", "lab_two_hop", "field_single_hop", "field_two_hop")


class ScenarioError(InvalidConfig):
    """A scenario file that does not parse or does not validate."""

    def __init__(self, message: str, path: str = "", line: Optional[int] = None,
                 source: Optional[str] = None):
        self.field_path, self.line, self.source = path, line, source
        where = source or "<scenario>"
        if line is not None:
            where += f":{line}"
        if path:
            where += f": {path}"
        super().__init__(f"{where}: {message}")


# -- positions --------------------------------------------------------------

_WS = " \t\n\r"


def _skip(text, i):
    while i < len(text) and text[i] in _WS:
        i += 1
    return i


def _line_map(text: str) -> dict:
    """Path tuple -> 1-based line where that value starts.

    Runs after ``json.loads`` succeeded, so the text is known to be valid.
    """
    decoder = json.JSONDecoder()
    lines: dict = {}

    def line_of(i):
        return text.count("\n", 0, i) + 1

    def value(i, path):
        i = _skip(text, i)
        lines[path] = line_of(i)
        ch = text[i]
        if ch == "{":
            i = _skip(text, i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = json.decoder.scanstring(text, _skip(text, i) + 1)
                i = _skip(text, i) + 1  # ':'
                i = _skip(text, value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if ch == "[":
            i = _skip(text, i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = _skip(text, value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = decoder.raw_decode(text, i)
        return end

    value(0, ())
    return lines


# -- schema helpers ---------------------------------------------------------

@dataclass
class _Ctx:
    lines: dict
    source: Optional[str]

    def fail(self, path: tuple, message: str):
        dotted = ".".join(f"[{p}]" if isinstance(p, int) else str(p) for p in path)
        dotted = dotted.replace(".[", "[")
        line = None
        for k in range(len(path), -1, -1):
            if path[:k] in self.lines:
                line = self.lines[path[:k]]
                break
        raise ScenarioError(message, dotted, line, self.source)


def _obj(ctx, data, path, required=(), optional=()):
    if not isinstance(data, dict):
        ctx.fail(path, "expected an object")
    allowed = set(required) | set(optional)
    for key in data:
        if key not in allowed:
            ctx.fail(path + (key,), f"unknown key {key!r}")
    for key in required:
        if key not in data:
            ctx.fail(path, f"missing required key {key!r}")
    return data


def _num(ctx, data, path, key, default=None, required=False):
    if key not in data:
        if required:
            ctx.fail(path, f"missing required key {key!r}")
        return default
    v = data[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(path + (key,), "expected a number")
    return float(v)


def _str(ctx, data, path, key, default=None, required=False):
    if key not in data:
        if required:
            ctx.fail(path, f"missing required key {key!r}")
        return default
    if not isinstance(data[key], str):
        ctx.fail(path + (key,), "expected a string")
    return data[key]


def _pair(ctx, value, path):
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        ctx.fail(path, "expected a pair of numbers")
    return float(value[0]), float(value[1])


def _guard(ctx, path, fn, *args, **kwargs):
    """Run a domain constructor, re-raising its errors with location."""
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except (RelayCellError, ValueError, TypeError) as exc:
        ctx.fail(path, str(exc))


# -- sections ---------------------------------------------------------------

def _ground(ctx, data):
    path = ("ground",)
    _obj(ctx, data, path, required=("conductivity", "relative_permittivity"))
    return _guard(ctx, path, rfmodel.GroundParameters,
                  _num(ctx, data, path, "conductivity"),
                  _num(ctx, data, path, "relative_permittivity"))


def _channel(ctx, data, ground):
    path = ("channel",)
    _obj(ctx, data, path, required=("model",),
         optional=("excess_loss_db_per_m", "shadowing_sigma_db", "cable_loss_db"))
    return _guard(ctx, path, engine.Channel,
                  model=_str(ctx, data, path, "model"), ground=ground,
                  excess_loss_db_per_m=_num(ctx, data, path, "excess_loss_db_per_m", 0.0),
                  shadowing_sigma_db=_num(ctx, data, path, "shadowing_sigma_db", 0.0),
                  cable_loss_db=_num(ctx, data, path, "cable_loss_db", 30.0))


def _attach(ctx, data):
    path = ("attach",)
    _obj(ctx, data, path, optional=("threshold", "hysteresis", "unreliable_margin"))
    return _guard(ctx, path, engine.AttachPolicy,
                  threshold=_num(ctx, data, path, "threshold", -110.0),
                  hysteresis=_num(ctx, data, path, "hysteresis", 3.0),
                  unreliable_margin=_num(ctx, data, path, "unreliable_margin", 6.0))


def _latency(ctx, data):
    path = ("latency_model",)
    _obj(ctx, data, path, required=("per_hop_mean", "host_processing"),
         optional=("jitter", "penalty"))
    jitter = engine.Jitter()
    if "jitter" in data:
        jp = path + ("jitter",)
        j = _obj(ctx, data["jitter"], jp, required=("family",), optional=("mu", "sigma"))
        jitter = _guard(ctx, jp, engine.Jitter, _str(ctx, j, jp, "family"),
                        _num(ctx, j, jp, "mu", 0.0), _num(ctx, j, jp, "sigma", 0.0))
    penalty = engine.LinkPenalty()
    if "penalty" in data:
        pp = path + ("penalty",)
        p = _obj(ctx, data["penalty"], pp, required=("rate", "reference"))
        penalty = _guard(ctx, pp, engine.LinkPenalty, _num(ctx, p, pp, "rate"),
                         _num(ctx, p, pp, "reference"))
    return _guard(ctx, path, engine.LatencyModel,
                  _num(ctx, data, path, "per_hop_mean"),
                  _num(ctx, data, path, "host_processing"), jitter, penalty)


_LANE_KEYS = ("road_length", "lane_count", "lane_spacing", "speed")


def _traces(ctx, data, interval):
    path = ("traces",)
    if not isinstance(data, dict):
        ctx.fail(path, "expected an object of named traces")
    out = {}
    for name, entry in data.items():
        tp = path + (name,)
        if not isinstance(entry, dict):
            ctx.fail(tp, "expected an object")
        if "generator" in entry:
            _obj(ctx, entry, tp, required=("generator",) + _LANE_KEYS,
                 optional=("origin", "turn_depth"))
            if entry["generator"] != "lanes":
                ctx.fail(tp + ("generator",), f"unknown generator {entry['generator']!r}")
            count = entry["lane_count"]
            if isinstance(count, bool) or not isinstance(count, int):
                ctx.fail(tp + ("lane_count",), "expected an integer")
            origin = _pair(ctx, entry["origin"], tp + ("origin",)) if "origin" in entry else (0.0, 0.0)
            out[name] = _guard(ctx, tp, engine.generate_lane_trajectories,
                               _num(ctx, entry, tp, "road_length"), count,
                               _num(ctx, entry, tp, "lane_spacing"),
                               _num(ctx, entry, tp, "speed"), interval, origin,
                               _num(ctx, entry, tp, "turn_depth"))
        else:
            _obj(ctx, entry, tp, required=("waypoints", "speed"))
            wps = entry["waypoints"]
            if not isinstance(wps, list):
                ctx.fail(tp + ("waypoints",), "expected a list of [x, y] points")
            pts = tuple(_pair(ctx, p, tp + ("waypoints", k)) for k, p in enumerate(wps))
            out[name] = [_guard(ctx, tp, engine.MobilityTrace, pts,
                                _num(ctx, entry, tp, "speed"), interval, 0)]
    return out


_RADIO_KEYS = ("carrier_frequency", "bandwidth", "tx_power", "antenna_height")


def _node(ctx, data, k):
    path = ("nodes", k)
    _obj(ctx, data, path, required=("id", "mmsi", "roles", "radio"),
         optional=("allocation", "position", "trace"))
    node_id = _str(ctx, data, path, "id")
    mmsi = data["mmsi"]
    if isinstance(mmsi, bool) or not isinstance(mmsi, int):
        ctx.fail(path + ("mmsi",), "expected an integer")
    roles = data["roles"]
    if not isinstance(roles, list) or not all(isinstance(r, str) for r in roles):
        ctx.fail(path + ("roles",), "expected a list of role names")
    for j, role in enumerate(roles):
        if role not in cellnet.ROLES:
            ctx.fail(path + ("roles", j), f"unknown role {role!r}")
    rp = path + ("radio",)
    r = _obj(ctx, data["radio"], rp, required=_RADIO_KEYS,
             optional=("antenna_gain_tx", "antenna_gain_rx", "polarization"))
    radio = _guard(ctx, rp, rfmodel.RadioConfig,
                   *(_num(ctx, r, rp, key) for key in _RADIO_KEYS),
                   antenna_gain_tx=_num(ctx, r, rp, "antenna_gain_tx", 0.0),
                   antenna_gain_rx=_num(ctx, r, rp, "antenna_gain_rx", 0.0),
                   polarization=_str(ctx, r, rp, "polarization", "vertical"))
    alloc = None
    if "allocation" in data:
        ap = path + ("allocation",)
        a = _obj(ctx, data["allocation"], ap, required=("uplink_mhz", "downlink_mhz"),
                 optional=("duplex_mode",))
        ul = _pair(ctx, a["uplink_mhz"], ap + ("uplink_mhz",))
        dl = _pair(ctx, a["downlink_mhz"], ap + ("downlink_mhz",))
        alloc = _guard(ctx, ap, cellnet.FrequencyAllocation,
                       (ul[0] * 1e6, ul[1] * 1e6), (dl[0] * 1e6, dl[1] * 1e6),
                       _str(ctx, a, ap, "duplex_mode", "FDD"))
    position = _pair(ctx, data["position"], path + ("position",)) if "position" in data else None
    trace = _str(ctx, data, path, "trace")
    return _guard(ctx, path, cellnet.NodeSpec, node_id, mmsi, frozenset(roles), radio,
                  alloc, position, trace)


_TOP_REQUIRED = ("name", "nodes", "links", "ground", "latency_model", "probes")
_TOP_OPTIONAL = ("channel", "attach", "traces", "seed", "duration", "analysis", "description")
_ANALYSIS_KEYS = ("tile_width", "tile_height", "origin", "road_axis")


def parse_scenario(text: str, source: Optional[str] = None,
                   validate_plan: bool = True) -> engine.ScenarioConfig:
    """Build a ScenarioConfig from JSON text.

    With ``validate_plan`` false the frequency plan is left for the caller
    to report (the ``plan`` command wants to list conflicts, not die on
    the first one).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, "", exc.lineno, source) from None
    ctx = _Ctx(_line_map(text), source)
    _obj(ctx, data, (), required=_TOP_REQUIRED, optional=_TOP_OPTIONAL)

    name = _str(ctx, data, (), "name")
    ground = _ground(ctx, data["ground"])
    channel = _channel(ctx, data.get("channel", {"model": "two_ray"}), ground)
    attach = _attach(ctx, data.get("attach", {}))
    latency = _latency(ctx, data["latency_model"])

    pp = ("probes",)
    p = _obj(ctx, data["probes"], pp, required=("source", "destination"), optional=("interval",))
    probe = _guard(ctx, pp, engine.Probe, _str(ctx, p, pp, "source"),
                   _str(ctx, p, pp, "destination"), _num(ctx, p, pp, "interval", 0.1))
    traces = _traces(ctx, data.get("traces", {}), probe.interval)

    if not isinstance(data["nodes"], list) or not data["nodes"]:
        ctx.fail(("nodes",), "expected a non-empty list of nodes")
    nodes = [_node(ctx, n, k) for k, n in enumerate(data["nodes"])]
    ids = {}
    for k, n in enumerate(nodes):
        if n.node_id in ids:
            ctx.fail(("nodes", k, "id"), f"duplicate node id {n.node_id!r}")
        ids[n.node_id] = k
        if n.trace is not None and n.trace not in traces:
            ctx.fail(("nodes", k, "trace"), f"unknown trace {n.trace!r}")

    if not isinstance(data["links"], list):
        ctx.fail(("links",), "expected a list of [child, parent] pairs")
    links = []
    for k, link in enumerate(data["links"]):
        lp = ("links", k)
        if (not isinstance(link, list) or len(link) != 2
                or not all(isinstance(x, str) for x in link)):
            ctx.fail(lp, "expected [child, parent]")
        for j, node_id in enumerate(link):
            if node_id not in ids:
                ctx.fail(lp + (j,), f"unknown node {node_id!r}")
        links.append((link[0], link[1]))
    for key in ("source", "destination"):
        if getattr(probe, key) not in ids:
            ctx.fail(pp + (key,), f"unknown node {getattr(probe, key)!r}")

    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        ctx.fail(("seed",), "expected a non-negative integer")
    duration = data.get("duration")
    if duration is not None:
        duration = _num(ctx, data, (), "duration")
        if duration < 0:
            ctx.fail(("duration",), "must be >= 0")

    analysis = dict(_obj(ctx, data.get("analysis", {}), ("analysis",), optional=_ANALYSIS_KEYS))
    if "origin" in analysis:
        analysis["origin"] = _pair(ctx, analysis["origin"], ("analysis", "origin"))
    for key in ("tile_width", "tile_height"):
        if key in analysis:
            analysis[key] = _num(ctx, analysis, ("analysis",), key)
    if analysis.get("road_axis", "x") not in ("x", "y"):
        ctx.fail(("analysis", "road_axis"), "must be 'x' or 'y'")

    config = engine.ScenarioConfig(name=name, nodes=nodes, links=links, latency=latency,
                                   probe=probe, channel=channel, attach=attach, traces=traces,
                                   seed=seed, duration=duration, analysis=analysis)
    for n in nodes:
        if n.is_cell and n.served_allocation is None:
            ctx.fail(("nodes", ids[n.node_id]), f"cell node {n.node_id!r} has no allocation")
    if validate_plan:
        conflicts = cellnet.validate_frequency_plan(nodes, links)
        if conflicts:
            ctx.fail(("nodes",), "; ".join(str(c) for c in conflicts))
    try:
        topo = cellnet.build_topology(nodes, links)
        overlay.assign_addresses(nodes)
        overlay.route(probe.source, probe.destination, topo)
    except (RelayCellError, ValueError) as exc:
        ctx.fail(("links",), str(exc))
    if not traces and duration is None:
        ctx.fail(("duration",), "static scenario needs an explicit duration")
    return config


def resolve(name_or_path) -> Path:
    """Path of a scenario file; bare bundled names resolve to package data."""
    p = Path(name_or_path)
    if p.exists() or str(name_or_path) not in BUNDLED:
        return p
    return Path(str(resources.files("relaycell") / "scenarios" / f"{name_or_path}.json"))


def load_scenario(name_or_path, validate_plan: bool = True) -> engine.ScenarioConfig:
    path = resolve(name_or_path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", source=str(path)) from None
    return parse_scenario(text, str(path), validate_plan)


def load_bundled(name: str) -> engine.ScenarioConfig:
    if name not in BUNDLED:
        raise InvalidConfig(f"no bundled scenario {name!r}; choose from {', '.join(BUNDLED)}")
    return load_scenario(name)


def raw_bundled(name: str) -> dict[str, Any]:
    return json.loads(resolve(name).read_text())
