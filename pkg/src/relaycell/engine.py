"""Deterministic drive-test simulation.

One run walks the probe clock at a fixed interval: positions are advanced
along the node traces, every client link gets an RSRP from the channel
model, attachment is updated with hysteresis, and an ICMP-style probe is
timed over the overlay route whenever the whole path is up.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Sequence

import numpy as np

from . import cellnet, overlay, rfmodel
from .cellnet import ATTACHED, DETACHED, NodeSpec
from .errors import InvalidArgument, InvalidConfig
from .overlay import EncapsulationWalk
from .rfmodel import GroundParameters

UNRELIABLE = "unreliable"


# -- mobility ---------------------------------------------------------------

@dataclass(frozen=True)
class MobilityTrace:
    waypoints: tuple[tuple[float, float], ...]
    speed: float
    sampling_interval: float = 0.1
    trace_id: int = 0

    def __post_init__(self):
        wps = tuple((float(x), float(y)) for x, y in self.waypoints)
        object.__setattr__(self, "waypoints", wps)
        if self.speed <= 0:
            raise InvalidArgument("speed must be > 0")
        if len(wps) < 2:
            raise InvalidArgument("a trace needs at least two waypoints")
        if any(a == b for a, b in zip(wps, wps[1:])):
            raise InvalidArgument("consecutive waypoints must differ")
        seg = np.hypot(*np.diff(np.array(wps), axis=0).T)
        object.__setattr__(self, "_arc", np.concatenate([[0.0], np.cumsum(seg)]))

    @property
    def length(self) -> float:
        return float(self._arc[-1])

    @property
    def duration(self) -> float:
        return self.length / self.speed

    def positions(self, times) -> np.ndarray:
        """Vectorised arc-length interpolation, shape (n, 2)."""
        s = np.clip(np.asarray(times, dtype=float) * self.speed, 0.0, self.length)
        pts = np.array(self.waypoints)
        return np.column_stack([np.interp(s, self._arc, pts[:, 0]),
                                np.interp(s, self._arc, pts[:, 1])])


def step_mobility(trace: MobilityTrace, time: float) -> tuple[float, float]:
    if not 0 <= time <= trace.duration + 1e-12:
        raise InvalidArgument(f"time {time} outside [0, {trace.duration}]")
    x, y = trace.positions([time])[0]
    return float(x), float(y)


def _dedupe(points):
    out = [points[0]]
    for p in points[1:]:
        if p != out[-1]:
            out.append(p)
    return out


def generate_lane_trajectories(road_length: float, lane_count: int, lane_spacing: float,
                               speed: float, sampling_interval: float = 0.1,
                               origin: tuple[float, float] = (0.0, 0.0),
                               turn_depth: Optional[float] = None) -> list[MobilityTrace]:
    """Drive every lane once in each direction along the +x road axis.

    Lanes are centred on ``origin[1]``. The first pass sweeps lanes
    0..n-1 alternating direction, the second pass comes back n-1..0 in the
    opposite directions. Each trace ends with a rectangular U-turn stub
    (``turn_depth`` beyond the road end, default half a lane spacing)
    leading to the start of the next trace.
    """
    if lane_count < 1:
        raise InvalidArgument("lane_count must be >= 1")
    if min(road_length, lane_spacing, speed) <= 0:
        raise InvalidArgument("road_length, lane_spacing and speed must be > 0")
    x0, yc = origin
    depth = lane_spacing / 2 if turn_depth is None else turn_depth
    ys = [yc + (i - (lane_count - 1) / 2) * lane_spacing for i in range(lane_count)]
    order = [(i, i % 2 == 0) for i in range(lane_count)]
    order += [(i, not fwd) for i, fwd in reversed(order)]
    legs = []
    for lane, forward in order:
        a, b = (x0, x0 + road_length) if forward else (x0 + road_length, x0)
        legs.append(((a, ys[lane]), (b, ys[lane]), forward))
    traces = []
    for k, (start, end, forward) in enumerate(legs):
        pts = [start, end]
        if k + 1 < len(legs):
            nxt = legs[k + 1][0]
            out = end[0] + (depth if forward else -depth)
            pts += [(out, end[1]), (out, nxt[1]), nxt]
        traces.append(MobilityTrace(tuple(_dedupe(pts)), speed, sampling_interval, k))
    return traces


class Drive:
    """A sequence of traces driven back to back; holds the last point afterwards."""

    def __init__(self, traces: Sequence[MobilityTrace]):
        if not traces:
            raise InvalidArgument("a drive needs at least one trace")
        self.traces = list(traces)
        self.starts = np.concatenate([[0.0], np.cumsum([t.duration for t in traces])])

    @property
    def duration(self) -> float:
        return float(self.starts[-1])

    def locate(self, times) -> tuple[np.ndarray, np.ndarray]:
        times = np.asarray(times, dtype=float)
        idx = np.clip(np.searchsorted(self.starts, times, side="right") - 1,
                      0, len(self.traces) - 1)
        pos = np.empty((times.size, 2))
        for k, trace in enumerate(self.traces):
            sel = idx == k
            if sel.any():
                pos[sel] = trace.positions(times[sel] - self.starts[k])
        return pos, idx


# -- latency ----------------------------------------------------------------

@dataclass(frozen=True)
class Jitter:
    """Per-hop jitter: a log-normal draw re-centred to zero mean."""

    family: str = "none"  # "none" or "lognormal"
    mu: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        if self.family not in ("none", "lognormal"):
            raise InvalidArgument(f"unknown jitter family {self.family!r}")
        if self.sigma < 0:
            raise InvalidArgument("jitter sigma must be >= 0")

    @property
    def offset(self) -> float:
        if self.family == "none":
            return 0.0
        return math.exp(self.mu + 0.5 * self.sigma ** 2)

    def draw(self, rng: np.random.Generator, size=None):
        if self.family == "none" or self.sigma == 0:
            return np.zeros(size) if size is not None else 0.0
        return rng.lognormal(self.mu, self.sigma, size) - self.offset


@dataclass(frozen=True)
class LinkPenalty:
    """Extra one-way delay per dB of RSRP below ``reference``."""

    rate: float = 0.0  # ms/dB
    reference: float = -90.0  # dBm

    def __post_init__(self):
        if self.rate < 0:
            raise InvalidArgument("penalty rate must be >= 0")

    def deficit(self, rsrp):
        return np.maximum(0.0, self.reference - np.asarray(rsrp, dtype=float))

    def __call__(self, rsrp):
        return self.rate * self.deficit(rsrp)


@dataclass(frozen=True)
class LatencyModel:
    per_hop_mean: float  # ms, one way
    host_processing: float  # ms per host on the route
    jitter: Jitter = field(default_factory=Jitter)
    penalty: LinkPenalty = field(default_factory=LinkPenalty)

    def __post_init__(self):
        if self.per_hop_mean < 0 or self.host_processing < 0:
            raise InvalidArgument("delay terms must be >= 0")
        if self.jitter.offset > self.per_hop_mean + 1e-12:
            raise InvalidArgument("jitter could drive the per-hop delay below zero")


def sample_rtt(walk: EncapsulationWalk, rsrp_per_hop: Sequence[float], model: LatencyModel,
               rng: np.random.Generator) -> float:
    """Round-trip time in ms of one probe over ``walk``.

    The one-way delay sums per-hop mean, jitter and RSRP penalty, plus the
    host term for every host on the route; the RTT is twice that.
    """
    hops = walk.lte_hop_count
    if len(rsrp_per_hop) != hops:
        raise InvalidArgument(f"expected {hops} RSRP values, got {len(rsrp_per_hop)}")
    one_way = model.host_processing * walk.hosts_traversed
    if hops:
        jitter = model.jitter.draw(rng, hops)
        penalty = model.penalty(rsrp_per_hop)
        one_way += float(np.sum(model.per_hop_mean + jitter + penalty))
    return 2.0 * one_way


# -- scenario ---------------------------------------------------------------

@dataclass(frozen=True)
class Channel:
    model: str = "two_ray"  # "two_ray" or "cable"
    ground: GroundParameters = rfmodel.WET_GROUND
    excess_loss_db_per_m: float = 0.0
    shadowing_sigma_db: float = 0.0
    cable_loss_db: float = 30.0

    def __post_init__(self):
        if self.model not in ("two_ray", "cable"):
            raise InvalidArgument(f"unknown channel model {self.model!r}")
        if self.shadowing_sigma_db < 0 or self.excess_loss_db_per_m < 0:
            raise InvalidArgument("shadowing sigma and excess loss must be >= 0")

    def rsrp(self, tx: rfmodel.RadioConfig, rx: rfmodel.RadioConfig, distance):
        if self.model == "cable":
            rx_power = tx.eirp + rx.antenna_gain_rx - self.cable_loss_db
            rx_power = np.full(np.shape(distance), rx_power)
            return rfmodel.rsrp_from_rx_power(rx_power, tx.bandwidth)
        d = np.maximum(np.asarray(distance, dtype=float), rfmodel.MIN_DISTANCE)
        return rfmodel.link_rsrp(tx, rx, d, self.ground, self.excess_loss_db_per_m)


@dataclass(frozen=True)
class AttachPolicy:
    threshold: float = -110.0  # dBm
    hysteresis: float = 3.0  # dB
    unreliable_margin: float = 6.0  # dB above the detach level

    def link_state(self, rsrp: float, attached: str) -> str:
        if attached != ATTACHED:
            return DETACHED
        if rsrp < self.threshold - self.hysteresis + self.unreliable_margin:
            return UNRELIABLE
        return ATTACHED


@dataclass(frozen=True)
class Probe:
    source: str
    destination: str
    interval: float = 0.1  # s

    def __post_init__(self):
        if self.interval <= 0:
            raise InvalidArgument("probe interval must be > 0")


@dataclass
class ScenarioConfig:
    name: str
    nodes: list[NodeSpec]
    links: list[tuple[str, str]]
    latency: LatencyModel
    probe: Probe
    channel: Channel = field(default_factory=Channel)
    attach: AttachPolicy = field(default_factory=AttachPolicy)
    traces: dict[str, list[MobilityTrace]] = field(default_factory=dict)
    seed: int = 0
    duration: Optional[float] = None  # None: until the longest drive ends
    analysis: dict = field(default_factory=dict)

    def node(self, node_id: str) -> NodeSpec:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise InvalidConfig(f"unknown node {node_id!r}")

    def validate(self):
        """Check plan, topology and addressing; returns the topology."""
        conflicts = cellnet.validate_frequency_plan(self.nodes, self.links)
        if conflicts:
            raise InvalidConfig("; ".join(str(c) for c in conflicts))
        topo = cellnet.build_topology(self.nodes, self.links)
        overlay.assign_addresses(self.nodes)
        for n in self.nodes:
            if n.trace is not None and n.trace not in self.traces:
                raise InvalidConfig(f"{n.node_id}: unknown trace {n.trace!r}")
        overlay.route(self.probe.source, self.probe.destination, topo)
        return topo

    def run_duration(self) -> float:
        if self.duration is not None:
            return self.duration
        drives = [Drive(self.traces[n.trace]).duration for n in self.nodes if n.trace]
        if not drives:
            raise InvalidConfig("static scenario needs an explicit duration")
        return max(drives)


@dataclass(frozen=True)
class SampleRecord:
    time: float
    position: tuple[float, float]
    serving_node: Optional[str]
    rsrp: Optional[float]
    rtt: Optional[float]
    one_way_latency: Optional[float]
    link_state: str
    hop_count: int
    trace: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "time": self.time,
            "position": list(self.position),
            "serving_node": self.serving_node,
            "rsrp": self.rsrp,
            "rtt": self.rtt,
            "one_way_latency": self.one_way_latency,
            "link_state": self.link_state,
            "hop_count": self.hop_count,
            "trace": self.trace,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleRecord":
        return cls(time=d["time"], position=tuple(d["position"]),
                   serving_node=d.get("serving_node"), rsrp=d.get("rsrp"),
                   rtt=d.get("rtt"), one_way_latency=d.get("one_way_latency"),
                   link_state=d["link_state"], hop_count=d["hop_count"],
                   trace=d.get("trace"))


def _node_tracks(config: ScenarioConfig, times: np.ndarray):
    tracks = {}
    for n in config.nodes:
        if n.trace is None:
            tracks[n.node_id] = (np.tile(np.asarray(n.position, dtype=float), (times.size, 1)),
                                 None)
        else:
            tracks[n.node_id] = Drive(config.traces[n.trace]).locate(times)
    return tracks


def link_radio(parent: NodeSpec) -> rfmodel.RadioConfig:
    """Parent's transmit radio tuned to the downlink it serves."""
    radio = parent.radio
    if parent.served_allocation is not None:
        radio = replace(radio, carrier_frequency=parent.served_allocation.downlink_center,
                        bandwidth=parent.served_allocation.bandwidth)
    return radio


def link_rsrp_series(config: ScenarioConfig, times: np.ndarray, tracks=None,
                     rng: Optional[np.random.Generator] = None) -> dict:
    """RSRP time series for every (child, parent) link, shadowing included."""
    tracks = tracks or _node_tracks(config, times)
    out = {}
    for child_id, parent_id in sorted(config.links):
        child, parent = config.node(child_id), config.node(parent_id)
        dist = np.hypot(*(tracks[child_id][0] - tracks[parent_id][0]).T)
        rsrp = np.asarray(config.channel.rsrp(link_radio(parent), child.radio, dist), dtype=float)
        if rng is not None:
            rsrp = rsrp + rfmodel.shadowing(rng, config.channel.shadowing_sigma_db, times.size)
        out[(child_id, parent_id)] = rsrp
    return out


def run_scenario(config: ScenarioConfig, seed: Optional[int] = None) -> Iterator[SampleRecord]:
    """Simulate ``config`` and yield one record per probe tick.

    Identical config and seed give identical records. Two independent
    random streams are spawned from the seed, one for shadowing and one
    for latency draws, so link activity cannot shift the channel noise.
    """
    topo = config.validate()
    seed = config.seed if seed is None else seed
    shadow_rng, latency_rng = (np.random.Generator(np.random.PCG64(s))
                               for s in np.random.SeedSequence(seed).spawn(2))
    n_ticks = int(math.floor(config.run_duration() / config.probe.interval + 1e-9))
    if n_ticks <= 0:
        return
    times = np.arange(n_ticks) * config.probe.interval
    tracks = _node_tracks(config, times)
    rsrp = link_rsrp_series(config, times, tracks, shadow_rng)

    src, dst = config.probe.source, config.probe.destination
    walk = overlay.encapsulation_walk(src, dst, topo)
    path = list(walk.path)
    hop_links = []
    for a, b in zip(path, path[1:]):
        hop_links.append((a, b) if topo.parent_of.get(a) == b else (b, a))
    serving_link = (src, topo.parent_of[src]) if topo.parent_of.get(src) else None
    src_pos, src_trace = tracks[src]
    policy = config.attach
    state = {link: DETACHED for link in rsrp}

    for k in range(n_ticks):
        for link in rsrp:
            state[link] = cellnet.attach_state(rsrp[link][k], state[link],
                                               policy.threshold, policy.hysteresis)
        hop_rsrp = [float(rsrp[link][k]) for link in hop_links]
        hop_states = [policy.link_state(r, state[link]) for r, link in zip(hop_rsrp, hop_links)]
        if DETACHED in hop_states:
            link_state = DETACHED
        elif UNRELIABLE in hop_states:
            link_state = UNRELIABLE
        else:
            link_state = ATTACHED
        rtt = one_way = None
        if link_state != DETACHED:
            rtt = sample_rtt(walk, hop_rsrp, config.latency, latency_rng)
            one_way = rtt / 2.0
        if serving_link is not None:
            own_rsrp = float(rsrp[serving_link][k])
            serving = serving_link[1] if state[serving_link] == ATTACHED else None
        else:
            own_rsrp, serving = None, None
        yield SampleRecord(
            time=float(times[k]),
            position=(float(src_pos[k, 0]), float(src_pos[k, 1])),
            serving_node=serving,
            rsrp=own_rsrp,
            rtt=rtt,
            one_way_latency=one_way,
            link_state=link_state,
            hop_count=walk.lte_hop_count,
            trace=None if src_trace is None else int(src_trace[k]),
        )
