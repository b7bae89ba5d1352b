"""Overlay addressing, tree routing and per-packet encapsulation walks.

GRE runs per LTE hop between the child host's ``access`` interface and the
parent host's SGi interface; inside it, GTP spans the UE-side access
interface and the EPC container across the air interface and S1.
"""
from __future__ import annotations

import ipaddress
from dataclasses import dataclass
from typing import Iterable, Optional

from .cellnet import NodeSpec, Topology
from .errors import AddressCollision, InvalidArgument, InvalidConfig, Unreachable

OVERLAY_BASE = ipaddress.IPv4Address("10.0.0.0")
HOST_BITS = 24

# Header sizes in bytes: outer IPv4 + GRE base header (no key/sequence),
# outer IPv4 + UDP + GTP-U without extension headers.
GRE_OVERHEAD = 20 + 4
GTP_OVERHEAD = 20 + 8 + 8
ICMP_ECHO_HEADERS = 20 + 8

SEGMENT_KINDS = ("app", "gre_tunnel", "sgi_segment", "gtp_tunnel", "s1_segment",
                 "air_interface", "access_interface")
TUNNEL_OVERHEAD = {"gre_tunnel": GRE_OVERHEAD, "gtp_tunnel": GTP_OVERHEAD}


def mmsi_to_ip(mmsi: int) -> ipaddress.IPv4Address:
    if not (isinstance(mmsi, int) and 0 <= mmsi < 10**9):
        raise InvalidArgument("MMSI must be an integer in [0, 1e9)")
    return OVERLAY_BASE + (mmsi % (1 << HOST_BITS))


def assign_addresses(nodes: Iterable[NodeSpec]) -> dict[str, ipaddress.IPv4Address]:
    """Overlay address per node; two nodes landing on one address is fatal."""
    taken: dict[ipaddress.IPv4Address, str] = {}
    out = {}
    for node in nodes:
        ip = mmsi_to_ip(node.mmsi)
        if ip in taken:
            raise AddressCollision(
                f"{node.node_id!r} (MMSI {node.mmsi}) and {taken[ip]!r} both map to {ip}")
        taken[ip] = node.node_id
        out[node.node_id] = ip
    return out


def route(src: str, dst: str, topology: Topology) -> list[str]:
    """Unique tree path src -> lowest common ancestor -> dst."""
    for n in (src, dst):
        if n not in topology.nodes:
            raise InvalidConfig(f"unknown node {n!r}")
    up = topology.path_to_root(src)
    down = topology.path_to_root(dst)
    if up[-1] != down[-1]:
        raise Unreachable(f"{src!r} and {dst!r} are in different trees")
    on_down = set(down)
    lca_index = next(i for i, n in enumerate(up) if n in on_down)
    lca = up[lca_index]
    tail = down[:down.index(lca)]
    return up[:lca_index + 1] + tail[::-1]


@dataclass(frozen=True)
class Segment:
    kind: str
    location: str
    header_overhead: int = 0
    endpoints: Optional[tuple[str, str]] = None

    def __post_init__(self):
        if self.kind not in SEGMENT_KINDS:
            raise InvalidArgument(f"unknown segment kind {self.kind!r}")
        if self.header_overhead < 0:
            raise InvalidArgument("header overhead must be >= 0")


@dataclass(frozen=True)
class EncapsulationWalk:
    segments: tuple[Segment, ...]
    path: tuple[str, ...]

    @property
    def total_overhead(self) -> int:
        return sum(s.header_overhead for s in self.segments)

    @property
    def lte_hop_count(self) -> int:
        return sum(1 for s in self.segments if s.kind == "air_interface")

    @property
    def hosts_traversed(self) -> int:
        return len(self.path)


def _uplink_hop(child: str, parent: str) -> list[Segment]:
    gre = (f"access@{child}", f"sgi@{parent}")
    gtp = (f"access@{child}", f"epc@{parent}")
    return [
        Segment("gre_tunnel", child, GRE_OVERHEAD, gre),
        Segment("access_interface", child),
        Segment("air_interface", f"{child}->{parent}"),
        Segment("s1_segment", parent),
        Segment("gtp_tunnel", parent, GTP_OVERHEAD, gtp),
        Segment("sgi_segment", parent),
    ]


def _downlink_hop(parent: str, child: str) -> list[Segment]:
    gre = (f"access@{child}", f"sgi@{parent}")
    gtp = (f"access@{child}", f"epc@{parent}")
    return [
        Segment("sgi_segment", parent),
        Segment("gtp_tunnel", parent, GTP_OVERHEAD, gtp),
        Segment("s1_segment", parent),
        Segment("air_interface", f"{parent}->{child}"),
        Segment("access_interface", child),
        Segment("gre_tunnel", child, GRE_OVERHEAD, gre),
    ]


def encapsulation_walk(src: str, dst: str, topology: Topology) -> EncapsulationWalk:
    path = route(src, dst, topology)
    if len(path) == 1:
        return EncapsulationWalk((Segment("app", src),), tuple(path))
    segments = [Segment("app", src)]
    for a, b in zip(path, path[1:]):
        if topology.parent_of.get(a) == b:
            segments += _uplink_hop(a, b)
        else:
            segments += _downlink_hop(a, b)
    segments.append(Segment("app", dst))
    return EncapsulationWalk(tuple(segments), tuple(path))


def payload_overhead(walk: EncapsulationWalk, payload: int,
                     inner_headers: int = ICMP_ECHO_HEADERS) -> list[tuple[Segment, int]]:
    """On-wire size of the packet on every segment of ``walk``.

    GRE is open from its entry segment until the SGi segment of the same
    hop, GTP from the child's air interface up to its EPC end.
    """
    if payload < 0:
        raise InvalidArgument("payload must be >= 0")
    base = payload + inner_headers
    sizes = []
    segs = walk.segments
    i = 0
    while i < len(segs):
        s = segs[i]
        if s.kind == "app":
            sizes.append((s, base))
            i += 1
            continue
        hop = segs[i:i + 6]
        uplink = hop[0].kind == "gre_tunnel"
        if uplink:
            layers = [GRE_OVERHEAD, GRE_OVERHEAD, GRE_OVERHEAD + GTP_OVERHEAD,
                      GRE_OVERHEAD + GTP_OVERHEAD, GRE_OVERHEAD + GTP_OVERHEAD, GRE_OVERHEAD]
        else:
            layers = [GRE_OVERHEAD, GRE_OVERHEAD + GTP_OVERHEAD, GRE_OVERHEAD + GTP_OVERHEAD,
                      GRE_OVERHEAD + GTP_OVERHEAD, GRE_OVERHEAD, GRE_OVERHEAD]
        sizes += [(seg, base + extra) for seg, extra in zip(hop, layers)]
        i += 6
    return sizes


def air_interface_sizes(walk: EncapsulationWalk, payload: int,
                        inner_headers: int = ICMP_ECHO_HEADERS) -> list[int]:
    return [size for seg, size in payload_overhead(walk, payload, inner_headers)
            if seg.kind == "air_interface"]


def format_walk(walk: EncapsulationWalk) -> str:
    rows = [("#", "kind", "location", "overhead [B]", "endpoints")]
    for i, s in enumerate(walk.segments):
        ends = " <-> ".join(s.endpoints) if s.endpoints else ""
        rows.append((str(i), s.kind, s.location, str(s.header_overhead), ends))
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    lines.append(f"route: {' -> '.join(walk.path)}")
    lines.append(f"LTE hops: {walk.lte_hop_count}  total overhead: {walk.total_overhead} B")
    return "\n".join(lines)
