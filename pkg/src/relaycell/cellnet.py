"""Nodes, the cell forest, outband frequency planning and attachment."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import rfmodel
from .errors import (InvalidArgument, InvalidConfig, InvalidRole, MultiAttach,
                     NoCoverage, TopologyCycle)
from .rfmodel import GroundParameters, RadioConfig

CLIENT = "client"
CELL = "cell"
ROLES = frozenset({CLIENT, CELL})

ATTACHED = "attached"
DETACHED = "detached"


def _overlap(a, b):
    lo, hi = max(a[0], b[0]), min(a[1], b[1])
    return (lo, hi) if hi > lo else None


@dataclass(frozen=True)
class FrequencyAllocation:
    uplink: tuple[float, float]  # Hz
    downlink: tuple[float, float]  # Hz
    duplex_mode: str = "FDD"

    def __post_init__(self):
        if self.duplex_mode != "FDD":
            raise InvalidConfig(f"unsupported duplex mode {self.duplex_mode!r}")
        for name, (lo, hi) in (("uplink", self.uplink), ("downlink", self.downlink)):
            if not lo < hi:
                raise InvalidConfig(f"{name} band must have low < high")
        if _overlap(self.uplink, self.downlink) is not None:
            raise InvalidConfig("uplink and downlink bands overlap")
        if not np.isclose(self.uplink[1] - self.uplink[0], self.downlink[1] - self.downlink[0]):
            raise InvalidConfig("uplink and downlink bandwidths differ")

    @property
    def bandwidth(self) -> float:
        return self.uplink[1] - self.uplink[0]

    @property
    def downlink_center(self) -> float:
        return 0.5 * (self.downlink[0] + self.downlink[1])

    def bands(self):
        return (("uplink", self.uplink), ("downlink", self.downlink))


def mhz_allocation(ul_lo, ul_hi, dl_lo, dl_hi) -> FrequencyAllocation:
    return FrequencyAllocation((ul_lo * 1e6, ul_hi * 1e6), (dl_lo * 1e6, dl_hi * 1e6))


# Field and lab plan used throughout the bundled scenarios.
STATIONARY_ALLOCATION = mhz_allocation(5855, 5860, 5895, 5900)
MOBILE_ALLOCATION = mhz_allocation(5865, 5870, 5905, 5910)


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    mmsi: int
    roles: frozenset
    radio: RadioConfig
    served_allocation: Optional[FrequencyAllocation] = None
    position: Optional[tuple[float, float]] = None
    trace: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "roles", frozenset(self.roles))
        if not self.roles or not self.roles <= ROLES:
            raise InvalidRole(f"{self.node_id}: roles must be a non-empty subset of {sorted(ROLES)}")
        if not (isinstance(self.mmsi, int) and 0 <= self.mmsi < 10**9):
            raise InvalidConfig(f"{self.node_id}: MMSI must be a 9-digit identity")
        if self.served_allocation is not None and CELL not in self.roles:
            raise InvalidConfig(f"{self.node_id}: only cell nodes serve an allocation")
        if (self.position is None) == (self.trace is None):
            raise InvalidConfig(f"{self.node_id}: exactly one of position/trace is required")

    @property
    def is_cell(self) -> bool:
        return CELL in self.roles

    @property
    def is_client(self) -> bool:
        return CLIENT in self.roles

    @property
    def is_relay(self) -> bool:
        return self.roles == ROLES


@dataclass(frozen=True)
class Conflict:
    kind: str  # "uplink", "downlink" or "outband"
    nodes: tuple[str, str]
    overlap: tuple[float, float]

    def __str__(self):
        lo, hi = self.overlap
        return (f"{self.kind} conflict between {self.nodes[0]} and {self.nodes[1]}: "
                f"{lo / 1e6:g}-{hi / 1e6:g} MHz")


def validate_frequency_plan(nodes: Iterable[NodeSpec],
                            parent_links: Iterable[tuple[str, str]] = ()) -> list[Conflict]:
    """Return every overlap in the plan; an empty list means the plan is clean.

    Touching band edges do not count. Besides same-direction overlaps
    between any two cells, a relay whose served bands overlap any band of
    its parent's cell breaks the outband assumption and is reported too.
    """
    nodes = list(nodes)
    cells = [n for n in nodes if n.is_cell]
    for n in cells:
        if n.served_allocation is None:
            raise InvalidConfig(f"cell node {n.node_id} has no frequency allocation")
    conflicts = []
    for i, a in enumerate(cells):
        for b in cells[i + 1:]:
            for (kind, band_a), (_, band_b) in zip(a.served_allocation.bands(),
                                                   b.served_allocation.bands()):
                ov = _overlap(band_a, band_b)
                if ov is not None:
                    conflicts.append(Conflict(kind, (a.node_id, b.node_id), ov))
    by_id = {n.node_id: n for n in nodes}
    for child_id, parent_id in parent_links:
        child, parent = by_id.get(child_id), by_id.get(parent_id)
        if child is None or parent is None or not child.is_cell or not parent.is_cell:
            continue
        for _, own in child.served_allocation.bands():
            for _, upstream in parent.served_allocation.bands():
                ov = _overlap(own, upstream)
                if ov is not None:
                    conflicts.append(Conflict("outband", (child_id, parent_id), ov))
    return conflicts


@dataclass
class Topology:
    """Forest of client -> parent-cell links; one writer at a time."""

    nodes: dict[str, NodeSpec]
    parent_of: dict[str, Optional[str]] = field(default_factory=dict)
    attach: dict[str, str] = field(default_factory=dict)

    def children(self, node_id: str) -> list[str]:
        return sorted(c for c, p in self.parent_of.items() if p == node_id)

    def path_to_root(self, node_id: str) -> list[str]:
        path = [node_id]
        while self.parent_of.get(path[-1]) is not None:
            path.append(self.parent_of[path[-1]])
        return path

    def root(self, node_id: str) -> str:
        return self.path_to_root(node_id)[-1]

    def depth(self, node_id: str) -> int:
        return len(self.path_to_root(node_id)) - 1

    def links(self) -> list[tuple[str, str]]:
        return sorted((c, p) for c, p in self.parent_of.items() if p is not None)

    def add_link(self, child: str, parent: str) -> None:
        if child not in self.nodes or parent not in self.nodes:
            missing = child if child not in self.nodes else parent
            raise InvalidConfig(f"unknown node {missing!r}")
        if not self.nodes[parent].is_cell:
            raise InvalidRole(f"parent {parent!r} has no cell role")
        if not self.nodes[child].is_client:
            raise InvalidRole(f"child {child!r} has no client role")
        if self.parent_of.get(child) is not None:
            raise MultiAttach(f"{child!r} already attached to {self.parent_of[child]!r}")
        if child == parent or child in self.path_to_root(parent):
            raise TopologyCycle(f"linking {child!r} -> {parent!r} closes a cycle")
        self.parent_of[child] = parent
        self.attach[child] = DETACHED


def build_topology(nodes: Iterable[NodeSpec],
                   parent_links: Iterable[tuple[str, str]]) -> Topology:
    nodes = list(nodes)
    by_id = {}
    for n in nodes:
        if n.node_id in by_id:
            raise InvalidConfig(f"duplicate node id {n.node_id!r}")
        by_id[n.node_id] = n
    topo = Topology(nodes=by_id, parent_of={n: None for n in by_id})
    for child, parent in parent_links:
        topo.add_link(child, parent)
    return topo


def attach_state(rsrp: float, current: str, threshold: float, hysteresis: float) -> str:
    """Threshold-with-hysteresis attachment; holds state inside the band."""
    if hysteresis < 0:
        raise InvalidArgument("hysteresis must be >= 0")
    if current == DETACHED and rsrp >= threshold + hysteresis:
        return ATTACHED
    if current == ATTACHED and rsrp < threshold - hysteresis:
        return DETACHED
    return current


def coverage_radius(cell: NodeSpec, ground: GroundParameters, threshold: float,
                    rx: Optional[RadioConfig] = None, excess_loss_db_per_m: float = 0.0,
                    radio: Optional[RadioConfig] = None) -> float:
    """Outermost distance at which the cell's RSRP still meets ``threshold``.

    Interior fade nulls do not end the radius: the distance returned is the
    last threshold crossing, located on a 1 m grid and refined by bisection.
    ``rx`` defaults to a receiver identical to the cell's own radio;
    ``radio`` overrides the cell's transmit configuration.
    """
    if not cell.is_cell:
        raise InvalidRole(f"{cell.node_id!r} has no cell role")
    tx = radio or cell.radio
    rx = rx or tx

    def rsrp(d):
        return rfmodel.link_rsrp(tx, rx, d, ground, excess_loss_db_per_m)

    d_min = rfmodel.MIN_DISTANCE
    d_max = max(1000.0, 20.0 * rfmodel.fade_null_estimate(
        tx.antenna_height, rx.antenna_height, tx.carrier_frequency))
    while rsrp(d_max) >= threshold:
        d_max *= 2.0
        if d_max > 1e8:
            raise InvalidArgument("coverage does not terminate")
    grid = np.arange(d_min, d_max + 1.0, 1.0)
    covered = np.nonzero(rsrp(grid) >= threshold)[0]
    if covered.size == 0:
        raise NoCoverage(f"{cell.node_id!r} never reaches {threshold} dBm")
    lo = grid[covered[-1]]
    hi = lo + 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if rsrp(mid) >= threshold:
            lo = mid
        else:
            hi = mid
    return float(lo)
