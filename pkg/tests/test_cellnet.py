import numpy as np
import pytest
from dataclasses import replace
from hypothesis import given, settings
from hypothesis import strategies as st

from relaycell import cellnet, rfmodel
from relaycell.cellnet import (ATTACHED, DETACHED, MOBILE_ALLOCATION, STATIONARY_ALLOCATION,
                               NodeSpec, mhz_allocation)
from relaycell.errors import (InvalidConfig, InvalidRole, MultiAttach, NoCoverage,
                              TopologyCycle)
from relaycell.rfmodel import RadioConfig

RADIO = RadioConfig(5.8975e9, 5e6, 20.0, 2.0)


def cell(node_id, alloc, roles=("cell",), mmsi=None):
    return NodeSpec(node_id, mmsi or abs(hash(node_id)) % 10**9, set(roles), RADIO, alloc,
                    position=(0.0, 0.0))


def client(node_id, mmsi=None):
    return NodeSpec(node_id, mmsi or abs(hash(node_id)) % 10**9, {"client"}, RADIO,
                    position=(0.0, 0.0))


def test_table_plan_is_clean():
    nodes = [cell("stationary", STATIONARY_ALLOCATION),
             cell("mobile", MOBILE_ALLOCATION, ("cell", "client")), client("ue")]
    assert cellnet.validate_frequency_plan(nodes, [("mobile", "stationary")]) == []
    assert STATIONARY_ALLOCATION.bandwidth == pytest.approx(5e6)
    assert MOBILE_ALLOCATION.downlink_center == pytest.approx(5907.5e6)


def test_identical_uplinks_conflict():
    a = cell("a", mhz_allocation(5855, 5860, 5895, 5900))
    b = cell("b", mhz_allocation(5855, 5860, 5905, 5910))
    conflicts = cellnet.validate_frequency_plan([a, b])
    assert len(conflicts) == 1
    assert conflicts[0].kind == "uplink"
    assert conflicts[0].overlap == (5855e6, 5860e6)


def test_touching_bands_are_fine():
    a = cell("a", mhz_allocation(5855, 5860, 5895, 5900))
    b = cell("b", mhz_allocation(5860, 5865, 5900, 5905))
    assert cellnet.validate_frequency_plan([a, b]) == []


def test_relay_overlapping_parent_breaks_outband():
    # Relay downlink sits on the parent's uplink: no same-direction clash,
    # but the relay would transmit into its own backhaul band.
    parent = cell("p", mhz_allocation(5855, 5860, 5895, 5900))
    relay = cell("r", mhz_allocation(5870, 5875, 5857, 5862), ("cell", "client"))
    conflicts = cellnet.validate_frequency_plan([parent, relay], [("r", "p")])
    assert [c.kind for c in conflicts] == ["outband"]


def test_cell_without_allocation():
    bare = NodeSpec("c", 5, {"cell"}, RADIO, position=(0, 0))
    with pytest.raises(InvalidConfig):
        cellnet.validate_frequency_plan([bare])


@pytest.mark.parametrize("ul, dl", [((5860, 5855), (5895, 5900)),
                                    ((5855, 5860), (5857, 5862)),
                                    ((5855, 5860), (5895, 5905))])
def test_allocation_invariants(ul, dl):
    with pytest.raises(InvalidConfig):
        mhz_allocation(*ul, *dl)




@st.composite
def allocations(draw):
    w = draw(st.integers(1, 10))
    ul = draw(st.integers(5800, 5950))
    dl = draw(st.integers(5800, 5950).filter(lambda x: x >= ul + w or x + w <= ul))
    return mhz_allocation(ul, ul + w, dl, dl + w)


def _interval_overlap(a, b):
    return min(a[1], b[1]) > max(a[0], b[0])


@given(allocations(), allocations())
def test_validator_symmetric_and_matches_oracle(fa, fb):
    a, b = cell("a", fa), cell("b", fb)
    ab = cellnet.validate_frequency_plan([a, b])
    ba = cellnet.validate_frequency_plan([b, a])
    assert sorted(c.kind for c in ab) == sorted(c.kind for c in ba)
    expected = [k for k, x, y in (("uplink", fa.uplink, fb.uplink),
                                  ("downlink", fa.downlink, fb.downlink))
                if _interval_overlap(x, y)]
    assert sorted(c.kind for c in ab) == sorted(expected)


@given(st.integers(-5, 5), st.sampled_from(["uplink", "downlink"]))
def test_mutated_plan_rejected(shift, which):
    # Slide the mobile band onto the stationary one; any shift that
    # leaves a positive overlap must be reported.
    s, m = STATIONARY_ALLOCATION, MOBILE_ALLOCATION
    lo = (s.uplink if which == "uplink" else s.downlink)[0] / 1e6 + shift
    if which == "uplink":
        moved = mhz_allocation(lo, lo + 5, m.downlink[0] / 1e6, m.downlink[1] / 1e6)
    else:
        moved = mhz_allocation(m.uplink[0] / 1e6, m.uplink[1] / 1e6, lo, lo + 5)
    conflicts = cellnet.validate_frequency_plan(
        [cell("stationary", s), cell("mobile", moved, ("cell", "client"))])
    assert (len(conflicts) > 0) == (abs(shift) < 5)


def test_two_hop_chain():
    nodes = [cell("stationary", STATIONARY_ALLOCATION),
             cell("mobile", MOBILE_ALLOCATION, ("cell", "client")), client("ue")]
    topo = cellnet.build_topology(nodes, [("ue", "mobile"), ("mobile", "stationary")])
    assert topo.path_to_root("ue") == ["ue", "mobile", "stationary"]
    assert topo.depth("ue") == 2
    assert nodes[1].is_relay and not nodes[2].is_cell


def test_smallest_cycle():
    a = cell("a", None, ("cell", "client"))
    b = cell("b", None, ("cell", "client"))
    with pytest.raises(TopologyCycle):
        cellnet.build_topology([a, b], [("a", "b"), ("b", "a")])


def test_three_hop_chain():
    nodes = [cell(f"n{i}", None, ("cell", "client")) for i in range(4)]
    topo = cellnet.build_topology(nodes, [("n0", "n1"), ("n1", "n2"), ("n2", "n3")])
    assert topo.depth("n0") == 3


def test_role_and_multi_attach_errors():
    s = cell("s", STATIONARY_ALLOCATION)
    t = cell("t", MOBILE_ALLOCATION)
    u = client("u")
    with pytest.raises(InvalidRole):
        cellnet.build_topology([s, u], [("s", "u")])
    with pytest.raises(MultiAttach):
        cellnet.build_topology([s, t, u], [("u", "s"), ("u", "t")])
    with pytest.raises(InvalidRole):
        NodeSpec("x", 1, set(), RADIO, position=(0, 0))
    with pytest.raises(InvalidRole):
        NodeSpec("x", 1, {"router"}, RADIO, position=(0, 0))


class UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, x):
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[ra] = rb
        return True


@settings(max_examples=200)
@given(st.integers(2, 12).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1),
                                                       st.integers(0, n - 1)), max_size=20))))
def test_forest_against_union_find(case):
    n, links = case
    nodes = [cell(f"n{i}", None, ("cell", "client"), mmsi=i + 1) for i in range(n)]
    topo = cellnet.build_topology(nodes, [])
    uf = UnionFind(range(n))
    for a, b in links:
        child, parent = f"n{a}", f"n{b}"
        if topo.parent_of[child] is not None:
            with pytest.raises(MultiAttach):
                topo.add_link(child, parent)
            continue
        if not uf.union(a, b):
            with pytest.raises(TopologyCycle):
                topo.add_link(child, parent)
            continue
        topo.add_link(child, parent)
        # Forest invariant: every walk to the root terminates.
        for i in range(n):
            assert len(topo.path_to_root(f"n{i}")) <= n


def test_attach_examples():
    assert cellnet.attach_state(-100, DETACHED, -110, 3) == ATTACHED
    assert cellnet.attach_state(-112, ATTACHED, -110, 3) == ATTACHED
    assert cellnet.attach_state(-112, DETACHED, -110, 3) == DETACHED
    assert cellnet.attach_state(-114, ATTACHED, -110, 3) == DETACHED


def test_attach_sweep_no_chatter():
    grid = np.concatenate([np.arange(-90, -130, -0.1), np.arange(-130, -90, 0.1)])
    state, transitions = DETACHED, 0
    for r in grid:
        new = cellnet.attach_state(r, state, -110, 3)
        transitions += new != state
        state = new
    assert transitions <= 3  # attach, detach, re-attach
    wiggle = -110 + 2.9 * np.sin(np.linspace(0, 40, 2000))
    state, transitions = ATTACHED, 0
    for r in wiggle:
        new = cellnet.attach_state(r, state, -110, 3)
        transitions += new != state
        state = new
    assert transitions == 0


@given(st.floats(-150, -60), st.floats(-150, -60), st.sampled_from([ATTACHED, DETACHED]))
def test_attach_monotone(r1, r2, prior):
    lo, hi = sorted((r1, r2))
    rank = {DETACHED: 0, ATTACHED: 1}
    assert rank[cellnet.attach_state(lo, prior, -110, 3)] <= rank[
        cellnet.attach_state(hi, prior, -110, 3)]


def _station(p):
    return NodeSpec("s", 1, {"cell"}, replace(RADIO, tx_power=p), STATIONARY_ALLOCATION,
                    position=(0, 0))


RX = RadioConfig(5.8975e9, 5e6, 0.0, 1.65)


def test_coverage_radius_skips_interior_null():
    # Pure two-ray at a power whose curve dips below threshold near the null
    # but recovers afterwards: the radius is the outer crossing.
    p = -110 - rfmodel.link_rsrp(replace(RADIO, tx_power=0.0), RX, 250.0, rfmodel.WET_GROUND)
    r = cellnet.coverage_radius(_station(p), rfmodel.WET_GROUND, -110, RX)
    assert r == pytest.approx(250.0, abs=1e-6)
    d = np.arange(100, 200, 0.1)
    assert np.any(rfmodel.link_rsrp(_station(p).radio, RX, d, rfmodel.WET_GROUND) < -110)


def test_no_coverage():
    with pytest.raises(NoCoverage):
        cellnet.coverage_radius(_station(-200.0), rfmodel.WET_GROUND, -110, RX)


def test_twelve_db_doubles_radius():
    base = 60.0
    r1 = cellnet.coverage_radius(_station(base), rfmodel.WET_GROUND, -110, RX)
    r2 = cellnet.coverage_radius(_station(base + 12), rfmodel.WET_GROUND, -110, RX)
    assert r1 > 10 * rfmodel.fade_null_estimate(2.0, 1.65, 5.8975e9)
    assert 1.8 <= r2 / r1 <= 2.2


@settings(max_examples=25, deadline=None)
@given(st.floats(-20, 40), st.floats(0, 10), st.floats(-120, -90), st.floats(0, 10))
def test_radius_monotone(p, dp, thr, dthr):
    g = rfmodel.WET_GROUND
    try:
        r = cellnet.coverage_radius(_station(p), g, thr, RX, 0.1)
    except NoCoverage:
        return
    assert cellnet.coverage_radius(_station(p + dp), g, thr, RX, 0.1) >= r - 1e-9
    try:
        assert cellnet.coverage_radius(_station(p), g, thr + dthr, RX, 0.1) <= r + 1e-9
    except NoCoverage:
        pass
