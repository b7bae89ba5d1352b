import ipaddress
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relaycell import cellnet, overlay
from relaycell.cellnet import MOBILE_ALLOCATION, STATIONARY_ALLOCATION, NodeSpec
from relaycell.errors import AddressCollision, InvalidArgument, Unreachable
from relaycell.rfmodel import RadioConfig

RADIO = RadioConfig(5.9e9, 5e6, 0.0, 1.65)


def node(node_id, roles, mmsi, alloc=None):
    return NodeSpec(node_id, mmsi, set(roles), RADIO, alloc, position=(0.0, 0.0))


@pytest.fixture
def two_hop():
    nodes = [node("stationary", {"cell"}, 211000001, STATIONARY_ALLOCATION),
             node("mobile", {"cell", "client"}, 211000002, MOBILE_ALLOCATION),
             node("ue", {"client"}, 211000003)]
    return cellnet.build_topology(nodes, [("ue", "mobile"), ("mobile", "stationary")])


@pytest.fixture
def single_hop():
    nodes = [node("stationary", {"cell"}, 211000001, STATIONARY_ALLOCATION),
             node("ue", {"client"}, 211000003)]
    return cellnet.build_topology(nodes, [("ue", "stationary")])


def test_mmsi_mapping():
    assert overlay.mmsi_to_ip(0) == ipaddress.IPv4Address("10.0.0.0")
    assert overlay.mmsi_to_ip(1) != overlay.mmsi_to_ip(2)
    assert overlay.mmsi_to_ip(211000003) == ipaddress.IPv4Address("10.147.154.195")
    assert all(overlay.mmsi_to_ip(m) in ipaddress.ip_network("10.0.0.0/8")
               for m in (0, 1, 2**24 - 1, 999_999_999))
    for bad in (-1, 10**9, 1.5):
        with pytest.raises(InvalidArgument):
            overlay.mmsi_to_ip(bad)


def test_address_collision():
    m = 211000003
    clash = [node("a", {"client"}, m), node("b", {"client"}, m + 2**24)]
    with pytest.raises(AddressCollision):
        overlay.assign_addresses(clash)
    ok = overlay.assign_addresses([node("a", {"client"}, 1), node("b", {"client"}, 2)])
    assert len(set(ok.values())) == 2


def test_route_examples(two_hop):
    assert overlay.route("ue", "ue", two_hop) == ["ue"]
    assert overlay.route("ue", "stationary", two_hop) == ["ue", "mobile", "stationary"]
    assert overlay.route("stationary", "ue", two_hop) == ["stationary", "mobile", "ue"]


def test_unreachable():
    nodes = [node("a", {"cell"}, 1, STATIONARY_ALLOCATION),
             node("b", {"cell"}, 2, MOBILE_ALLOCATION), node("u", {"client"}, 3)]
    topo = cellnet.build_topology(nodes, [("u", "a")])
    with pytest.raises(Unreachable):
        overlay.route("u", "b", topo)


def _bfs(adj, src, dst):
    prev = {src: None}
    q = deque([src])
    while q:
        x = q.popleft()
        for y in adj[x]:
            if y not in prev:
                prev[y] = x
                q.append(y)
    if dst not in prev:
        return None
    path = [dst]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


@st.composite
def forests(draw):
    n = draw(st.integers(1, 50))
    # Parent index below the child's index guarantees a forest.
    parents = [None] + [draw(st.one_of(st.none(), st.integers(0, i - 1))) for i in range(1, n)]
    nodes = [node(f"n{i}", {"cell", "client"}, i + 1) for i in range(n)]
    links = [(f"n{i}", f"n{p}") for i, p in enumerate(parents) if p is not None]
    return cellnet.build_topology(nodes, links), links, n


@settings(max_examples=150, deadline=None)
@given(forests(), st.data())
def test_route_against_bfs(case, data):
    topo, links, n = case
    adj = {f"n{i}": [] for i in range(n)}
    for c, p in links:
        adj[c].append(p)
        adj[p].append(c)
    a = f"n{data.draw(st.integers(0, n - 1))}"
    b = f"n{data.draw(st.integers(0, n - 1))}"
    expected = _bfs(adj, a, b)
    if expected is None:
        with pytest.raises(Unreachable):
            overlay.route(a, b, topo)
        return
    path = overlay.route(a, b, topo)
    assert path == expected
    assert overlay.route(b, a, topo) == path[::-1]
    walk = overlay.encapsulation_walk(a, b, topo)
    assert walk.lte_hop_count == len(path) - 1
    assert walk.total_overhead == sum(s.header_overhead for s in walk.segments)
    assert walk.total_overhead == (len(path) - 1) * (overlay.GRE_OVERHEAD + overlay.GTP_OVERHEAD)


def test_single_hop_walk(single_hop):
    walk = overlay.encapsulation_walk("ue", "stationary", single_hop)
    kinds = [s.kind for s in walk.segments]
    assert walk.lte_hop_count == 1
    assert kinds.count("gtp_tunnel") == 1 and kinds.count("gre_tunnel") == 1
    assert kinds == ["app", "gre_tunnel", "access_interface", "air_interface", "s1_segment",
                     "gtp_tunnel", "sgi_segment", "app"]


def test_two_hop_walk_repeats_pattern(two_hop):
    walk = overlay.encapsulation_walk("ue", "stationary", two_hop)
    kinds = [s.kind for s in walk.segments]
    assert walk.lte_hop_count == 2
    hop = kinds[1:7]
    assert kinds == ["app"] + hop + hop + ["app"]
    down = [s.kind for s in overlay.encapsulation_walk("stationary", "ue", two_hop).segments]
    assert down == kinds[::-1]


def test_self_walk(two_hop):
    walk = overlay.encapsulation_walk("mobile", "mobile", two_hop)
    assert [s.kind for s in walk.segments] == ["app"]
    assert walk.total_overhead == 0


def test_gre_termination(two_hop):
    for a, b in [("ue", "stationary"), ("stationary", "ue")]:
        walk = overlay.encapsulation_walk(a, b, two_hop)
        for s in walk.segments:
            if s.kind == "gre_tunnel":
                child = s.location
                parent = two_hop.parent_of[child]
                assert set(s.endpoints) == {f"sgi@{parent}", f"access@{child}"}


def test_payload_sizes(single_hop, two_hop):
    one = overlay.encapsulation_walk("ue", "stationary", single_hop)
    two = overlay.encapsulation_walk("ue", "stationary", two_hop)
    inner = overlay.ICMP_ECHO_HEADERS
    assert overlay.air_interface_sizes(one, 0) == [0 + 24 + 36 + inner]
    assert overlay.air_interface_sizes(two, 0) == [24 + 36 + inner] * 2
    assert two.total_overhead == 2 * one.total_overhead

    def overhead(walk, payload):
        return [size - payload - inner for _, size in overlay.payload_overhead(walk, payload)]

    assert overhead(two, 100) == overhead(two, 200)
    app = [size for seg, size in overlay.payload_overhead(two, 100) if seg.kind == "app"]
    assert app == [128, 128]
    with pytest.raises(InvalidArgument):
        overlay.payload_overhead(one, -1)


def test_segment_validation():
    with pytest.raises(InvalidArgument):
        overlay.Segment("wormhole", "x")
    with pytest.raises(InvalidArgument):
        overlay.Segment("app", "x", -1)


def test_format_walk(two_hop):
    text = overlay.format_walk(overlay.encapsulation_walk("ue", "stationary", two_hop))
    assert text.count("air_interface") == 2
    assert "LTE hops: 2" in text and "120 B" in text
