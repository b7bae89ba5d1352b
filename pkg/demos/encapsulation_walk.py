"""
Walking a packet through the overlay
====================================

Print the segment-by-segment path of a ping from the UE to the stationary
host, single hop and through the relay, with per-segment header sizes.
"""
from relaycell import cellnet, overlay, scenario

for name in ("field_single_hop", "field_two_hop"):
    cfg = scenario.load_bundled(name)
    topo = cellnet.build_topology(cfg.nodes, cfg.links)
    addrs = overlay.assign_addresses(cfg.nodes)
    print(f"== {name}: " + ", ".join(f"{n}={a}" for n, a in addrs.items()))
    walk = overlay.encapsulation_walk("ue", "stationary", topo)
    print(overlay.format_walk(walk))
    sizes = overlay.air_interface_sizes(walk, 56)
    print(f"56 B ping payload on the air: {sizes}\n")
