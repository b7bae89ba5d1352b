"""
The four reference runs
=======================

Simulate the bundled lab and field scenarios and summarise latency and
V2X compliance. Each run is deterministic under its stored seed.
"""
import numpy as np

from relaycell import analysis, engine, scenario

for name in scenario.BUNDLED:
    cfg = scenario.load_bundled(name)
    samples = list(engine.run_scenario(cfg))
    cdf = analysis.latency_cdf(samples)
    states = {s: sum(r.link_state == s for r in samples)
              for s in ("attached", "unreliable", "detached")}
    verdicts = [analysis.v2x_compliance(cdf, lim, 0.95) for lim in (20.0, 100.0)]
    print(f"{name:17s} {len(cdf):6d} probes  mean {cdf.mean:6.2f} ms  "
          f"median {np.median(cdf.values):6.2f} ms  "
          + "  ".join(f"{v.limit:g}ms:{'pass' if v.passed else 'fail'}({v.achieved:.3f})"
                      for v in verdicts))
    print(f"{'':17s} link states {states}")

# Who pings whom in the relay scenario.
cfg = scenario.load_bundled("field_two_hop")
print(f"field_two_hop probes {cfg.probe.source} -> {cfg.probe.destination} "
      f"every {cfg.probe.interval * 1e3:g} ms")
