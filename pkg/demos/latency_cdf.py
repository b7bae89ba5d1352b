"""
Overlay latency against public LTE
==================================

Compare the lab two-hop latency CDF with the bundled public-LTE
baseline, percentile by percentile, and estimate P[overlay faster].
"""
import numpy as np

from relaycell import analysis, engine, scenario

two_hop = analysis.latency_cdf(engine.run_scenario(scenario.load_bundled("lab_two_hop")))
public = analysis.public_lte_baseline()

print(" pct   two-hop   public LTE")
for q in (5, 25, 50, 75, 95, 99):
    print(f"{q:4d}  {np.percentile(two_hop.values, q):8.2f}  {np.percentile(public.values, q):8.2f}")
print(f"mean  {two_hop.mean:8.2f}  {public.mean:8.2f}")

p = analysis.probability_faster(two_hop, public, n_pairs=100_000)
print(f"P[two-hop draw < public-LTE draw] = {p:.3f}")

# The crossing: where the two CDFs swap order.
grid = np.linspace(0, 80, 801)
diff = np.array([two_hop.probability_below(x) - public.probability_below(x) for x in grid])
print(f"largest CDF gap {diff.max():.3f} at {grid[diff.argmax()]:.1f} ms")
