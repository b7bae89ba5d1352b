"""
How far does the relay push coverage?
=====================================

Tile the single-hop and relay drive tests into 4 m x 2 m RSRP medians,
keep the better tile of the two, and measure the along-road gain.
"""
from relaycell import analysis, engine, scenario

single = analysis.tile_aggregate(engine.run_scenario(scenario.load_bundled("field_single_hop")))
relay = analysis.tile_aggregate(engine.run_scenario(scenario.load_bundled("field_two_hop")))
best, provenance = analysis.best_server(single, relay)

threshold = -110.0
print(f"single-hop coverage ends at {analysis.farthest_covered(single, threshold):.0f} m")
print(f"best-server coverage ends at {analysis.farthest_covered(best, threshold):.0f} m")
print(f"extension: {analysis.coverage_extension(single, best, threshold):.0f} m")

# A coarse text map of which configuration wins along the road.
cols = sorted({k[0] for k in best.cells})
# Lane rows only; the U-turns leave a few stray tiles in between.
row_fill = {}
for _, j in best.cells:
    row_fill[j] = row_fill.get(j, 0) + 1
rows = sorted((j for j, n in row_fill.items() if n > len(cols) // 4), reverse=True)
for j in rows:
    line = ""
    for i in cols:
        v = best.cells.get((i, j))
        if v is None:
            line += " "
        elif v < threshold:
            line += "."
        else:
            line += "r" if provenance[(i, j)] == analysis.TWO_HOP else "s"
    print(line)
print("s: stationary cell wins, r: relay wins, .: below threshold")
