"""
Rebuilding the frozen calibration
=================================

Re-derive every calibrated constant from the reported figures and write
the bundled scenarios and the public-LTE baseline. Pass a directory to
write somewhere other than the installed package.
"""
import sys
from pathlib import Path

import numpy as np

import relaycell
from relaycell import calibration

params = calibration.reference_parameters()
for k, v in params.items():
    print(f"{k:20s} {v:.6g}")

root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(relaycell.__file__).parent
(root / "scenarios").mkdir(parents=True, exist_ok=True)
(root / "data").mkdir(parents=True, exist_ok=True)
for path in calibration.write_reference_scenarios(root / "scenarios", params):
    print("wrote", path)

baseline = calibration.synthetic_public_lte()
out = root / "data" / "public_lte_latency.csv"
out.write_text("latency_ms\n" + "".join(f"{float(x)!r}\n" for x in baseline))
print(f"wrote {out} ({baseline.size} values, mean {np.mean(baseline):.3f} ms)")
