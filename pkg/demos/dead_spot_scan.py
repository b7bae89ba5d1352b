"""
Where the ground reflection kills the signal
=============================================

Scan received power from a 2 m antenna to a 1.65 m receiver over wet
ground at 5.9 GHz, and compare the deepest interference null with the
2 h1 h2 / lambda estimate.
"""
import numpy as np

from relaycell import rfmodel

tx = rfmodel.RadioConfig(5.9e9, 5e6, 0.0, 2.0)
rx = rfmodel.RadioConfig(5.9e9, 5e6, 0.0, 1.65)

d = np.arange(20.0, 400.0, 0.1)
p = rfmodel.two_ray_rx_power(tx, rx, d, rfmodel.WET_GROUND)
free = rfmodel.friis_rx_power(tx, rx, d)

# Nulls and lobes of the interference pattern.
for i in rfmodel.local_minima(d, p)[-3:]:
    print(f"null at {d[i]:6.1f} m: {p[i] - free[i]:+6.1f} dB against free space")
print(f"last lobe at {d[rfmodel.local_maxima(d, p)[-1]]:.1f} m")

fade = rfmodel.deepest_fade(tx, rx, rfmodel.WET_GROUND, 50.0, 175.0)
est = rfmodel.fade_null_estimate(2.0, 1.65, 5.9e9)
print(f"deepest fade on [50, 175] m: {fade:.1f} m (estimate {est:.1f} m)")

# Far past the last lobe the two paths cancel into a d^-4 law.
far = np.array([10, 40]) * est
pf = rfmodel.two_ray_rx_power(tx, rx, far, rfmodel.WET_GROUND)
print(f"far-field slope: {(pf[1] - pf[0]) / 10 / np.log10(4):.2f} (d^-4 is -4)")

# The reflection coefficient goes to -1 at grazing incidence.
eps = rfmodel.complex_permittivity(rfmodel.WET_GROUND, 5.9e9)
for psi in (1e-4, 0.01, 0.1, 0.5, np.pi / 2):
    g = rfmodel.reflection_coefficient(psi, eps)
    print(f"psi={psi:7.4f} rad  |Gamma|={abs(g):.4f}  arg={np.angle(g):+.3f}")
