"""Drop twenty devices into the cell, draw one round of fading and look at
what the relay priority ranking does with it."""

import numpy as np

from relayfl import EnergyLedger, SystemParams, draw_channels, place_devices, priorities
from relayfl.energy import allowances

p = SystemParams()
devices = draw_channels(seed=1, round=0, devices=place_devices(1, p))

d = np.array([dev.d for dev in devices])
r = np.array([dev.r for dev in devices])
print("distance to PS     min %.1f  max %.1f" % (d.min(), d.max()))
print("distance to relay  min %.1f  max %.1f" % (r.min(), r.max()))

# gains are Exp(1), so the sample mean should sit near one
h = np.array([dev.h_mag2 for dev in devices])
print("mean |h|^2 over this round: %.3f" % h.mean())

ledger = EnergyLedger.fresh(len(devices))
print("per-round allowance at t=0:", allowances(devices, ledger, 0, p)[0])

table = priorities(devices, ledger, 0, p)
print()
print(" rank  id      d      r     psi")
for rank, k in enumerate(table.order[:8], start=1):
    print("%5d %3d %6.1f %6.1f  %.3e" % (rank, k, d[k], r[k], table.psi[k]))
# devices close to the relay with a strong relay link float to the top
