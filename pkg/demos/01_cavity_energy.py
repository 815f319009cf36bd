"""Energy bookkeeping in a subgridded PEC cavity.

A 60 x 40 mm cavity holds a 4x refined region.  A short pulse charges it;
after the source switches off the stored energy should stay put, and the
coupling between the grids should neither add nor remove energy.

    python demos/01_cavity_energy.py [steps]
"""

import sys

import numpy as np

from dissipative_fdtd import Simulation
from dissipative_fdtd.scenarios import cavity_stability

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
cfg = cavity_stability(steps=steps)
sim = Simulation(cfg)
print(f"coarse grid {sim.coarse_grid.nx} x {sim.coarse_grid.ny}, "
      f"fine grid {sim.fine_grids[0].nx} x {sim.fine_grids[0].ny} (r = {sim.regions[0].r})")
print(f"time step {sim.dt * 1e12:.4f} ps = 0.99 of the fine-grid bound")

rep = sim.run()
storage = np.asarray(rep.energy_ledger.storage)
peak = int(np.argmax(storage))
tail = storage[peak + 500:]
print(f"\nran {rep.steps} steps in {rep.wall_seconds:.2f} s")
print(f"storage peaks at step {peak}: {storage[peak]:.6e} J/m")
if tail.size:
    drift = np.max(np.abs(tail - tail[0])) / tail[0]
    print(f"after the pulse: relative storage drift {drift:.2e}")
print(f"ledger violations: {rep.violations}")
print(f"largest interface supply relative to storage: {rep.interface_supply_max:.2e}")

t, hz = rep.probes["probe"].arrays()
print(f"\nprobe: {len(t)} samples, max |Hz| = {np.max(np.abs(hz)):.3e} A/m")
