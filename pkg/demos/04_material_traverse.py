"""A slab seen through a refined region placed around, across or beside it.

Each placement is compared with an all-fine reference at the same time
step.  Expect a few percent difference, dominated by the 1 mm coarse
grid's own dispersion error.

    python demos/04_material_traverse.py [dielectric|copper]
"""

import sys

import numpy as np

from dissipative_fdtd import Simulation
from dissipative_fdtd.scenarios import material_traverse

material = sys.argv[1] if len(sys.argv) > 1 else "dielectric"
runs = {}
for p in ("enclosing", "traversing", "outside", "all-coarse", "all-fine"):
    rep = Simulation(material_traverse(p, material)).run()
    runs[p] = np.asarray(rep.probes["probe"].values)
    print(f"{p:11s} {rep.wall_seconds:6.2f} s")

ref = runs["all-fine"]
print(f"\n{material} slab, relative L2 difference from all-fine:")
for p in ("enclosing", "traversing", "outside", "all-coarse"):
    err = np.linalg.norm(runs[p] - ref) / np.linalg.norm(ref)
    print(f"  {p:11s} {100 * err:5.2f} %")
