"""Time-step bounds: per-cell estimate, global bound and what happens past it.

The per-cell bound only looks at one cell at a time; the global bound is
the exact limit for the whole region.  Just above the global bound the
energy matrix stops being positive definite and the fields blow up.

    python demos/02_stability_bounds.py
"""

import numpy as np

from dissipative_fdtd import (FieldState, GridSpec, MaterialMap, YeeRegion, analyze_region,
                              assemble_descriptor, cfl_global, cfl_per_cell)

MM = 1e-3

# 0.2 mm vacuum mesh
g = GridSpec(50, 50, 0.2 * MM, 0.2 * MM)
_, dt_cell = cfl_per_cell(MaterialMap.uniform(g), g)
print(f"0.2 mm vacuum: per-cell bound {dt_cell * 1e12:.5f} ps, "
      f"99% of it {0.99 * dt_cell * 1e12:.4f} ps")

# a random heterogeneous region
rng = np.random.default_rng(0)
g = GridSpec(12, 9, 1 * MM, 0.7 * MM)
mat = MaterialMap.from_cells(g, eps_r=rng.uniform(1, 10, g.hz_shape),
                             sigma=rng.uniform(0, 3, g.hz_shape))
rep = analyze_region(g, mat, 0.5 * cfl_per_cell(mat, g)[1])
print("\nrandom 12 x 9 region:")
for line in rep.lines():
    print("  " + line)
print(f"  global / per-cell = {rep.dt_max_global / rep.dt_max_percell:.4f}")

# one percent past the global bound
g = GridSpec(8, 8, 1 * MM, 1 * MM)
mat = MaterialMap.uniform(g)
dt = 1.01 * cfl_global(assemble_descriptor(g, mat, 1e-13)).dt_max
r_min = np.linalg.eigvalsh(assemble_descriptor(g, mat, dt).r_mat.toarray()).min()
print(f"\n8 x 8 vacuum at 1.01x the global bound: smallest eigenvalue of R = {r_min:.3e}")
reg = YeeRegion(g, mat, dt)
st = FieldState.random(g, rng, h_scale=1 / 377.0)
m0 = st.max_abs()
for n in range(1, 201):
    reg.step(st)
    if n % 40 == 0:
        print(f"  step {n:3d}: max field grew {st.max_abs() / m0:.2e}x")
