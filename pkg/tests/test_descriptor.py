import numpy as np
import pytest
import scipy.sparse as sp

from dissipative_fdtd.descriptor import (assemble_descriptor, build_difference_matrix,
                                         dump_triplets, explicit_step, load_triplets,
                                         port_product)
from dissipative_fdtd.errors import ConfigurationError
from dissipative_fdtd.grid import FieldState, GridSpec, MaterialMap, leapfrog_step

from oracles import DenseRegion, cfl_2d, random_materials


def _mat(m):
    return MaterialMap(m["eps_x"], m["eps_y"], m["sigma_x"], m["sigma_y"], m["mu"], m["sigma_m"])


def _setup(seed=3, nx=3, ny=2, dx=1e-3, dy=2e-3, magnetic_loss=True):
    rng = np.random.default_rng(seed)
    m = random_materials(rng, nx, ny, magnetic_loss=magnetic_loss)
    dt = 0.4 * cfl_2d(dx, dy)
    g = GridSpec(nx, ny, dx, dy)
    return rng, g, m, dt, assemble_descriptor(g, _mat(m), dt), DenseRegion(nx, ny, dx, dy, dt, m)


def test_difference_matrix_small():
    d = build_difference_matrix(3).toarray()
    assert np.array_equal(d, [[-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]])


def test_r_f_b_match_dense_oracle():
    _, g, _, _, sys, dense = _setup()
    scale = np.abs(dense.R).max()
    assert np.allclose(sys.r_mat.toarray(), dense.R, atol=1e-14 * scale)
    assert np.allclose(sys.f_mat.toarray(), dense.F, atol=1e-14 * scale)
    assert np.allclose(sys.b_mat.toarray(), dense.Bu, atol=1e-18)


def test_structure_symmetry_and_skew_coupling():
    _, g, _, _, sys, _ = _setup()
    r = sys.r_mat.toarray()
    f = sys.f_mat.toarray()
    assert np.allclose(r, r.T)
    ne = g.n_ex + g.n_ey
    off = f[:ne, ne:]
    assert np.allclose(f[ne:, :ne], -off.T)
    # symmetric part of F holds only the (non-negative) losses
    fs = 0.5 * (f + f.T)
    assert np.allclose(fs, np.diag(np.diag(fs)))
    assert np.all(np.diag(fs) >= 0)


def test_port_product_block_diagonal():
    _, g, _, _, sys, _ = _setup()
    lb = port_product(sys).toarray()
    expected = np.diag(np.concatenate([np.full(g.nx, -g.dx), np.full(g.nx, g.dx),
                                       np.full(g.ny, g.dy), np.full(g.ny, -g.dy)]))
    assert np.allclose(lb, expected)
    assert np.allclose((sys.l_mat @ port_product(sys)).toarray(), sys.b_mat.toarray())


def test_explicit_step_matches_loop_and_dense():
    rng, g, m, dt, sys, dense = _setup(seed=11, nx=4, ny=3)
    st = FieldState.random(g, rng)
    u = rng.standard_normal(g.n_ports)
    st.set_inputs(u)
    x_sparse = explicit_step(sys, st.vector(), u)
    x_dense = dense.step(st.vector(), u)
    x_loop = leapfrog_step(st, _mat(m), g, dt).vector()
    tol = 1e-12 * np.abs(x_dense).max()
    assert np.allclose(x_sparse, x_dense, atol=tol)
    assert np.allclose(x_loop, x_dense, atol=tol)


def test_r_spd_below_bound():
    _, g, _, _, sys, _ = _setup(nx=4, ny=4)
    w = np.linalg.eigvalsh(sys.r_mat.toarray())
    assert w.min() > 0


def test_triplet_round_trip(tmp_path):
    _, _, _, _, sys, _ = _setup()
    p = dump_triplets(sys.r_mat, tmp_path / "r.txt")
    back = load_triplets(p)
    assert back.shape == sys.r_mat.shape
    assert abs(back - sys.r_mat).max() == 0.0
    empty = dump_triplets(sp.csr_matrix((2, 3)), tmp_path / "z.txt")
    assert load_triplets(empty).shape == (2, 3)


def test_port_product_rejects_foreign_grid():
    _, _, _, _, sys, _ = _setup()
    with pytest.raises(ConfigurationError):
        port_product(sys, GridSpec(9, 9, 1.0, 1.0))
