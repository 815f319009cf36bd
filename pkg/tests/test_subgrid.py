import numpy as np
import pytest

from dissipative_fdtd.dissipativity import EnergyMeter
from dissipative_fdtd.errors import ConfigurationError
from dissipative_fdtd.grid import FieldState, GridSpec, MaterialMap, YeeRegion
from dissipative_fdtd.subgrid import (SubgridRegion, SubgriddedDomain, coarse_active_mask,
                                      coupled_step, interface_coeffs, interface_supply,
                                      interface_update, interpolate_e, interpolate_h)

from oracles import EPS0, cfl_2d


def _domain(r, nx=8, ny=7, box=(2, 2, 5, 5), dx=1e-3, dy=1e-3, lossy=False, seed=0):
    rng = np.random.default_rng(seed)
    coarse = GridSpec(nx, ny, dx, dy)
    reg = SubgridRegion(*box, r=r)
    active = coarse_active_mask(coarse, [reg])
    eps_c = rng.uniform(1, 4, coarse.hz_shape)
    sig_c = rng.uniform(0, 1, coarse.hz_shape) if lossy else 0.0
    cmat = MaterialMap.from_cells(coarse, eps_r=eps_c, sigma=sig_c, active=active)
    fg = reg.fine_grid(coarse)
    eps_f = rng.uniform(1, 4, fg.hz_shape)
    sig_f = rng.uniform(0, 1, fg.hz_shape) if lossy else 0.0
    fmat = MaterialMap.from_cells(fg, eps_r=eps_f, sigma=sig_f)
    dt = 0.9 * cfl_2d(dx / r, dy / r)
    dom = SubgriddedDomain(coarse, cmat, [reg], [fmat], dt)
    cst, fsts = dom.new_states()
    cst.ex[:] = rng.standard_normal(cst.ex.shape)
    cst.ey[:] = rng.standard_normal(cst.ey.shape)
    cst.hz[:] = rng.standard_normal(cst.hz.shape) * 3e-3
    for f in fsts:
        f.ex[:] = rng.standard_normal(f.ex.shape)
        f.ey[:] = rng.standard_normal(f.ey.shape)
        f.hz[:] = rng.standard_normal(f.hz.shape) * 3e-3
    dom.sync(cst, fsts)
    return dom, cst, fsts


def test_interpolation_rules():
    assert np.array_equal(interpolate_e(np.array([1.0, 2.0]), 3), [[1, 1, 1], [2, 2, 2]])
    assert np.allclose(interpolate_h(np.array([[1.0, 2.0, 6.0]]), 3), [3.0])
    with pytest.raises(ConfigurationError):
        interpolate_h(np.ones((2, 4)), 3)


def test_interface_update_hand_example():
    # eps = eps_fine = eps0, lossless, r = 2, normal cell 1 mm, dt 1 ps
    dt, l, r = 1e-12, 1e-3, 2
    c = interface_coeffs(EPS0, 0.0, np.full(r, EPS0), np.zeros(r), r, l, dt, side="S")
    e = interface_update(0.0, 0.0, np.array([1.0, 1.0]), c)
    expected = 2 * dt / (l * EPS0 * (1 + 1 / r))
    assert e == pytest.approx(expected, rel=1e-12)
    assert e == pytest.approx(150.588, abs=1e-3)


def test_interface_update_r1_reduces_to_yee_edge():
    # r = 1: both half cells with eps0, keep = 1 and drive = dt / (eps0 l)
    dt, l = 1e-12, 1e-3
    c = interface_coeffs(EPS0, 0.0, np.full(1, EPS0), np.zeros(1), 1, l, dt, side="S")
    assert c.c_keep == pytest.approx(1.0)
    assert interface_update(2.0, 0.5, np.array([1.5]), c) == pytest.approx(2.0 + dt / (EPS0 * l))


def test_interface_update_rejects_ratio_mismatch():
    c = interface_coeffs(EPS0, 0.0, np.full(2, EPS0), np.zeros(2), 2, 1e-3, 1e-12)
    with pytest.raises(ConfigurationError):
        interface_update(0.0, 0.0, np.ones(3), c)


def test_interface_supply_zero_for_reciprocal_rule():
    rng = np.random.default_rng(1)
    r = 3
    e0, e1 = rng.standard_normal(2)
    hf = rng.standard_normal(r)
    s = interface_supply((e0, e1), (interpolate_e(e0, r), interpolate_e(e1, r)),
                         interpolate_h(hf, r), hf, 1e-3, 1e-12)
    assert abs(s) < 1e-30


def test_interface_supply_negative_control():
    e0, e1 = 1.0, 2.0
    hf = np.array([1.0, -1.0])
    weighted = 0.7 * hf[0] + 0.3 * hf[1]
    s = interface_supply((e0, e1), (interpolate_e(e0, 2), interpolate_e(e1, 2)),
                         weighted, hf, 1e-3, 1e-12)
    assert abs(s) > 1e-16


def test_region_validation():
    g = GridSpec(10, 10, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        SubgridRegion(0, 2, 4, 4, 2).check_inside(g)
    with pytest.raises(ConfigurationError):
        SubgridRegion(2, 2, 2, 4, 2)
    with pytest.raises(ConfigurationError):
        SubgridRegion(2, 2, 4, 4, 0)
    with pytest.raises(ConfigurationError):
        coarse_active_mask(g, [SubgridRegion(1, 1, 4, 4, 2), SubgridRegion(4, 1, 6, 4, 2)])
    act = coarse_active_mask(g, [SubgridRegion(1, 1, 4, 4, 2), SubgridRegion(5, 1, 7, 4, 2)])
    assert act.sum() == 100 - 9 - 6


def test_zero_state_stays_zero():
    dom, cst, fsts = _domain(3)
    cst.ex[:] = 0; cst.ey[:] = 0; cst.hz[:] = 0
    for f in fsts:
        f.ex[:] = 0; f.ey[:] = 0; f.hz[:] = 0
    for _ in range(10):
        coupled_step(dom, cst, fsts)
    assert cst.max_abs() == 0.0 and fsts[0].max_abs() == 0.0


@pytest.mark.parametrize("r", [1, 2, 3, 4, 6])
def test_interface_supply_per_edge_including_corners(r):
    dom, cst, fsts = _domain(r, seed=r)
    for _ in range(20):
        coupled_step(dom, cst, fsts)
        for sd in dom.sides[0]:
            per_edge = sd.edge_supply(cst, fsts[0], dom.dt)
            scale = sd.scale(cst, fsts[0], dom.dt) / sd.m
            assert np.all(np.abs(per_edge) <= 1e-12 * scale)
        # fine copies equal the coarse value, corners included
        for sd in dom.sides[0]:
            ce = getattr(cst, sd.comp)[sd.ce]
            fe = getattr(fsts[0], sd.comp)[sd.fe]
            assert np.array_equal(fe, np.repeat(ce, r))


def test_hanging_variables_satisfy_mean_rule():
    dom, cst, fsts = _domain(4, lossy=True, seed=9)
    coupled_step(dom, cst, fsts)
    for sd in dom.sides[0]:
        hc, hf = sd.hanging(cst, fsts[0])
        assert np.allclose(hc, hf.mean(axis=1), rtol=1e-10, atol=1e-12 * np.abs(hf).max())


def test_lossless_domain_conserves_energy():
    dom, cst, fsts = _domain(3, nx=12, ny=10, box=(3, 3, 8, 7), seed=4)
    meters = [EnergyMeter(reg) for reg in dom.regions_all]

    def energy():
        states = [cst] + list(fsts)
        total = 0.0
        prev = [s.hz.copy() for s in states]
        scratch = [s.copy() for s in states]
        dom.update_h(scratch[0], scratch[1:])
        for m, s, hp, sc in zip(meters, states, prev, scratch):
            total += m(s, hp, sc.hz)
        return total

    e0 = energy()
    for _ in range(500):
        coupled_step(dom, cst, fsts)
    assert abs(energy() - e0) <= 1e-12 * e0


def test_lossy_domain_energy_decreases():
    dom, cst, fsts = _domain(2, lossy=True, seed=6)
    meters = [EnergyMeter(reg) for reg in dom.regions_all]

    def energy():
        states = [cst] + list(fsts)
        scratch = [s.copy() for s in states]
        dom.update_h(scratch[0], scratch[1:])
        return sum(m(s, s.hz, sc.hz) for m, s, sc in zip(meters, states, scratch))

    last = energy()
    for _ in range(50):
        coupled_step(dom, cst, fsts)
        now = energy()
        assert now <= last * (1 + 1e-12)
        last = now
