import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_

from dissipative_fdtd.descriptor import assemble_descriptor
from dissipative_fdtd.dissipativity import (EnergyLedger, EnergyMeter, analyze_region,
                                            audit_step, cfl_global, cfl_per_cell, cfl_uniform,
                                            source_supply, storage_energy, storage_quadratic,
                                            supply_rate)
from dissipative_fdtd.errors import StateError
from dissipative_fdtd.grid import FieldState, GridSpec, MaterialMap, YeeRegion, leapfrog_step, update_hz

from oracles import DenseRegion, cfl_2d, dense_s_max, random_materials


def _mat(m):
    return MaterialMap(m["eps_x"], m["eps_y"], m["sigma_x"], m["sigma_y"], m["mu"], m["sigma_m"])


def test_uniform_bound_matches_closed_form():
    assert cfl_uniform(1e-3, 2e-3) == pytest.approx(cfl_2d(1e-3, 2e-3), rel=1e-12)
    g = GridSpec(5, 4, 1e-3, 2e-3)
    _, dt = cfl_per_cell(MaterialMap.uniform(g), g)
    assert dt == pytest.approx(cfl_2d(1e-3, 2e-3), rel=1e-12)


def test_per_cell_bound_value_at_0p2mm():
    g = GridSpec(4, 4, 0.2e-3, 0.2e-3)
    _, dt = cfl_per_cell(MaterialMap.uniform(g), g)
    assert abs(dt * 1e12 - 0.47175) <= 1e-4


def test_global_bound_matches_dense_svd():
    g = GridSpec(6, 5, 1e-3, 1.3e-3)
    sys = assemble_descriptor(g, MaterialMap.uniform(g), 1e-13)
    est = cfl_global(sys)
    assert est.s_max == pytest.approx(dense_s_max(6, 5, 1e-3, 1.3e-3), rel=1e-7)


@pytest.mark.parametrize("magnetic_loss", [False, True])
def test_storage_forms_agree_and_match_dense(magnetic_loss):
    rng = np.random.default_rng(5)
    nx, ny, dx, dy = 4, 3, 1e-3, 1e-3
    m = random_materials(rng, nx, ny, magnetic_loss=magnetic_loss)
    dt = 0.5 * cfl_2d(dx, dy)
    g = GridSpec(nx, ny, dx, dy)
    mat = _mat(m)
    st = FieldState.random(g, rng, h_scale=1 / 377.0)
    hz_next = update_hz(st, mat, g, dt)
    e_loop = storage_energy(st, hz_next, mat, g, dt)
    # matrix form on (E^n, H^{n-1/2}); the magnetic-loss terms are extra
    x = st.vector()
    dense = DenseRegion(nx, ny, dx, dy, dt, m)
    e_mat = storage_quadratic(assemble_descriptor(g, mat, dt), x)
    assert e_mat == pytest.approx(dense.storage(x), rel=1e-12)
    extra = 0.25 * dt * dx * dy * np.sum(m["sigma_m"] * st.hz * (hz_next + st.hz))
    assert e_loop == pytest.approx(e_mat + extra, rel=1e-12)
    meter = EnergyMeter(YeeRegion(g, mat, dt))
    assert meter(st, st.hz, hz_next) == pytest.approx(e_loop, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st_.integers(0, 2 ** 31 - 1), frac=st_.floats(0.05, 0.99))
def test_dissipation_inequality_random_lossy_region(seed, frac):
    rng = np.random.default_rng(seed)
    nx, ny, dx, dy = 3, 3, 1e-3, 1.5e-3
    m = random_materials(rng, nx, ny, magnetic_loss=True)
    mat = _mat(m)
    g = GridSpec(nx, ny, dx, dy)
    _, dt_cell = cfl_per_cell(mat, g)
    dt = frac * dt_cell
    st = FieldState.random(g, rng)
    ledger = EnergyLedger()
    for n in range(20):
        u = rng.standard_normal(g.n_ports) * 1e-3
        st.set_inputs(u)
        before = storage_energy(st, update_hz(st, mat, g, dt), mat, g, dt)
        y0 = st.outputs()
        nxt = leapfrog_step(st, mat, g, dt)
        nxt.set_inputs(u)
        y1 = nxt.outputs()
        nxt.set_inputs(np.zeros(g.n_ports))
        after = storage_energy(nxt, update_hz(nxt, mat, g, dt), mat, g, dt)
        # supply evaluated with the inputs held over the step
        s = supply_rate(y0, y1, u, g, dt)
        audit_step(ledger, before, after, s, step=n)
        st = nxt
        assert before >= 0
    assert ledger.violations == 0


def test_negative_loss_is_caught_by_ledger():
    rng = np.random.default_rng(2)
    g = GridSpec(3, 3, 1e-3, 1e-3)
    mat = MaterialMap.uniform(g, sigma=-5.0)
    dt = 0.5 * cfl_2d(1e-3, 1e-3)
    st = FieldState.random(g, rng)
    ledger = EnergyLedger()
    for n in range(10):
        before = storage_energy(st, update_hz(st, mat, g, dt), mat, g, dt)
        st = leapfrog_step(st, mat, g, dt, pec="all")
        after = storage_energy(st, update_hz(st, mat, g, dt), mat, g, dt)
        audit_step(ledger, before, after, 0.0, step=n)
    assert ledger.violations > 0


def test_ledger_flags_energy_creation(tmp_path):
    led = EnergyLedger()
    assert not audit_step(led, 1.0, 0.9, 0.0)
    assert audit_step(led, 1.0, 1.1, 0.0)
    assert led.violations == 1
    assert led.summary()["records"] == 2
    text = led.to_csv(tmp_path / "l.csv").read_text().splitlines()
    assert text[0].startswith("step,") and len(text) == 3


def test_supply_rate_length_check():
    g = GridSpec(2, 2, 1.0, 1.0)
    with pytest.raises(StateError):
        supply_rate(np.zeros(3), np.zeros(8), np.zeros(8), g, 1.0)


def test_source_supply_single_cell():
    # H goes from 1 to 3 with an increment of 2: 0.5 mu A (1 + 3) 2
    assert source_supply(2.0, 0.5, np.array([1.0]), np.array([3.0]), np.array([2.0])) == 4.0


def test_analyze_region_reports_dissipative():
    g = GridSpec(5, 5, 1e-3, 1e-3)
    mat = MaterialMap.uniform(g, eps_r=2.0, sigma=1.0)
    rep = analyze_region(g, mat, 0.9 * cfl_uniform(1e-3, 1e-3, 2.0))
    assert rep.dissipative
    assert rep.dt_max_global >= rep.dt_max_percell * (1 - 1e-9)
    assert any("dt_max_global" in line for line in rep.lines())
    bad = analyze_region(g, mat, 1.2 * rep.dt_max_global)
    assert not bad.r_spd
