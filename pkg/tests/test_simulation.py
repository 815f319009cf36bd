import numpy as np
import pytest

from dissipative_fdtd.config import (AuditConfig, BoundaryConfig, DtConfig, GridConfig, InitConfig,
                                     MaterialRegion, OutputConfig, ProbeConfig, SarConfig,
                                     SimulationConfig, SourceConfig, SubgridConfig)
from dissipative_fdtd.errors import ConfigurationError
from dissipative_fdtd.simulation import Simulation, read_snapshot, run_scenario, write_snapshot

MM = 1e-3


def _small(**kw):
    cfg = SimulationConfig(
        name="small",
        grid=GridConfig(nx=30, ny=24, dx=1 * MM, dy=1 * MM),
        subgrids=[SubgridConfig(i0=10, j0=8, i1=18, j1=16, r=3)],
        materials=[MaterialRegion(box=[12 * MM, 9 * MM, 16 * MM, 13 * MM], eps_r=3.0, sigma=2.0)],
        sources=[SourceConfig(at=[5.5 * MM, 5.5 * MM], f0=20e9, hwhm=15e9)],
        probes=[ProbeConfig(name="p", at=[14.2 * MM, 14.2 * MM]),
                ProbeConfig(name="q", component="ex", at=[25 * MM, 20 * MM])],
        steps=200,
    )
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg.validate()


def test_zero_cavity_stays_zero():
    cfg = _small(sources=[])
    rep = run_scenario(cfg)
    for s in rep.probes.values():
        assert np.all(np.asarray(s.values) == 0)
    assert rep.ledger["storage_max_J_per_m"] == 0.0
    assert rep.violations == 0 and rep.max_hz == 0.0


def test_driven_subgridded_run_has_no_violations():
    rep = run_scenario(_small(steps=600))
    assert rep.stable
    assert rep.max_hz > 0
    assert rep.interface_supply_max < 1e-12
    assert rep.ledger["records"] == 600


def test_pml_run_has_no_violations():
    cfg = _small(boundary=BoundaryConfig(S="pml", N="pml", W="pml", E="pml", pml_thickness=4),
                 subgrids=[SubgridConfig(i0=11, j0=9, i1=17, j1=15, r=2)], steps=400)
    rep = run_scenario(cfg)
    assert rep.stable
    assert rep.ledger["storage_final_J_per_m"] < rep.ledger["storage_max_J_per_m"]


def test_runs_are_deterministic(tmp_path):
    cfg = _small(init=InitConfig(kind="random", scale=1.0), seed=7, threads=2, steps=50,
                 output=OutputConfig(snapshot_every=25))
    a = run_scenario(cfg, out_dir=tmp_path / "a")
    b = run_scenario(cfg, out_dir=tmp_path / "b")
    assert a.files == b.files and "probe_p.csv" in a.files
    for name in a.files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    c = run_scenario(_small(init=InitConfig(kind="random"), seed=7, threads=1, steps=50))
    assert c.probes["p"].values == a.probes["p"].values
    assert (tmp_path / "a" / "report.json").exists()


def test_dt_policy_uses_fine_grid_bound():
    sim = Simulation(_small())
    fine_dt = 0.99 / (299792458.0 * np.sqrt(2) * 3 / MM)
    assert sim.dt == pytest.approx(fine_dt, rel=1e-9)
    explicit = Simulation(_small(dt=DtConfig("seconds", 1e-13)))
    assert explicit.dt == 1e-13


def test_divergence_is_flagged():
    sim = Simulation(_small(steps=3000))
    rep = Simulation(_small(steps=3000, dt=DtConfig("seconds", 1.2 * sim.dt_limit))).run()
    assert rep.diverged and not rep.stable
    assert rep.steps < 3000


def test_probe_times_are_staggered():
    rep = run_scenario(_small(steps=4))
    assert np.allclose(np.asarray(rep.probes["p"].times) / rep.dt, [0.5, 1.5, 2.5, 3.5])
    assert np.allclose(np.asarray(rep.probes["q"].times) / rep.dt, [1, 2, 3, 4])


def test_placement_errors():
    with pytest.raises(ConfigurationError, match="sources"):
        Simulation(_small(sources=[SourceConfig(box=[9 * MM, 9 * MM, 12 * MM, 12 * MM],
                                                f0=1e9, hwhm=1e9)]))


def test_sar_window_accumulates_peaks():
    cfg = _small(sources=[SourceConfig(kind="sinusoid", at=[5.5 * MM, 5.5 * MM], f0=20e9)],
                 materials=[MaterialRegion(box=[12 * MM, 9 * MM, 16 * MM, 13 * MM], eps_r=3.0,
                                           sigma=2.0, rho=1000.0)],
                 sar=SarConfig(window=[0.0, 1.0]), audit=AuditConfig(ledger=False), steps=300)
    rep = run_scenario(cfg)
    assert rep.sar_integral > 0
    fine = rep.sar_maps[1]
    assert np.all(fine.sar[~fine.tissue] == 0) and np.all(fine.sar >= 0)
    assert np.all(rep.sar_maps[0].sar == 0)


@pytest.mark.parametrize("fmt", ["binary", "csv"])
def test_snapshot_round_trip(tmp_path, fmt):
    data = np.arange(12.0).reshape(3, 4)
    p = write_snapshot(tmp_path / "s", data, "hz", 1e-3, 2e-3, 1.5e-12, 7, fmt=fmt)
    if fmt == "binary":
        back, meta = read_snapshot(p)
        assert p.stat().st_size == 64 + 12 * 8
        assert meta == {"component": "hz", "nx": 4, "ny": 3, "dx": 1e-3, "dy": 2e-3,
                        "t": 1.5e-12, "step": 7}
    else:
        back = np.loadtxt(p, delimiter=",")
    assert np.array_equal(back, data)
