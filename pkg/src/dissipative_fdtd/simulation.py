"""Build a coupled simulation from a :class:`SimulationConfig` and run it.

Each step follows the four-phase order of the coupled scheme; the audits
slot in between:

1. ``H`` updates in every grid (``Hz`` goes from ``n - 1/2`` to ``n + 1/2``).
   The storage at step ``n`` is evaluated here, before any source acts.
2. Sources add their increments to ``Hz``.
3. ``E`` updates strictly inside each grid, then the coarse interface
   edges, then the fine copies.
4. Probes, SAR peak tracking, snapshots and the divergence check.
"""

from __future__ import annotations

import json
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .absorbing import (PmlSpec, ProbeSeries, ProbeSpec, SourceSpec, check_source,
                        compute_sar, record_probe, sar_integral, source_index, with_pml)
from .config import SimulationConfig
from .constants import EPS0, MU0
from .dissipativity import (EnergyLedger, EnergyMeter, audit_step, cfl_per_cell,
                            source_supply)
from .errors import ConfigurationError
from .grid import GridSpec, MaterialMap
from .subgrid import SubgridRegion, SubgriddedDomain, coarse_active_mask

# ------------------------------------------------------------------ snapshots

SNAPSHOT_MAGIC = b"FDTDSNP1"
_HEADER = struct.Struct("<8s4sIIdddQ")  # 56 bytes, padded to 64
HEADER_SIZE = 64


def write_snapshot(path, data, component: str, dx: float, dy: float, t: float, step: int,
                   fmt: str = "binary") -> Path:
    """Write one field array with a 64-byte header (or as CSV with a comment header)."""
    path = Path(path)
    data = np.ascontiguousarray(data, dtype="<f8")
    ny, nx = data.shape
    if fmt == "csv":
        header = f"component={component} nx={nx} ny={ny} dx={dx!r} dy={dy!r} t={t!r} step={step}"
        np.savetxt(path, data, delimiter=",", header=header, fmt="%.17g")
        return path
    head = _HEADER.pack(SNAPSHOT_MAGIC, component.encode().ljust(4, b"\0")[:4], nx, ny,
                        dx, dy, t, step)
    with path.open("wb") as fh:
        fh.write(head.ljust(HEADER_SIZE, b"\0"))
        fh.write(data.tobytes())
    return path


def read_snapshot(path):
    """Return ``(array, meta)`` from a binary snapshot."""
    raw = Path(path).read_bytes()
    magic, comp, nx, ny, dx, dy, t, step = _HEADER.unpack(raw[:_HEADER.size])
    if magic != SNAPSHOT_MAGIC:
        raise ConfigurationError(f"{path}: not a field snapshot")
    data = np.frombuffer(raw[HEADER_SIZE:], dtype="<f8").reshape(ny, nx)
    meta = {"component": comp.rstrip(b"\0").decode(), "nx": nx, "ny": ny,
            "dx": dx, "dy": dy, "t": t, "step": step}
    return data, meta


# --------------------------------------------------------------------- report

@dataclass
class RunReport:
    name: str
    dt: float
    steps: int
    wall_seconds: float = 0.0
    max_hz: float = 0.0
    ledger: dict = field(default_factory=dict)
    violations: int = 0
    diverged: bool = False
    interface_supply_max: float = 0.0
    sar_integral: Optional[float] = None
    files: List[str] = field(default_factory=list)
    probes: Dict[str, ProbeSeries] = field(default_factory=dict, repr=False)
    hz_history: Optional[np.ndarray] = field(default=None, repr=False)
    energy_ledger: Optional[EnergyLedger] = field(default=None, repr=False)
    sar_maps: list = field(default_factory=list, repr=False)

    @property
    def stable(self) -> bool:
        return not self.diverged and self.violations == 0

    def to_dict(self) -> dict:
        return {
            "name": self.name, "dt_s": self.dt, "steps": self.steps,
            "wall_seconds": self.wall_seconds, "max_abs_hz": self.max_hz,
            "ledger": self.ledger, "violations": self.violations,
            "diverged": self.diverged, "interface_supply_max_rel": self.interface_supply_max,
            "sar_integral": self.sar_integral, "files": self.files,
        }

    def lines(self):
        yield f"scenario         : {self.name}"
        yield f"dt               : {self.dt * 1e12:.5f} ps"
        yield f"steps            : {self.steps}"
        yield f"wall time        : {self.wall_seconds:.2f} s"
        yield f"max |Hz|         : {self.max_hz:.6e} A/m"
        yield f"ledger violations: {self.violations}"
        if self.ledger.get("records"):
            yield f"final storage    : {self.ledger['storage_final_J_per_m']:.6e} J/m"
        yield f"interface supply : {self.interface_supply_max:.3e} (relative, max)"
        if self.sar_integral is not None:
            yield f"SAR integral     : {self.sar_integral:.6e} W m^2/kg"
        yield f"diverged         : {self.diverged}"


# ------------------------------------------------------------------ geometry

@dataclass
class _Cells:
    """Per-cell relative properties sampled from the material regions."""

    eps_r: np.ndarray
    mu_r: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray


def sample_materials(cfg: SimulationConfig, grid: GridSpec, x0=0.0, y0=0.0) -> _Cells:
    """Assign each cell the last region containing its centre."""
    xc = x0 + (np.arange(grid.nx) + 0.5) * grid.dx
    yc = y0 + (np.arange(grid.ny) + 0.5) * grid.dy
    x, y = np.meshgrid(xc, yc)
    bg = cfg.background
    cells = _Cells(*(np.full(grid.hz_shape, float(v)) for v in (bg.eps_r, bg.mu_r, bg.sigma, bg.rho)))
    for m in cfg.materials:
        if m.shape == "rect":
            bx0, by0, bx1, by1 = m.box
            inside = (x >= bx0) & (x < bx1) & (y >= by0) & (y < by1)
        else:
            rr = np.hypot(x - m.center[0], y - m.center[1])
            inside = (rr < m.radius) & (rr >= m.inner_radius)
        cells.eps_r[inside] = m.eps_r
        cells.mu_r[inside] = m.mu_r
        cells.sigma[inside] = m.sigma
        cells.rho[inside] = m.rho
    return cells


def _sample_positions(component: str, grid: GridSpec, x0: float, y0: float):
    if component == "hz":
        xs = (np.arange(grid.nx) + 0.5) * grid.dx
        ys = (np.arange(grid.ny) + 0.5) * grid.dy
    elif component == "ex":
        xs = (np.arange(grid.nx) + 0.5) * grid.dx
        ys = np.arange(grid.ny + 1) * grid.dy
    else:
        xs = np.arange(grid.nx + 1) * grid.dx
        ys = (np.arange(grid.ny) + 0.5) * grid.dy
    return x0 + xs, y0 + ys


def _footprint(obj, grid: GridSpec):
    if obj.box is not None:
        return tuple(obj.box)
    x, y = obj.at
    wx, wy = obj.size if obj.size is not None else (grid.dx, grid.dy)
    return (x - wx / 2, y - wy / 2, x + wx / 2, y + wy / 2)


def _select(box, component, grid: GridSpec, x0: float, y0: float):
    xs, ys = _sample_positions(component, grid, x0, y0)
    bx0, by0, bx1, by1 = box
    tol = 1e-9 * min(grid.dx, grid.dy)
    ii = np.nonzero((xs >= bx0 - tol) & (xs < bx1 - tol))[0]
    jj = np.nonzero((ys >= by0 - tol) & (ys < by1 - tol))[0]
    if ii.size == 0 and bx0 == bx1:
        ii = np.array([int(np.argmin(np.abs(xs - bx0)))])
    if jj.size == 0 and by0 == by1:
        jj = np.array([int(np.argmin(np.abs(ys - by0)))])
    return [(int(j), int(i)) for j in jj for i in ii]


# ----------------------------------------------------------------- simulation

class Simulation:
    """A configured coupled coarse/fine simulation ready to step."""

    def __init__(self, cfg: SimulationConfig, dt: Optional[float] = None):
        cfg.validate()
        self.cfg = cfg
        g = cfg.grid
        self.coarse_grid = GridSpec(g.nx, g.ny, g.dx, g.dy)
        self.regions = [SubgridRegion(s.i0, s.j0, s.i1, s.j1, s.r) for s in cfg.subgrids]
        try:
            self.active = coarse_active_mask(self.coarse_grid, self.regions)
        except ConfigurationError as exc:
            raise ConfigurationError(f"subgrids: {exc}") from None

        cc = sample_materials(cfg, self.coarse_grid)
        self.cells = [cc]
        cmat = MaterialMap.from_cells(self.coarse_grid, cc.eps_r, cc.mu_r, cc.sigma,
                                      active=self.active)
        self.pml = None
        if cfg.pml_sides():
            b = cfg.boundary
            self.pml = PmlSpec(b.pml_thickness, b.pml_order, b.pml_r0, b.pml_sigma_max,
                               cfg.pml_sides())
            cmat = with_pml(cmat, self.coarse_grid, self.pml)
        self.fine_grids, fmats = [], []
        for reg in self.regions:
            fg = reg.fine_grid(self.coarse_grid)
            ox, oy = reg.origin(self.coarse_grid)
            fc = sample_materials(cfg, fg, ox, oy)
            self.cells.append(fc)
            self.fine_grids.append(fg)
            fmats.append(MaterialMap.from_cells(fg, fc.eps_r, fc.mu_r, fc.sigma))

        limits = [cfl_per_cell(cmat, self.coarse_grid, self.active)[1]]
        limits += [cfl_per_cell(m, fg)[1] for m, fg in zip(fmats, self.fine_grids)]
        self.dt_limit = float(min(limits))
        if dt is not None:
            self.dt = float(dt)
        elif cfg.dt.policy == "seconds":
            self.dt = float(cfg.dt.value)
        else:
            self.dt = cfg.dt.value * self.dt_limit
        if not self.dt > 0:
            raise ConfigurationError("dt: must be positive")

        self.domain = SubgriddedDomain(self.coarse_grid, cmat, self.regions, fmats, self.dt)
        self.grids = [self.coarse_grid] + self.fine_grids
        self.origins = [(0.0, 0.0)] + [r.origin(self.coarse_grid) for r in self.regions]
        self.cstate, self.fstates = self.domain.new_states()
        self.states = [self.cstate] + self.fstates
        self._init_fields()
        self.sources = [self._place_source(k, s) for k, s in enumerate(cfg.sources)]
        self.probes = [self._place_probe(k, p) for k, p in enumerate(cfg.probes)]

    # -------------------------------------------------------------- placement
    def _host(self, box, path):
        """Index of the grid containing ``box`` (0 is the coarse grid)."""
        cx, cy = 0.5 * (box[0] + box[2]), 0.5 * (box[1] + box[3])
        cg = self.coarse_grid
        for k, reg in enumerate(self.regions, start=1):
            x0, y0 = reg.origin(cg)
            x1, y1 = reg.i1 * cg.dx, reg.j1 * cg.dy
            inside = x0 <= cx < x1 and y0 <= cy < y1
            overlap = box[0] < x1 and box[2] > x0 and box[1] < y1 and box[3] > y0
            if inside:
                if box[0] < x0 or box[2] > x1 or box[1] < y0 or box[3] > y1:
                    raise ConfigurationError(f"{path}: straddles a subgrid interface")
                return k
            if overlap:
                raise ConfigurationError(f"{path}: straddles a subgrid interface")
        return 0

    def _place(self, obj, component, path):
        coarse_box = _footprint(obj, self.coarse_grid)
        k = self._host(coarse_box, path)
        grid = self.grids[k]
        box = _footprint(obj, grid) if obj.box is None and obj.size is None else coarse_box
        nodes = _select(box, component, grid, *self.origins[k])
        if not nodes:
            raise ConfigurationError(f"{path}: selects no grid node")
        return k, nodes

    def _place_source(self, k, s):
        gi, nodes = self._place(s, "hz", f"sources[{k}]")
        if gi == 0 and not all(self.active[j, i] for j, i in nodes):
            raise ConfigurationError(f"sources[{k}]: outside the active region")
        try:
            spec = SourceSpec(nodes=nodes, kind=s.kind, amplitude=s.amplitude, f0=s.f0,
                              hwhm=s.hwhm, delay=s.delay, stop=s.stop)
        except ConfigurationError as exc:
            raise ConfigurationError(f"sources[{k}]: {exc}") from None
        check_source(spec, self.grids[gi], self.domain.regions_all[gi].active)
        return gi, spec

    def _place_probe(self, k, p):
        gi, nodes = self._place(p, p.component, f"probes[{k}]")
        spec = ProbeSpec(nodes=nodes, component=p.component, stride=p.stride, name=p.name)
        spec.check(self.grids[gi])
        return gi, spec

    def _init_fields(self):
        if self.cfg.init.kind == "random":
            rng = np.random.default_rng(self.cfg.seed)
            e = self.cfg.init.scale
            h = e * np.sqrt(EPS0 / MU0)
            for st in self.states:
                st.ex[:] = rng.standard_normal(st.ex.shape) * e
                st.ey[:] = rng.standard_normal(st.ey.shape) * e
                st.hz[:] = rng.standard_normal(st.hz.shape) * h
        self.domain.sync(self.cstate, self.fstates)

    # ------------------------------------------------------------------ run
    def run(self, steps: Optional[int] = None, out_dir=None, threads: Optional[int] = None,
            progress=None) -> RunReport:
        cfg = self.cfg
        steps = cfg.steps if steps is None else int(steps)
        threads = cfg.threads if threads is None else int(threads)
        out = out_dir if out_dir is not None else cfg.output.directory
        out = Path(out) if out is not None else None
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
        dom, dt = self.domain, self.dt
        regions = dom.regions_all
        states = self.states
        pool = ThreadPoolExecutor(threads) if threads > 1 and len(states) > 1 else None

        def each(fn):
            if pool is None:
                for reg, st in zip(regions, states):
                    fn(reg, st)
            else:
                list(pool.map(fn, regions, states))

        use_ledger = cfg.audit.ledger
        use_iface = cfg.audit.interface and bool(self.regions)
        meters = [EnergyMeter(r) for r in regions] if use_ledger else []
        areas = [g.dx * g.dy for g in self.grids]
        ledger = EnergyLedger()
        prev_energy = None
        prev_supply = 0.0
        iface_max = 0.0
        hz_prev = [np.empty_like(st.hz) for st in states] if use_ledger else []

        t_half = (np.arange(steps) + 0.5) * dt
        injectors = []
        for gi, spec in self.sources:
            idx = source_index(spec)
            injectors.append((gi, idx, regions[gi].mat.mu[idx], spec.waveform(t_half)))

        series = {p.name: ProbeSeries() for _, p in self.probes}
        window = cfg.sar.window
        peaks = None
        if window is not None:
            peaks = [(np.zeros_like(st.ex), np.zeros_like(st.ey)) for st in states]
        snap_every = cfg.output.snapshot_every if out is not None else 0
        files: List[str] = []
        hz_hist = np.zeros(steps)
        limit = cfg.audit.divergence_limit
        diverged = False

        t_start = time.perf_counter()
        n = 0
        for n in range(steps):
            if use_ledger:
                for buf, st in zip(hz_prev, states):
                    np.copyto(buf, st.hz)
            each(lambda reg, st: reg.update_h(st))
            if use_ledger:
                energy = sum(m(st, hp, st.hz) for m, st, hp in zip(meters, states, hz_prev))
                if prev_energy is not None:
                    audit_step(ledger, prev_energy, energy, prev_supply, step=n - 1,
                               time=(n - 1) * dt)
                prev_energy = energy
            supply = 0.0
            for gi, idx, mu_n, wave in injectors:
                g = wave[n]
                if g == 0.0:
                    continue
                st = states[gi]
                inc = g * dt / mu_n
                st.hz[idx] += inc
                if use_ledger:
                    supply += source_supply(mu_n, areas[gi], hz_prev[gi][idx], st.hz[idx], inc)
            prev_supply = supply
            each(lambda reg, st: reg.update_e(st))
            for sides, fst in zip(dom.sides, self.fstates):
                for sd in sides:
                    sd.update(self.cstate, fst)
            for st in states:
                st.step += 1
            if use_iface:
                s, scale = dom.interface_supply(self.cstate, self.fstates)
                ref = max(scale, abs(prev_energy) if prev_energy else 0.0, 1e-300)
                iface_max = max(iface_max, abs(s) / ref)

            step = n + 1
            for gi, p in self.probes:
                record_probe(states[gi], p, step, dt, series[p.name])
            if peaks is not None and window[0] <= step * dt <= window[1]:
                for (px, py), st in zip(peaks, states):
                    np.maximum(px, np.abs(st.ex), out=px)
                    np.maximum(py, np.abs(st.ey), out=py)
            if snap_every and step % snap_every == 0:
                files += self._write_snapshots(out, step)
            m = max(max(st.hz.max(), -st.hz.min()) for st in states)
            hz_hist[n] = m
            if not np.isfinite(m) or m > limit:
                diverged = True
                hz_hist = hz_hist[:n + 1]
                break
            if progress is not None:
                progress(step)
        done = (n + 1) if steps else 0
        if use_ledger and prev_energy is not None and not diverged:
            after = self._final_energy(meters)
            audit_step(ledger, prev_energy, after, prev_supply, step=done - 1,
                       time=(done - 1) * dt)
        wall = time.perf_counter() - t_start
        if pool is not None:
            pool.shutdown()

        report = RunReport(name=cfg.name, dt=dt, steps=done, wall_seconds=wall,
                           max_hz=float(np.max(hz_hist)) if hz_hist.size else 0.0,
                           ledger=ledger.summary(), violations=ledger.violations,
                           diverged=diverged, interface_supply_max=iface_max,
                           probes=series, hz_history=hz_hist, energy_ledger=ledger)
        if peaks is not None:
            report.sar_maps = self._sar_maps(peaks)
            report.sar_integral = float(sum(sar_integral(s) for s in report.sar_maps))
        if out is not None:
            files += self._write_outputs(out, report, ledger, series)
            report.files = files
            (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
        return report

    def _final_energy(self, meters) -> float:
        total = 0.0
        for reg, st, m in zip(self.domain.regions_all, self.states, meters):
            tmp = st.copy()
            reg.update_h(tmp)
            total += m(st, st.hz, tmp.hz)
        return total

    def _sar_maps(self, peaks):
        maps = []
        for k, ((px, py), cells) in enumerate(zip(peaks, self.cells)):
            sigma = cells.sigma.copy()
            if k == 0:
                sigma[~self.active] = 0.0
            g = self.grids[k]
            maps.append(compute_sar(px, py, sigma, cells.rho, g.dx, g.dy))
        return maps

    def _write_snapshots(self, out: Path, step: int):
        files = []
        fmt = self.cfg.output.snapshot_format
        ext = "csv" if fmt == "csv" else "bin"
        for k, (st, g) in enumerate(zip(self.states, self.grids)):
            for comp in self.cfg.output.snapshot_components:
                t = (step - 0.5) * self.dt if comp == "hz" else step * self.dt
                p = out / f"snap_g{k}_{comp}_{step:08d}.{ext}"
                write_snapshot(p, getattr(st, comp), comp, g.dx, g.dy, t, step, fmt)
                files.append(p.name)
        return files

    def _write_outputs(self, out: Path, report: RunReport, ledger, series):
        files = []
        if self.cfg.output.ledger and len(ledger):
            ledger.to_csv(out / "ledger.csv")
            files.append("ledger.csv")
        if self.cfg.output.probes:
            for name, s in series.items():
                s.to_csv(out / f"probe_{name}.csv")
                files.append(f"probe_{name}.csv")
        for k, sm in enumerate(report.sar_maps):
            if np.any(sm.sigma > 0):
                np.savetxt(out / f"sar_g{k}.csv", sm.sar, delimiter=",")
                files.append(f"sar_g{k}.csv")
        return files


def run_scenario(cfg: SimulationConfig, steps: Optional[int] = None, out_dir=None,
                 dt: Optional[float] = None, threads: Optional[int] = None) -> RunReport:
    """Build and run a configured scenario; see :class:`Simulation`."""
    return Simulation(cfg, dt=dt).run(steps=steps, out_dir=out_dir, threads=threads)
