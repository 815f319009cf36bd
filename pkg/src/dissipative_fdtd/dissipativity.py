"""Stored energy, boundary supply, per-step audits and time-step bounds.

The stored energy of a region at step ``n`` is::

    E(x^n) = 1/2 Ex^T A_x eps_x Ex + 1/2 Ey^T A_y eps_y Ey
           + 1/2 Hz^{n-1/2 T} A mu Hz^{n+1/2}

where ``A_x``, ``A_y`` are the dual-cell areas around each edge.  It equals
``dt/2 x^T R x`` and is non-negative exactly when ``R`` is positive
definite, i.e. when ``dt`` is below ``2 / s_max`` with ``s_max`` the largest
singular value of the scaled curl matrix ``S``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .descriptor import DescriptorSystem, assemble_descriptor, port_product
from .errors import ConvergenceError, MaterialError, StateError
from .grid import FieldState, GridSpec, MaterialMap, check_dt, edge_lengths

TOL_REL = 1e-10
TOL_ABS = 1e-20  # J/m


def storage_energy(state: FieldState, hz_next, mat: MaterialMap, grid: GridSpec, dt,
                   active=None) -> float:
    """Energy per unit height (J/m) stored at step ``n``.

    ``hz_next`` is ``Hz`` at ``n + 1/2`` obtained from ``state`` by a
    source-free update.  ``active`` restricts the sum to the cells of a
    region with holes; the dual areas of its edges shrink accordingly.
    """
    hz_next = np.asarray(hz_next, dtype=float)
    if hz_next.shape != grid.hz_shape or np.shape(state.hz) != grid.hz_shape:
        raise StateError("Hz half-step samples do not match the grid")
    dt = check_dt(dt)
    lpy, lpx = edge_lengths(grid, active)
    we = 0.5 * grid.dx * np.sum(lpy * mat.eps_x * state.ex ** 2)
    we += 0.5 * grid.dy * np.sum(lpx * mat.eps_y * state.ey ** 2)
    area = grid.dx * grid.dy
    hm = state.hz
    sm = mat.sigma_m if mat.sigma_m is not None else 0.0
    wh = (mat.mu + 0.5 * dt * sm) * hz_next + 0.5 * dt * sm * hm
    if active is not None:
        wh = wh * np.asarray(active, dtype=bool)
    return float(we + 0.5 * area * np.sum(hm * wh))


def storage_quadratic(sys: DescriptorSystem, x) -> float:
    """``dt/2 x^T R x`` with ``x = (E^n, H^{n-1/2})``.

    Equals :func:`storage_energy` when there is no magnetic loss.
    """
    x = np.asarray(x, dtype=float)
    return float(0.5 * sys.dt * x @ (sys.r_mat @ x))


def supply_rate(y_n, y_np1, u, grid: GridSpec, dt) -> float:
    """Energy (J/m) absorbed through the four boundaries from ``n`` to ``n+1``.

    Ports are ordered ``(S, N, W, E)``; the signs follow the outward
    normal of each side.
    """
    n = grid.n_ports
    y_n, y_np1, u = (np.asarray(a, dtype=float) for a in (y_n, y_np1, u))
    if y_n.shape != (n,) or y_np1.shape != (n,) or u.shape != (n,):
        raise StateError(f"port vectors must have length {n}")
    nx, ny = grid.nx, grid.ny
    w = np.concatenate([np.full(nx, -grid.dx), np.full(nx, grid.dx),
                        np.full(ny, grid.dy), np.full(ny, -grid.dy)])
    return float(dt * np.sum(0.5 * (y_n + y_np1) * w * u))


def source_supply(mu, area, h_prev, h_next, increment) -> float:
    """Energy injected by an additive ``Hz`` source term.

    ``increment`` is what the source added to ``Hz`` at ``n + 1/2`` and
    ``h_next`` already includes it.
    """
    return float(np.sum(0.5 * mu * area * (h_prev + h_next) * increment))


@dataclass
class EnergyLedger:
    """Per-step record of the dissipation inequality."""

    tol_rel: float = TOL_REL
    tol_abs: float = TOL_ABS
    steps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    storage: list = field(default_factory=list)
    supply: list = field(default_factory=list)
    slack: list = field(default_factory=list)
    violation: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    @property
    def violations(self) -> int:
        return int(sum(self.violation))

    def is_violation(self, before: float, after: float, supply: float) -> bool:
        slack = supply - (after - before)
        return slack < -self.tol_abs - self.tol_rel * abs(before)

    def summary(self) -> dict:
        if not self.steps:
            return {"records": 0, "violations": 0}
        st = np.asarray(self.storage)
        sl = np.asarray(self.slack)
        return {
            "records": len(self.steps),
            "violations": self.violations,
            "storage_min_J_per_m": float(st.min()),
            "storage_max_J_per_m": float(st.max()),
            "storage_final_J_per_m": float(st[-1]),
            "slack_min_J_per_m": float(sl.min()),
        }

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "time_s", "storage_J_per_m", "supply_J_per_m",
                        "slack_J_per_m", "violation"])
            for row in zip(self.steps, self.times, self.storage, self.supply,
                           self.slack, self.violation):
                w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]),
                            repr(row[4]), int(row[5])])
        return path


def audit_step(ledger: EnergyLedger, before: float, after: float, supply: float,
               step: Optional[int] = None, time: float = float("nan")) -> bool:
    """Record ``E(n+1) - E(n) <= s`` for one step and return the violation flag.

    ``before`` is stored as the step's storage value; ``after`` becomes the
    ``before`` of the next call.
    """
    flag = ledger.is_violation(before, after, supply)
    ledger.steps.append(len(ledger.steps) if step is None else int(step))
    ledger.times.append(float(time))
    ledger.storage.append(float(before))
    ledger.supply.append(float(supply))
    ledger.slack.append(float(supply - (after - before)))
    ledger.violation.append(bool(flag))
    return flag


def cfl_per_cell(mat: MaterialMap, grid: GridSpec, active=None):
    """Largest time step keeping every primary cell's energy positive.

    Returns
    -------
    limits : ndarray, shape ``grid.hz_shape``
        Per-cell bound in seconds (``inf`` for inactive cells).
    dt_min : float
        Smallest entry of ``limits``.
    """
    mat = mat.validate(grid)
    inv_ey = 1.0 / mat.eps_y[:, :-1] + 1.0 / mat.eps_y[:, 1:]
    inv_ex = 1.0 / mat.eps_x[:-1] + 1.0 / mat.eps_x[1:]
    rate = (inv_ey / (2 * grid.dx ** 2 * mat.mu) + inv_ex / (2 * grid.dy ** 2 * mat.mu))
    limits = 1.0 / np.sqrt(rate)
    if active is not None:
        limits = np.where(np.asarray(active, dtype=bool), limits, np.inf)
    return limits, float(np.min(limits))


def cfl_uniform(dx, dy, eps_r=1.0, mu_r=1.0) -> float:
    """Closed-form 2D bound for a homogeneous medium."""
    from .constants import EPS0, MU0
    return 1.0 / (np.sqrt(1.0 / (EPS0 * eps_r * MU0 * mu_r)) * np.sqrt(1 / dx ** 2 + 1 / dy ** 2))


def scaled_curl(sys: DescriptorSystem) -> sp.csr_matrix:
    """Matrix ``S`` whose squared singular values bound ``4 / dt^2``."""
    left = sp.diags(1.0 / np.sqrt(sys.area * sys.mu))
    cx = sp.diags(np.sqrt(sys.lx / (sys.lpy * sys.eps_x)))
    cy = sp.diags(np.sqrt(sys.ly / (sys.lpx * sys.eps_y)))
    return (left @ sp.hstack([sys.ops.gy @ cx, -(sys.ops.gx @ cy)])).tocsr()


@dataclass(frozen=True)
class SingularValueEstimate:
    s_max: float
    dt_max: float
    iterations: int
    residual: float
    seed: int


def cfl_global(sys: DescriptorSystem, tol: float = 1e-10, max_iter: int = 100_000,
               seed: int = 20170401) -> SingularValueEstimate:
    """``dt_max = 2 / s_max(S)`` with ``s_max`` from power iteration on ``S S^T``.

    ``S S^T`` is applied as two sparse products and never formed.  The
    iteration stops when the Rayleigh quotient changes by less than
    ``tol`` relative between sweeps.
    """
    s = scaled_curl(sys)
    st = s.T.tocsr()
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(s.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    res = np.inf
    for it in range(1, max_iter + 1):
        w = s @ (st @ v)
        lam_new = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            raise ConvergenceError("S S^T annihilated the iterate", it, np.inf, 0.0)
        if abs(lam_new - lam) <= tol * lam_new:
            res = float(np.linalg.norm(w - lam_new * v) / lam_new)
            lam = lam_new
            break
        lam = lam_new
        v = w / nw
    else:
        res = float(np.linalg.norm(w - lam * v) / lam)
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} sweeps "
            f"(relative residual {res:.3e})", max_iter, res, lam)
    s_max = float(np.sqrt(lam))
    return SingularValueEstimate(s_max=s_max, dt_max=2.0 / s_max, iterations=it,
                                 residual=res, seed=seed)


@dataclass
class StabilityReport:
    r_spd: bool
    losses_ok: bool
    ports_ok: bool
    dt: float
    dt_max_global: float
    dt_max_percell: float
    percell_limits: np.ndarray
    power_iterations: int
    power_seed: int

    @property
    def dissipative(self) -> bool:
        return self.r_spd and self.losses_ok and self.ports_ok

    def lines(self):
        ps = 1e12
        yield f"dt               = {self.dt * ps:.5f} ps"
        yield f"dt_max_global    = {self.dt_max_global * ps:.5f} ps"
        yield f"dt_max_percell   = {self.dt_max_percell * ps:.5f} ps"
        yield f"R symmetric positive definite : {self.r_spd}"
        yield f"non-negative losses           : {self.losses_ok}"
        yield f"B = L L^T B                   : {self.ports_ok}"


def verify_theorem1(sys: DescriptorSystem, mat: MaterialMap, grid: GridSpec, dt=None,
                    **power_kw) -> StabilityReport:
    """Check the three dissipativity conditions for an assembled region."""
    dt = sys.dt if dt is None else check_dt(dt)
    est = cfl_global(sys, **power_kw)
    try:
        limits, dt_cell = cfl_per_cell(mat, grid)
    except MaterialError:
        limits, dt_cell = np.full(grid.hz_shape, np.nan), float("nan")
    losses_ok = bool(np.all(sys.sigma_x >= 0) and np.all(sys.sigma_y >= 0)
                     and np.all(sys.sigma_m >= 0))
    lb = port_product(sys)
    diff = (sys.b_mat - sys.l_mat @ lb)
    ports_ok = diff.count_nonzero() == 0 if diff.nnz else True
    return StabilityReport(
        r_spd=bool(dt < est.dt_max), losses_ok=losses_ok, ports_ok=bool(ports_ok),
        dt=dt, dt_max_global=est.dt_max, dt_max_percell=dt_cell,
        percell_limits=limits, power_iterations=est.iterations, power_seed=est.seed,
    )


def analyze_region(grid: GridSpec, mat: MaterialMap, dt, **power_kw) -> StabilityReport:
    """Assemble and check a region in one call."""
    return verify_theorem1(assemble_descriptor(grid, mat, dt), mat, grid, dt, **power_kw)


class EnergyMeter:
    """Storage function of a :class:`~dissipative_fdtd.grid.YeeRegion` with cached weights."""

    def __init__(self, region):
        g, m, dt = region.grid, region.mat, region.dt
        self.wx = 0.5 * region.ex_area * m.eps_x
        self.wy = 0.5 * region.ey_area * m.eps_y
        area = 0.5 * region.cell_area
        self.wh_next = area * (m.mu + 0.5 * dt * m.sigma_m)
        self.wh_prev = area * 0.5 * dt * m.sigma_m
        self.lossy_h = bool(np.any(m.sigma_m))

    def __call__(self, state: FieldState, hz_prev, hz_next) -> float:
        e = np.vdot(self.wx, state.ex * state.ex) + np.vdot(self.wy, state.ey * state.ey)
        h = np.vdot(hz_prev, self.wh_next * hz_next)
        if self.lossy_h:
            h += np.vdot(hz_prev, self.wh_prev * hz_prev)
        return float(e + h)
