"""Yee-grid storage and leapfrog updates for a rectangular 2D TE region.

Field layout
------------
All fields are 2D C-ordered arrays indexed ``[j, i]`` (row ``j`` along y,
column ``i`` along x), so ``a.ravel()`` runs ``i`` fastest.  This is the
ordering produced by the Kronecker products ``I (x) W`` and ``W (x) I`` used
by :mod:`dissipative_fdtd.descriptor`, so matrix and array forms agree entry
for entry.

====== ============== ==========================================
field  shape          sample location
====== ============== ==========================================
``ex`` ``(ny+1, nx)`` x-directed primary edges, time ``n``
``ey`` ``(ny, nx+1)`` y-directed primary edges, time ``n``
``hz`` ``(ny, nx)``   primary cell centres, time ``n - 1/2``
====== ============== ==========================================

Each of the four region boundaries carries a vector of hanging ``Hz``
samples (``hang_s``, ``hang_n`` of length ``nx``; ``hang_w``, ``hang_e`` of
length ``ny``).  They are the region's inputs; the boundary ``E`` samples are
its outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

import numpy as np

from .constants import EPS0, MU0
from .errors import ConfigurationError, MaterialError, StateError

SIDES = ("S", "N", "W", "E")


def _normalize_sides(sides) -> frozenset:
    if sides is None or sides is False:
        return frozenset()
    if sides is True or sides == "all":
        return frozenset(SIDES)
    if isinstance(sides, str):
        sides = [sides]
    out = set()
    for s in sides:
        key = str(s).strip().upper()[:1]
        if key not in SIDES:
            raise ConfigurationError(f"unknown boundary side {s!r}")
        out.add(key)
    return frozenset(out)


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid of ``nx`` by ``ny`` primary cells."""

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigurationError(f"{name} must be an integer >= 1, got {v!r}")
            object.__setattr__(self, name, int(v))
        for name in ("dx", "dy"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v <= 0:
                raise ConfigurationError(f"{name} must be positive, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def ex_shape(self):
        return (self.ny + 1, self.nx)

    @property
    def ey_shape(self):
        return (self.ny, self.nx + 1)

    @property
    def hz_shape(self):
        return (self.ny, self.nx)

    @property
    def n_ex(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def n_ey(self) -> int:
        return (self.nx + 1) * self.ny

    @property
    def n_hz(self) -> int:
        return self.nx * self.ny

    @property
    def n_states(self) -> int:
        return self.n_ex + self.n_ey + self.n_hz

    @property
    def n_ports(self) -> int:
        return 2 * self.nx + 2 * self.ny

    @property
    def width(self) -> float:
        return self.nx * self.dx

    @property
    def height(self) -> float:
        return self.ny * self.dy

    def cell_centers(self):
        """Return ``(x, y)`` coordinate arrays of shape ``hz_shape``."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y)


def _as_field(a, shape, name, fill=None) -> np.ndarray:
    if a is None:
        if fill is None:
            raise ConfigurationError(f"{name} is required")
        return np.full(shape, float(fill))
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape == shape:
        return arr.copy()
    if arr.ndim == 1 and arr.size == shape[0] * shape[1]:
        return arr.reshape(shape).copy()
    raise ConfigurationError(f"{name} has shape {arr.shape}, expected {shape}")


def edge_lengths(grid: GridSpec, active: Optional[np.ndarray] = None):
    """Secondary-grid lengths crossing each primary edge.

    An edge receives half a cell height (width) from each adjacent *active*
    primary cell, so edges on the region boundary, or next to cells removed
    by ``active``, get the half length ``dy/2`` (``dx/2``).

    Returns
    -------
    lpy : ndarray, shape ``ex_shape``
        Dual length along y for every ``Ex`` edge.
    lpx : ndarray, shape ``ey_shape``
        Dual length along x for every ``Ey`` edge.
    """
    act = np.ones(grid.hz_shape) if active is None else np.asarray(active, dtype=float)
    if act.shape != grid.hz_shape:
        raise ConfigurationError(f"active mask has shape {act.shape}, expected {grid.hz_shape}")
    cnt_x = np.zeros(grid.ex_shape)
    cnt_x[:-1] += act
    cnt_x[1:] += act
    cnt_y = np.zeros(grid.ey_shape)
    cnt_y[:, :-1] += act
    cnt_y[:, 1:] += act
    return 0.5 * grid.dy * cnt_x, 0.5 * grid.dx * cnt_y


def _edge_average(grid: GridSpec, cells: np.ndarray, act: np.ndarray, default: float):
    sx = np.zeros(grid.ex_shape)
    nx_ = np.zeros(grid.ex_shape)
    sx[:-1] += cells * act
    sx[1:] += cells * act
    nx_[:-1] += act
    nx_[1:] += act
    sy = np.zeros(grid.ey_shape)
    ny_ = np.zeros(grid.ey_shape)
    sy[:, :-1] += cells * act
    sy[:, 1:] += cells * act
    ny_[:, :-1] += act
    ny_[:, 1:] += act
    with np.errstate(invalid="ignore", divide="ignore"):
        ex = np.where(nx_ > 0, sx / np.maximum(nx_, 1), default)
        ey = np.where(ny_ > 0, sy / np.maximum(ny_, 1), default)
    return ex, ey


@dataclass
class MaterialMap:
    """Absolute material coefficients sampled where the update needs them.

    ``eps_x``/``sigma_x`` live on ``Ex`` edges, ``eps_y``/``sigma_y`` on
    ``Ey`` edges, ``mu`` and the magnetic conductivity ``sigma_m`` on ``Hz``
    nodes.  ``sigma_m`` is zero for physical media and only becomes non-zero
    inside absorbing layers.
    """

    eps_x: np.ndarray
    eps_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    mu: np.ndarray
    sigma_m: Optional[np.ndarray] = None

    def validate(self, grid: GridSpec) -> "MaterialMap":
        """Coerce arrays to the grid's shapes and check admissibility."""
        self.eps_x = _as_field(self.eps_x, grid.ex_shape, "eps_x")
        self.eps_y = _as_field(self.eps_y, grid.ey_shape, "eps_y")
        self.sigma_x = _as_field(self.sigma_x, grid.ex_shape, "sigma_x", fill=0.0)
        self.sigma_y = _as_field(self.sigma_y, grid.ey_shape, "sigma_y", fill=0.0)
        self.mu = _as_field(self.mu, grid.hz_shape, "mu")
        self.sigma_m = _as_field(self.sigma_m, grid.hz_shape, "sigma_m", fill=0.0)
        for name in ("eps_x", "eps_y", "mu"):
            a = getattr(self, name)
            if not np.all(np.isfinite(a)) or np.any(a <= 0):
                raise MaterialError(f"{name} must be strictly positive everywhere")
        for name in ("sigma_x", "sigma_y", "sigma_m"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise MaterialError(f"{name} must be finite")
        return self

    def has_negative_losses(self) -> bool:
        return bool(
            np.any(self.sigma_x < 0) or np.any(self.sigma_y < 0)
            or np.any(self.sigma_m < 0)
        )

    def copy(self) -> "MaterialMap":
        return MaterialMap(*(np.array(getattr(self, f)) for f in
                             ("eps_x", "eps_y", "sigma_x", "sigma_y", "mu", "sigma_m")))

    @classmethod
    def uniform(cls, grid: GridSpec, eps_r=1.0, mu_r=1.0, sigma=0.0) -> "MaterialMap":
        return cls(
            eps_x=np.full(grid.ex_shape, EPS0 * eps_r),
            eps_y=np.full(grid.ey_shape, EPS0 * eps_r),
            sigma_x=np.full(grid.ex_shape, float(sigma)),
            sigma_y=np.full(grid.ey_shape, float(sigma)),
            mu=np.full(grid.hz_shape, MU0 * mu_r),
        ).validate(grid)

    @classmethod
    def from_cells(cls, grid: GridSpec, eps_r=1.0, mu_r=1.0, sigma=0.0,
                   sigma_m=0.0, active=None) -> "MaterialMap":
        """Build edge coefficients from per-cell relative properties.

        An edge takes the arithmetic mean over its (one or two) adjacent
        active cells.  Edges with no active neighbour get vacuum values;
        they are never updated.
        """
        shape = grid.hz_shape
        eps_c = EPS0 * _as_field(eps_r, shape, "eps_r")
        sig_c = _as_field(sigma, shape, "sigma")
        act = np.ones(shape) if active is None else np.asarray(active, dtype=float)
        eps_x, eps_y = _edge_average(grid, eps_c, act, EPS0)
        sig_x, sig_y = _edge_average(grid, sig_c, act, 0.0)
        return cls(
            eps_x=eps_x, eps_y=eps_y, sigma_x=sig_x, sigma_y=sig_y,
            mu=MU0 * _as_field(mu_r, shape, "mu_r"),
            sigma_m=_as_field(sigma_m, shape, "sigma_m"),
        ).validate(grid)


@dataclass
class FieldState:
    """Field samples of one region: ``E`` at step ``n``, ``Hz`` at ``n - 1/2``.

    The hanging variables hold the boundary ``Hz`` inputs for the half step
    ``n + 1/2``; ``None`` means "not supplied".
    """

    ex: np.ndarray
    ey: np.ndarray
    hz: np.ndarray
    hang_s: Optional[np.ndarray] = None
    hang_n: Optional[np.ndarray] = None
    hang_w: Optional[np.ndarray] = None
    hang_e: Optional[np.ndarray] = None
    step: int = 0

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FieldState":
        return cls(
            ex=np.zeros(grid.ex_shape), ey=np.zeros(grid.ey_shape),
            hz=np.zeros(grid.hz_shape),
            hang_s=np.zeros(grid.nx), hang_n=np.zeros(grid.nx),
            hang_w=np.zeros(grid.ny), hang_e=np.zeros(grid.ny),
        )

    @classmethod
    def random(cls, grid: GridSpec, rng, e_scale=1.0, h_scale=None) -> "FieldState":
        if h_scale is None:
            h_scale = e_scale * np.sqrt(EPS0 / MU0)
        st = cls.zeros(grid)
        st.ex[:] = rng.standard_normal(grid.ex_shape) * e_scale
        st.ey[:] = rng.standard_normal(grid.ey_shape) * e_scale
        st.hz[:] = rng.standard_normal(grid.hz_shape) * h_scale
        return st

    def check(self, grid: GridSpec) -> None:
        for name, shape in (("ex", grid.ex_shape), ("ey", grid.ey_shape),
                            ("hz", grid.hz_shape)):
            a = getattr(self, name)
            if a is None or np.shape(a) != shape:
                raise ConfigurationError(
                    f"{name} has shape {np.shape(a)}, expected {shape}")
        for name, n in (("hang_s", grid.nx), ("hang_n", grid.nx),
                        ("hang_w", grid.ny), ("hang_e", grid.ny)):
            a = getattr(self, name)
            if a is not None and np.shape(a) != (n,):
                raise ConfigurationError(f"{name} has shape {np.shape(a)}, expected ({n},)")

    def copy(self) -> "FieldState":
        def cp(a):
            return None if a is None else np.array(a, dtype=float)
        return replace(self, ex=cp(self.ex), ey=cp(self.ey), hz=cp(self.hz),
                       hang_s=cp(self.hang_s), hang_n=cp(self.hang_n),
                       hang_w=cp(self.hang_w), hang_e=cp(self.hang_e))

    def vector(self) -> np.ndarray:
        """State vector ``[Ex; Ey; Hz]`` in descriptor ordering."""
        return np.concatenate([self.ex.ravel(), self.ey.ravel(), self.hz.ravel()])

    @classmethod
    def from_vector(cls, grid: GridSpec, x) -> "FieldState":
        x = np.asarray(x, dtype=float)
        if x.shape != (grid.n_states,):
            raise ConfigurationError(f"state vector has shape {x.shape}, expected ({grid.n_states},)")
        a, b = grid.n_ex, grid.n_ex + grid.n_ey
        st = cls.zeros(grid)
        st.ex[:] = x[:a].reshape(grid.ex_shape)
        st.ey[:] = x[a:b].reshape(grid.ey_shape)
        st.hz[:] = x[b:].reshape(grid.hz_shape)
        return st

    def outputs(self) -> np.ndarray:
        """Boundary electric fields ``[E_S; E_N; E_W; E_E]``."""
        return np.concatenate([self.ex[0], self.ex[-1], self.ey[:, 0], self.ey[:, -1]])

    def inputs(self) -> np.ndarray:
        """Hanging variables ``[H_S; H_N; H_W; H_E]`` (missing ones as zeros)."""
        nx, ny = self.hz.shape[1], self.hz.shape[0]
        parts = []
        for a, n in ((self.hang_s, nx), (self.hang_n, nx), (self.hang_w, ny), (self.hang_e, ny)):
            parts.append(np.zeros(n) if a is None else np.asarray(a, dtype=float))
        return np.concatenate(parts)

    def set_inputs(self, u) -> None:
        nx, ny = self.hz.shape[1], self.hz.shape[0]
        u = np.asarray(u, dtype=float)
        if u.shape != (2 * nx + 2 * ny,):
            raise ConfigurationError(f"input vector has shape {u.shape}")
        self.hang_s = u[:nx].copy()
        self.hang_n = u[nx:2 * nx].copy()
        self.hang_w = u[2 * nx:2 * nx + ny].copy()
        self.hang_e = u[2 * nx + ny:].copy()

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.ex)), np.max(np.abs(self.ey)),
                         np.max(np.abs(self.hz))))


def check_dt(dt) -> float:
    dt = float(dt)
    if not np.isfinite(dt) or dt <= 0:
        raise ConfigurationError(f"time step must be positive, got {dt!r}")
    return dt


class YeeRegion:
    """Precomputed leapfrog coefficients for one rectangular region.

    Parameters
    ----------
    grid, mat, dt
        Geometry, materials and time step.
    pec : iterable of {"S", "N", "W", "E"} or bool
        Sides closed by a perfect electric conductor.  Their boundary ``E``
        samples are pinned to zero and their hanging variables are ignored.
    active : bool array of shape ``grid.hz_shape``, optional
        Cells that belong to the region.  Inactive cells keep ``Hz = 0`` and
        edges with no active neighbour keep ``E = 0``; edges with a single
        active neighbour get half-cell dual lengths.
    frozen_ex, frozen_ey : bool arrays, optional
        Edges whose value is owned by another update (subgrid interfaces).
        The standard update leaves them untouched.
    """

    def __init__(self, grid: GridSpec, mat: MaterialMap, dt, pec=(),
                 active=None, frozen_ex=None, frozen_ey=None):
        self.grid = grid
        self.mat = mat.validate(grid)
        self.dt = dt = check_dt(dt)
        self.pec = _normalize_sides(pec)
        self.active = (np.ones(grid.hz_shape, dtype=bool) if active is None
                       else np.asarray(active, dtype=bool))
        self.lpy, self.lpx = edge_lengths(grid, self.active)
        dx, dy = grid.dx, grid.dy

        hp = mat.mu / dt + mat.sigma_m / 2
        hm = mat.mu / dt - mat.sigma_m / 2
        self.da = np.where(self.active, hm / hp, 0.0)
        db = np.where(self.active, 1.0 / (dx * dy * hp), 0.0)
        self.db_x = db * dx
        self.db_y = db * dy

        own_x = self.lpy > 0
        own_y = self.lpx > 0
        if "S" in self.pec:
            own_x[0] = False
        if "N" in self.pec:
            own_x[-1] = False
        if "W" in self.pec:
            own_y[:, 0] = False
        if "E" in self.pec:
            own_y[:, -1] = False
        keep_x = np.zeros(grid.ex_shape, dtype=bool)
        keep_y = np.zeros(grid.ey_shape, dtype=bool)
        if frozen_ex is not None:
            keep_x = np.asarray(frozen_ex, dtype=bool)
            own_x &= ~keep_x
        if frozen_ey is not None:
            keep_y = np.asarray(frozen_ey, dtype=bool)
            own_y &= ~keep_y
        self.owned_ex, self.owned_ey = own_x, own_y

        ep = mat.eps_x / dt + mat.sigma_x / 2
        em = mat.eps_x / dt - mat.sigma_x / 2
        with np.errstate(divide="ignore"):
            self.ca_x = np.where(own_x, em / ep, np.where(keep_x, 1.0, 0.0))
            self.cb_x = np.where(own_x, 1.0 / (np.where(own_x, self.lpy, 1.0) * ep), 0.0)
        ep = mat.eps_y / dt + mat.sigma_y / 2
        em = mat.eps_y / dt - mat.sigma_y / 2
        with np.errstate(divide="ignore"):
            self.ca_y = np.where(own_y, em / ep, np.where(keep_y, 1.0, 0.0))
            self.cb_y = np.where(own_y, 1.0 / (np.where(own_y, self.lpx, 1.0) * ep), 0.0)

        self._owned_sides = {side: self._side_owned(side) for side in SIDES}
        self._zeros = {"S": np.zeros(grid.nx), "N": np.zeros(grid.nx),
                       "W": np.zeros(grid.ny), "E": np.zeros(grid.ny)}
        self._hbuf = np.empty(grid.hz_shape)
        self._hbuf2 = np.empty(grid.hz_shape)
        self._xbuf = np.empty(grid.ex_shape)
        self._ybuf = np.empty(grid.ey_shape)

    # energy weights used by the storage function
    @property
    def ex_area(self):
        return self.grid.dx * self.lpy

    @property
    def ey_area(self):
        return self.grid.dy * self.lpx

    @property
    def cell_area(self):
        return self.grid.dx * self.grid.dy * self.active

    def new_state(self) -> FieldState:
        return FieldState.zeros(self.grid)

    def enforce(self, st: FieldState) -> None:
        """Zero every sample the region does not own (PEC walls, dead edges)."""
        st.ex[(self.ca_x == 0) & (self.cb_x == 0)] = 0.0
        st.ey[(self.ca_y == 0) & (self.cb_y == 0)] = 0.0
        st.hz[~self.active] = 0.0

    def update_h(self, st: FieldState) -> None:
        """Advance ``Hz`` from ``n - 1/2`` to ``n + 1/2`` in place."""
        curl = self._hbuf
        tmp = self._hbuf2
        np.subtract(st.ex[1:], st.ex[:-1], out=curl)
        curl *= self.db_x
        np.subtract(st.ey[:, :-1], st.ey[:, 1:], out=tmp)
        tmp *= self.db_y
        curl += tmp
        st.hz *= self.da
        st.hz += curl

    def update_e(self, st: FieldState) -> None:
        """Advance ``Ex``, ``Ey`` from ``n`` to ``n + 1`` in place.

        Interior rows are written before boundary rows; rows are
        independent so the order does not affect the result.
        """
        hz = st.hz
        hs, hn, hw, he = self._hanging(st)
        bx = self._xbuf
        np.subtract(hz[1:], hz[:-1], out=bx[1:-1])
        np.subtract(hz[0], hs, out=bx[0])
        np.subtract(hn, hz[-1], out=bx[-1])
        bx *= self.cb_x
        st.ex *= self.ca_x
        st.ex += bx
        by = self._ybuf
        np.subtract(hz[:, :-1], hz[:, 1:], out=by[:, 1:-1])
        np.subtract(hw, hz[:, 0], out=by[:, 0])
        np.subtract(hz[:, -1], he, out=by[:, -1])
        by *= self.cb_y
        st.ey *= self.ca_y
        st.ey += by

    def _hanging(self, st: FieldState):
        out = []
        for side, a, n in (("S", st.hang_s, self.grid.nx), ("N", st.hang_n, self.grid.nx),
                           ("W", st.hang_w, self.grid.ny), ("E", st.hang_e, self.grid.ny)):
            if a is None:
                if side in self.pec or not self._owned_sides[side]:
                    a = self._zeros[side]
                else:
                    raise StateError(f"hanging variables on side {side} are required")
            out.append(a)
        return out

    def _side_owned(self, side) -> bool:
        if side == "S":
            return bool(np.any(self.cb_x[0]))
        if side == "N":
            return bool(np.any(self.cb_x[-1]))
        if side == "W":
            return bool(np.any(self.cb_y[:, 0]))
        return bool(np.any(self.cb_y[:, -1]))

    def step(self, st: FieldState) -> None:
        """One full leapfrog step in place."""
        self.update_h(st)
        self.update_e(st)
        st.step += 1


def update_hz(state: FieldState, mat: MaterialMap, grid: GridSpec, dt) -> np.ndarray:
    """Return ``Hz`` at ``n + 1/2`` without modifying ``state``."""
    state.check(grid)
    region = YeeRegion(grid, mat, dt)
    st = state.copy()
    region.update_h(st)
    return st.hz


def update_e(state: FieldState, mat: MaterialMap, grid: GridSpec, dt, pec=()):
    """Return ``(Ex, Ey)`` at ``n + 1`` given ``Hz`` already at ``n + 1/2``."""
    state.check(grid)
    region = YeeRegion(grid, mat, dt, pec=pec)
    st = state.copy()
    region.update_e(st)
    return st.ex, st.ey


def leapfrog_step(state: FieldState, mat: MaterialMap, grid: GridSpec, dt,
                  pec: Iterable[str] = ()) -> FieldState:
    """Return the state one full step later (``H`` update, then ``E``)."""
    state.check(grid)
    region = YeeRegion(grid, mat, dt, pec=pec)
    st = state.copy()
    region.enforce(st)
    region.step(st)
    return st
