"""Coarse/fine grid coupling with a lossless interpolation rule.

A fine region replaces a rectangle of coarse cells with ``r x r`` cells
each.  On the shared boundary the coarse tangential ``E`` is the only state
variable: the ``r`` fine samples along a coarse edge are copies of it, and
the coarse hanging ``Hz`` is the mean of the ``r`` fine hanging samples.
This pair of rules exchanges no energy, and eliminating the hanging
variables gives an explicit update for each coarse interface edge::

    e[n+1] = c_keep * e[n] + c_drive * sign * (mean(h_fine) - h_coarse)

with ``A = (eps + eps_fine / r) / dt``, ``B = (sigma + sigma_fine / r) / 2``,
``c_keep = (A - B) / (A + B)`` and ``c_drive = 2 / (l (A + B))``, where
``l`` is the coarse cell size normal to the edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import ConfigurationError
from .grid import FieldState, GridSpec, MaterialMap, YeeRegion, check_dt

# sign of (mean fine H - coarse H) in the edge update, by side of the fine region
_SIDE_SIGN = {"S": 1.0, "N": -1.0, "W": -1.0, "E": 1.0}


@dataclass(frozen=True)
class SubgridRegion:
    """Fine region covering coarse cells ``[i0, i1) x [j0, j1)``."""

    i0: int
    j0: int
    i1: int
    j1: int
    r: int

    def __post_init__(self):
        for name in ("i0", "j0", "i1", "j1", "r"):
            v = getattr(self, name)
            if int(v) != v:
                raise ConfigurationError(f"{name} must be an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.r < 1:
            raise ConfigurationError(f"refinement ratio must be >= 1, got {self.r}")
        if self.i1 <= self.i0 or self.j1 <= self.j0:
            raise ConfigurationError("subgrid rectangle is empty")

    def fine_grid(self, coarse: GridSpec) -> GridSpec:
        return GridSpec(self.r * (self.i1 - self.i0), self.r * (self.j1 - self.j0),
                        coarse.dx / self.r, coarse.dy / self.r)

    def check_inside(self, coarse: GridSpec) -> None:
        if self.i0 < 1 or self.j0 < 1 or self.i1 > coarse.nx - 1 or self.j1 > coarse.ny - 1:
            raise ConfigurationError(
                f"subgrid [{self.i0},{self.i1})x[{self.j0},{self.j1}) must lie strictly "
                f"inside the {coarse.nx}x{coarse.ny} coarse grid")

    def cells(self):
        return slice(self.j0, self.j1), slice(self.i0, self.i1)

    def origin(self, coarse: GridSpec):
        return self.i0 * coarse.dx, self.j0 * coarse.dy


def coarse_active_mask(coarse: GridSpec, regions: Sequence[SubgridRegion]) -> np.ndarray:
    """Coarse cells that stay in the coarse update; raises on overlaps."""
    active = np.ones(coarse.hz_shape, dtype=bool)
    halo = np.zeros(coarse.hz_shape, dtype=bool)
    for reg in regions:
        reg.check_inside(coarse)
        js, is_ = reg.cells()
        grown = (slice(reg.j0 - 1, reg.j1 + 1), slice(reg.i0 - 1, reg.i1 + 1))
        if np.any(halo[grown]):
            raise ConfigurationError(
                "fine regions overlap or touch; keep at least one coarse cell between them")
        active[js, is_] = False
        halo[js, is_] = True
    return active


def interpolate_e(e_coarse, r: int) -> np.ndarray:
    """Fine interface samples: ``r`` copies of each coarse sample."""
    if int(r) != r or r < 1:
        raise ConfigurationError(f"refinement ratio must be >= 1, got {r!r}")
    e = np.asarray(e_coarse, dtype=float)
    return np.repeat(e[..., None], int(r), axis=-1)


def interpolate_h(h_fine, r: int):
    """Coarse hanging sample: arithmetic mean of ``r`` fine samples."""
    h = np.asarray(h_fine, dtype=float)
    if h.shape[-1] != r:
        raise ConfigurationError(f"expected {r} fine samples per edge, got {h.shape[-1]}")
    return h.mean(axis=-1)


@dataclass(frozen=True)
class InterfaceCoeffs:
    """Precomputed update coefficients of coarse interface edges.

    ``sign`` is ``+1`` when the fine cells lie on the positive side of an
    ``Ex`` edge (north) or the negative side of an ``Ey`` edge (east of the
    fine region); ``-1`` otherwise.
    """

    c_keep: np.ndarray
    c_drive: np.ndarray
    r: int
    side: str = "S"
    sign: float = 1.0


def interface_coeffs(eps, sigma, eps_fine, sigma_fine, r, length, dt, side="S") -> InterfaceCoeffs:
    """Build :class:`InterfaceCoeffs` from coarse and fine edge materials.

    ``eps``/``sigma`` are the coarse half-cell values next to each edge;
    ``eps_fine``/``sigma_fine`` have a trailing axis of length ``r`` with the
    fine boundary edges along the coarse edge.  ``length`` is the coarse
    cell size normal to the edge (``dy`` for ``Ex``, ``dx`` for ``Ey``).
    """
    dt = check_dt(dt)
    eps_hat = interpolate_h(eps_fine, r)
    sig_hat = interpolate_h(sigma_fine, r)
    a = (np.asarray(eps, dtype=float) + eps_hat / r) / dt
    b = (np.asarray(sigma, dtype=float) + sig_hat / r) / 2
    return InterfaceCoeffs(c_keep=(a - b) / (a + b), c_drive=2.0 / (length * (a + b)),
                           r=int(r), side=side, sign=_SIDE_SIGN[side])


def interface_update(e_prev, h_coarse, h_fine, coeffs: InterfaceCoeffs):
    """New coarse interface ``E`` from both neighbouring magnetic fields."""
    h_fine = np.asarray(h_fine, dtype=float)
    if h_fine.shape[-1] != coeffs.r:
        raise ConfigurationError(
            f"coefficients were built for r={coeffs.r}, got {h_fine.shape[-1]} fine samples")
    drive = h_fine.mean(axis=-1) - np.asarray(h_coarse, dtype=float)
    return coeffs.c_keep * np.asarray(e_prev, dtype=float) + coeffs.c_drive * coeffs.sign * drive


def interface_supply(e_coarse, e_fine, h_coarse, h_fine, length, dt, sign=1.0) -> float:
    """Energy (J/m) absorbed by the interpolation rule over one step.

    ``e_coarse`` is the pair ``(E^n, E^{n+1})`` of coarse samples and
    ``e_fine`` the matching pair of fine sample arrays (trailing axis ``r``).
    ``h_coarse`` and ``h_fine`` are the coarse and fine hanging variables.
    ``length`` is the coarse edge length (``dx`` for ``Ex`` edges).  Arrays
    over several edges are summed.
    """
    e0, e1 = (np.asarray(a, dtype=float) for a in e_coarse)
    f0, f1 = (np.asarray(a, dtype=float) for a in e_fine)
    h_fine = np.asarray(h_fine, dtype=float)
    r = h_fine.shape[-1]
    coarse = -dt * length * 0.5 * (e0 + e1) * np.asarray(h_coarse, dtype=float)
    fine = dt * (length / r) * np.sum(0.5 * (f0 + f1) * h_fine, axis=-1)
    return float(sign * np.sum(coarse + fine))


class InterfaceSide:
    """Index bookkeeping for one side of one fine region."""

    def __init__(self, side, reg: SubgridRegion, coarse: GridSpec, fine: GridSpec,
                 cmat: MaterialMap, fmat: MaterialMap, dt):
        self.side = side
        r = reg.r
        self.r = r
        if side in ("S", "N"):
            self.comp = "ex"
            self.length = coarse.dy
            self.edge_len = coarse.dx
            jc = reg.j0 if side == "S" else reg.j1
            jh = reg.j0 - 1 if side == "S" else reg.j1
            jf = 0 if side == "S" else fine.ny
            jfh = 0 if side == "S" else fine.ny - 1
            self.ce = (jc, slice(reg.i0, reg.i1))
            self.ch = (jh, slice(reg.i0, reg.i1))
            self.fe = (jf, slice(None))
            self.fh = (jfh, slice(None))
            eps_c, sig_c = cmat.eps_x[self.ce], cmat.sigma_x[self.ce]
            eps_f, sig_f = fmat.eps_x[self.fe], fmat.sigma_x[self.fe]
        else:
            self.comp = "ey"
            self.length = coarse.dx
            self.edge_len = coarse.dy
            ic = reg.i0 if side == "W" else reg.i1
            ih = reg.i0 - 1 if side == "W" else reg.i1
            if_ = 0 if side == "W" else fine.nx
            ifh = 0 if side == "W" else fine.nx - 1
            self.ce = (slice(reg.j0, reg.j1), ic)
            self.ch = (slice(reg.j0, reg.j1), ih)
            self.fe = (slice(None), if_)
            self.fh = (slice(None), ifh)
            eps_c, sig_c = cmat.eps_y[self.ce], cmat.sigma_y[self.ce]
            eps_f, sig_f = fmat.eps_y[self.fe], fmat.sigma_y[self.fe]
        m = eps_c.size
        self.m = m
        self.coeffs = interface_coeffs(eps_c, sig_c, eps_f.reshape(m, r), sig_f.reshape(m, r),
                                       r, self.length, dt, side=side)
        # terms for reconstructing hanging variables in audits
        self.kc_p = 0.5 * self.length * (eps_c / dt + sig_c / 2)
        self.kc_m = 0.5 * self.length * (eps_c / dt - sig_c / 2)
        ef, sf = eps_f.reshape(m, r), sig_f.reshape(m, r)
        self.kf_p = 0.5 * self.length / r * (ef / dt + sf / 2)
        self.kf_m = 0.5 * self.length / r * (ef / dt - sf / 2)
        self.prev = np.zeros(m)
        self._drive = self.coeffs.c_drive * self.coeffs.sign
        self._buf = np.empty(m)

    def mark_frozen(self, frozen_coarse, frozen_fine):
        frozen_coarse[self.ce] = True
        frozen_fine[self.fe] = True

    def update(self, cst: FieldState, fst: FieldState):
        """Same arithmetic as :func:`interface_update`, on preallocated buffers."""
        ce = getattr(cst, self.comp)[self.ce]
        self.prev[:] = ce
        buf = self._buf
        np.add.reduce(fst.hz[self.fh].reshape(self.m, self.r), axis=1, out=buf)
        buf /= self.r
        buf -= cst.hz[self.ch]
        buf *= self._drive
        ce *= self.coeffs.c_keep
        ce += buf
        getattr(fst, self.comp)[self.fe] = np.repeat(ce, self.r)

    def hanging(self, cst: FieldState, fst: FieldState):
        """Hanging ``Hz`` on both sides, rebuilt from each grid's boundary equation.

        Returns ``(coarse, fine)`` with shapes ``(m,)`` and ``(m, r)``; under
        the interpolation rule ``coarse == fine.mean(axis=1)``.
        """
        e0 = self.prev
        e1 = getattr(cst, self.comp)[self.ce]
        s = self.coeffs.sign
        hang_c = cst.hz[self.ch] + s * (self.kc_p * e1 - self.kc_m * e0)
        hf = fst.hz[self.fh].reshape(self.m, self.r)
        hang_f = hf - s * (self.kf_p * e1[:, None] - self.kf_m * e0[:, None])
        return hang_c, hang_f

    def edge_supply(self, cst: FieldState, fst: FieldState, dt) -> np.ndarray:
        """Per-edge interpolation-rule supply of the last update."""
        e0 = self.prev
        e1 = getattr(cst, self.comp)[self.ce]
        hang_c, hang_f = self.hanging(cst, fst)
        return np.array([
            interface_supply((e0[k], e1[k]), (interpolate_e(e0[k], self.r),
                                              interpolate_e(e1[k], self.r)),
                             hang_c[k], hang_f[k], self.edge_len, dt, sign=self.coeffs.sign)
            for k in range(self.m)])

    def supply(self, cst: FieldState, fst: FieldState, dt) -> float:
        """Interpolation-rule supply of the last update, summed over the side."""
        e0 = self.prev
        e1 = getattr(cst, self.comp)[self.ce]
        hang_c, hang_f = self.hanging(cst, fst)
        return interface_supply((e0, e1), (interpolate_e(e0, self.r), interpolate_e(e1, self.r)),
                                hang_c, hang_f, self.edge_len, dt, sign=self.coeffs.sign)

    def scale(self, cst: FieldState, fst: FieldState, dt) -> float:
        """Magnitude of the individual terms entering :meth:`supply`."""
        e1 = getattr(cst, self.comp)[self.ce]
        e = np.abs(self.prev) + np.abs(e1)
        hc = np.abs(cst.hz[self.ch]) + np.abs(self.kc_p * e1) + np.abs(self.kc_m * self.prev)
        return float(dt * self.edge_len * np.sum(e * hc))


class SubgriddedDomain:
    """A coarse region with embedded fine regions stepped synchronously.

    Parameters
    ----------
    coarse : GridSpec
    coarse_mat : MaterialMap
        Coarse coefficients; build them with ``active=coarse_active_mask(...)``
        so interface edges carry the coarse half-cell material only.
    regions : sequence of SubgridRegion
    fine_mats : sequence of MaterialMap
        One per region, on ``region.fine_grid(coarse)``.
    dt : float
        Common time step; must respect the fine-grid bound.
    pec : sides of the coarse region closed by PEC walls.
    """

    def __init__(self, coarse: GridSpec, coarse_mat: MaterialMap,
                 regions: Sequence[SubgridRegion], fine_mats: Sequence[MaterialMap], dt,
                 pec=("S", "N", "W", "E")):
        if len(regions) != len(fine_mats):
            raise ConfigurationError("one fine material map is needed per region")
        self.dt = check_dt(dt)
        self.coarse_grid = coarse
        self.regions = list(regions)
        self.active = coarse_active_mask(coarse, self.regions)
        frozen_x = np.zeros(coarse.ex_shape, dtype=bool)
        frozen_y = np.zeros(coarse.ey_shape, dtype=bool)
        self.fine_grids: List[GridSpec] = []
        self.fine: List[YeeRegion] = []
        self.sides: List[List[InterfaceSide]] = []
        coarse_mat = coarse_mat.validate(coarse)
        for reg, fmat in zip(self.regions, fine_mats):
            fg = reg.fine_grid(coarse)
            fmat = fmat.validate(fg)
            fx = np.zeros(fg.ex_shape, dtype=bool)
            fy = np.zeros(fg.ey_shape, dtype=bool)
            sides = [InterfaceSide(s, reg, coarse, fg, coarse_mat, fmat, self.dt) for s in ("S", "N", "W", "E")]
            for sd in sides:
                if sd.comp == "ex":
                    sd.mark_frozen(frozen_x, fx)
                else:
                    sd.mark_frozen(frozen_y, fy)
            self.fine_grids.append(fg)
            self.fine.append(YeeRegion(fg, fmat, self.dt, frozen_ex=fx, frozen_ey=fy))
            self.sides.append(sides)
        self.coarse = YeeRegion(coarse, coarse_mat, self.dt, pec=pec, active=self.active,
                                frozen_ex=frozen_x, frozen_ey=frozen_y)

    @property
    def regions_all(self) -> List[YeeRegion]:
        return [self.coarse] + self.fine

    def new_states(self):
        return self.coarse.new_state(), [f.new_state() for f in self.fine]

    def sync(self, cst: FieldState, fsts) -> None:
        """Zero inactive samples and copy coarse interface ``E`` to the fine grids."""
        self.coarse.enforce(cst)
        for sides, fst in zip(self.sides, fsts):
            for sd in sides:
                getattr(fst, sd.comp)[sd.fe] = np.repeat(getattr(cst, sd.comp)[sd.ce], sd.r)

    def update_h(self, cst: FieldState, fsts) -> None:
        self.coarse.update_h(cst)
        for reg, fst in zip(self.fine, fsts):
            reg.update_h(fst)

    def update_e(self, cst: FieldState, fsts) -> None:
        """Interior ``E`` in every grid, then interface ``E`` and fine copies."""
        self.coarse.update_e(cst)
        for reg, fst in zip(self.fine, fsts):
            reg.update_e(fst)
        for sides, fst in zip(self.sides, fsts):
            for sd in sides:
                sd.update(cst, fst)

    def step(self, cst: FieldState, fsts) -> None:
        self.update_h(cst, fsts)
        self.update_e(cst, fsts)
        cst.step += 1
        for fst in fsts:
            fst.step += 1

    def interface_supply(self, cst: FieldState, fsts):
        """Summed interpolation supply of the last step and its magnitude scale."""
        total = 0.0
        scale = 0.0
        for sides, fst in zip(self.sides, fsts):
            for sd in sides:
                total += sd.supply(cst, fst, self.dt)
                scale += sd.scale(cst, fst, self.dt)
        return total, scale


def coupled_step(domain: SubgriddedDomain, coarse_state: FieldState, fine_states) -> None:
    """Advance coarse and fine states by one step in place.

    1. all ``H`` updates; 2. ``E`` strictly inside each grid;
    3. coarse interface ``E``; 4. fine interface ``E`` as copies.
    """
    domain.step(coarse_state, fine_states)
