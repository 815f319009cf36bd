"""Sparse descriptor-system form of the region update.

The leapfrog update of a region with hanging-variable inputs ``u`` and
boundary-field outputs ``y`` is the implicit linear system::

    (R + F) x[n+1] = (R - F) x[n] + B u[n+1/2]
             y[n]  = L^T x[n]

with ``x = [Ex; Ey; Hz]``.  ``R + F`` is upper triangular with a diagonal
block structure, so a step never needs a general sparse solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve_triangular

from .errors import ConfigurationError
from .grid import GridSpec, MaterialMap, check_dt, edge_lengths


def build_difference_matrix(n: int) -> sp.csr_matrix:
    """Signed incidence matrix ``W_n`` of shape ``(n, n+1)``.

    Row ``k`` holds ``-1`` at column ``k`` and ``+1`` at column ``k+1``.
    """
    if int(n) != n or n < 1:
        raise ConfigurationError(f"difference matrix size must be >= 1, got {n!r}")
    n = int(n)
    return sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1), format="csr")


@dataclass(frozen=True)
class DifferenceOperators:
    gx: sp.csr_matrix  # (N_Hz, N_Ey)
    gy: sp.csr_matrix  # (N_Hz, N_Ex)

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "DifferenceOperators":
        gx = sp.kron(sp.identity(grid.ny), build_difference_matrix(grid.nx), format="csr")
        gy = sp.kron(build_difference_matrix(grid.ny), sp.identity(grid.nx), format="csr")
        return cls(gx=gx, gy=gy)


@dataclass(frozen=True)
class PortLayout:
    """Offsets of the S, N, W, E segments inside ``u`` and ``y``."""

    s: slice
    n: slice
    w: slice
    e: slice

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "PortLayout":
        nx, ny = grid.nx, grid.ny
        return cls(slice(0, nx), slice(nx, 2 * nx),
                   slice(2 * nx, 2 * nx + ny), slice(2 * nx + ny, 2 * nx + 2 * ny))


@dataclass(frozen=True)
class DescriptorSystem:
    """Coefficient matrices plus the diagonal factors they were built from.

    The 1D factor arrays follow the state ordering: ``lx``, ``lpy``,
    ``eps_x``, ``sigma_x`` over ``Ex``; ``ly``, ``lpx``, ``eps_y``,
    ``sigma_y`` over ``Ey``; ``area``, ``mu``, ``sigma_m`` over ``Hz``.
    """

    grid: GridSpec
    dt: float
    r_mat: sp.csr_matrix
    f_mat: sp.csr_matrix
    b_mat: sp.csr_matrix
    l_mat: sp.csr_matrix
    ports: PortLayout
    ops: DifferenceOperators
    lx: np.ndarray
    ly: np.ndarray
    lpx: np.ndarray
    lpy: np.ndarray
    area: np.ndarray
    eps_x: np.ndarray
    eps_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    mu: np.ndarray
    sigma_m: np.ndarray

    @property
    def n_states(self) -> int:
        return self.r_mat.shape[0]


def _port_matrices(grid: GridSpec):
    nx, ny = grid.nx, grid.ny
    i = np.arange(nx)
    j = np.arange(ny)
    bs = sp.csr_matrix((-np.ones(nx), (i, i)), shape=(grid.n_ex, nx))
    bn = sp.csr_matrix((np.ones(nx), (ny * nx + i, i)), shape=(grid.n_ex, nx))
    bw = sp.csr_matrix((np.ones(ny), (j * (nx + 1), j)), shape=(grid.n_ey, ny))
    be = sp.csr_matrix((-np.ones(ny), (j * (nx + 1) + nx, j)), shape=(grid.n_ey, ny))
    return bs, bn, bw, be


def assemble_descriptor(grid: GridSpec, mat: MaterialMap, dt) -> DescriptorSystem:
    """Assemble ``R``, ``F``, ``B`` and ``L`` for a rectangular region."""
    dt = check_dt(dt)
    mat = mat.validate(grid)
    ops = DifferenceOperators.for_grid(grid)
    lpy2, lpx2 = edge_lengths(grid)
    lx = np.full(grid.n_ex, grid.dx)
    ly = np.full(grid.n_ey, grid.dy)
    lpy = lpy2.ravel()
    lpx = lpx2.ravel()
    area = np.full(grid.n_hz, grid.dx * grid.dy)
    eps_x, eps_y = mat.eps_x.ravel(), mat.eps_y.ravel()
    sig_x, sig_y = mat.sigma_x.ravel(), mat.sigma_y.ravel()
    mu, sig_m = mat.mu.ravel(), mat.sigma_m.ravel()

    d = sp.diags
    top = 0.5 * d(lx) @ ops.gy.T
    mid = -0.5 * d(ly) @ ops.gx.T
    r_mat = sp.bmat([
        [d(lx * lpy * eps_x / dt), None, top],
        [None, d(ly * lpx * eps_y / dt), mid],
        [top.T, mid.T, d(area * mu / dt)],
    ], format="csr")
    f_mat = sp.bmat([
        [d(lx * lpy * sig_x / 2), None, top],
        [None, d(ly * lpx * sig_y / 2), mid],
        [-top.T, -mid.T, d(area * sig_m / 2)],
    ], format="csr")

    bs, bn, bw, be = _port_matrices(grid)
    zx = sp.csr_matrix((grid.n_ex, grid.ny))
    zy = sp.csr_matrix((grid.n_ey, grid.nx))
    zh_x = sp.csr_matrix((grid.n_hz, grid.nx))
    zh_y = sp.csr_matrix((grid.n_hz, grid.ny))
    b_mat = sp.bmat([
        [d(lx) @ bs, d(lx) @ bn, zx, zx],
        [zy, zy, d(ly) @ bw, d(ly) @ be],
        [zh_x, zh_x, zh_y, zh_y],
    ], format="csr")
    l_mat = sp.bmat([
        [-bs, bn, zx, zx],
        [zy, zy, bw, -be],
        [zh_x, zh_x, zh_y, zh_y],
    ], format="csr")
    return DescriptorSystem(
        grid=grid, dt=dt, r_mat=r_mat, f_mat=f_mat, b_mat=b_mat, l_mat=l_mat,
        ports=PortLayout.for_grid(grid), ops=ops,
        lx=lx, ly=ly, lpx=lpx, lpy=lpy, area=area,
        eps_x=eps_x, eps_y=eps_y, sigma_x=sig_x, sigma_y=sig_y, mu=mu, sigma_m=sig_m,
    )


def port_product(sys: DescriptorSystem, grid: GridSpec | None = None) -> sp.csr_matrix:
    """``L^T B``: block diagonal ``diag(-dx I, +dx I, +dy I, -dy I)``."""
    if grid is not None and grid != sys.grid:
        raise ConfigurationError("grid does not match the assembled system")
    return (sys.l_mat.T @ sys.b_mat).tocsr()


def explicit_step(sys: DescriptorSystem, x, u=None) -> np.ndarray:
    """Solve ``(R + F) x1 = (R - F) x + B u`` by back substitution."""
    x = np.asarray(x, dtype=float)
    rhs = (sys.r_mat - sys.f_mat) @ x
    if u is not None:
        rhs = rhs + sys.b_mat @ np.asarray(u, dtype=float)
    return spsolve_triangular((sys.r_mat + sys.f_mat).tocsr(), rhs, lower=False)


def dump_triplets(matrix, path) -> Path:
    """Write a sparse matrix as ``row col value`` lines (0-based indices)."""
    coo = sp.coo_matrix(matrix)
    path = Path(path)
    data = np.column_stack([coo.row, coo.col, coo.data])
    header = f"shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}"
    np.savetxt(path, data, fmt=["%d", "%d", "%.17g"], header=header)
    return path


def load_triplets(path) -> sp.csr_matrix:
    path = Path(path)
    with path.open() as fh:
        head = fh.readline().lstrip("#").split()
    shape = (int(head[1]), int(head[2]))
    if int(head[4]) == 0:
        return sp.csr_matrix(shape)
    data = np.loadtxt(path, ndmin=2)
    return sp.csr_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))),
                         shape=shape)
