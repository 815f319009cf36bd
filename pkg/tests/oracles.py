"""Reference computations written independently of the package.

Everything here is built from scalar loops or closed forms so it can be
used to check the vectorised and sparse code paths.
"""

import numpy as np

EPS0 = 8.8541878128e-12
MU0 = 1.25663706212e-6
C0 = 299792458.0


def cfl_2d(dx, dy, eps_r=1.0, mu_r=1.0):
    """Classic 2D Courant limit of a homogeneous medium."""
    v = C0 / np.sqrt(eps_r * mu_r)
    return 1.0 / (v * np.sqrt(1.0 / dx ** 2 + 1.0 / dy ** 2))


def random_materials(rng, nx, ny, lossy=True, magnetic_loss=False):
    """Random admissible absolute coefficients on the sample positions."""
    m = {
        "eps_x": EPS0 * rng.uniform(1, 5, (ny + 1, nx)),
        "eps_y": EPS0 * rng.uniform(1, 5, (ny, nx + 1)),
        "sigma_x": rng.uniform(0, 2, (ny + 1, nx)) if lossy else np.zeros((ny + 1, nx)),
        "sigma_y": rng.uniform(0, 2, (ny, nx + 1)) if lossy else np.zeros((ny, nx + 1)),
        "mu": MU0 * rng.uniform(1, 3, (ny, nx)),
        "sigma_m": (rng.uniform(0, 300, (ny, nx)) if magnetic_loss else np.zeros((ny, nx))),
    }
    return m


class DenseRegion:
    """Implicit one-step map ``M1 x1 = M0 x0 + Bu u`` assembled row by row.

    State ordering: ``Ex[j, i]`` (row-major), then ``Ey[j, i]``, then
    ``Hz[j, i]``; inputs ordered ``S (i), N (i), W (j), E (j)``.  Each ``E``
    row is scaled by its edge length and each ``H`` row by the cell area so
    that ``R = (M1 + M0) / 2`` and ``F = (M1 - M0) / 2``.
    """

    def __init__(self, nx, ny, dx, dy, dt, m):
        self.nx, self.ny, self.dx, self.dy, self.dt = nx, ny, dx, dy, dt
        nex, ney, nh = (ny + 1) * nx, ny * (nx + 1), nx * ny
        self.n = n = nex + ney + nh
        self.nu = 2 * nx + 2 * ny
        ex = lambda j, i: j * nx + i
        ey = lambda j, i: nex + j * (nx + 1) + i
        hz = lambda j, i: nex + ney + j * nx + i
        M1 = np.zeros((n, n))
        M0 = np.zeros((n, n))
        Bu = np.zeros((n, self.nu))
        A = dx * dy
        for j in range(ny):
            for i in range(nx):
                r = hz(j, i)
                mu, sm = m["mu"][j, i], m["sigma_m"][j, i]
                M1[r, r] = A * (mu / dt + sm / 2)
                M0[r, r] = A * (mu / dt - sm / 2)
                M0[r, ex(j + 1, i)] += dx
                M0[r, ex(j, i)] -= dx
                M0[r, ey(j, i)] += dy
                M0[r, ey(j, i + 1)] -= dy
        for j in range(ny + 1):
            for i in range(nx):
                r = ex(j, i)
                lp = dy if 0 < j < ny else dy / 2
                e, s = m["eps_x"][j, i], m["sigma_x"][j, i]
                M1[r, r] = dx * lp * (e / dt + s / 2)
                M0[r, r] = dx * lp * (e / dt - s / 2)
                if j < ny:
                    M1[r, hz(j, i)] -= dx
                else:
                    Bu[r, nx + i] += dx
                if j > 0:
                    M1[r, hz(j - 1, i)] += dx
                else:
                    Bu[r, i] -= dx
        for j in range(ny):
            for i in range(nx + 1):
                r = ey(j, i)
                lp = dx if 0 < i < nx else dx / 2
                e, s = m["eps_y"][j, i], m["sigma_y"][j, i]
                M1[r, r] = dy * lp * (e / dt + s / 2)
                M0[r, r] = dy * lp * (e / dt - s / 2)
                if i > 0:
                    M1[r, hz(j, i - 1)] -= dy
                else:
                    Bu[r, 2 * nx + j] += dy
                if i < nx:
                    M1[r, hz(j, i)] += dy
                else:
                    Bu[r, 2 * nx + ny + j] -= dy
        self.M1, self.M0, self.Bu = M1, M0, Bu

    @property
    def R(self):
        return 0.5 * (self.M1 + self.M0)

    @property
    def F(self):
        return 0.5 * (self.M1 - self.M0)

    def step(self, x, u=None):
        rhs = self.M0 @ x
        if u is not None:
            rhs = rhs + self.Bu @ u
        return np.linalg.solve(self.M1, rhs)

    def storage(self, x):
        return 0.5 * self.dt * x @ self.R @ x


def dense_s_max(nx, ny, dx, dy, eps=EPS0, mu=MU0):
    """Largest singular value of the scaled curl of a uniform region (dense SVD)."""
    nex, ney = (ny + 1) * nx, ny * (nx + 1)
    S = np.zeros((nx * ny, nex + ney))
    for j in range(ny):
        for i in range(nx):
            r = j * nx + i
            scale = 1.0 / np.sqrt(dx * dy * mu)
            for jj, sgn in ((j + 1, 1.0), (j, -1.0)):
                lp = dy if 0 < jj < ny else dy / 2
                S[r, jj * nx + i] = sgn * scale * np.sqrt(dx / (lp * eps))
            for ii, sgn in ((i, 1.0), (i + 1, -1.0)):
                lp = dx if 0 < ii < nx else dx / 2
                S[r, nex + j * (nx + 1) + ii] = sgn * scale * np.sqrt(dy / (lp * eps))
    return float(np.linalg.svd(S, compute_uv=False)[0])


def spectrum_peak_and_hwhm(signal, dt, pad=64):
    """Peak frequency and half-width at half maximum of ``|DFT|``."""
    n = len(signal) * pad
    spec = np.abs(np.fft.rfft(signal, n))
    f = np.fft.rfftfreq(n, dt)
    k = int(np.argmax(spec))
    half = spec[k] / 2
    hi = k + int(np.argmax(spec[k:] < half))
    # linear interpolation of the crossing
    f_hi = f[hi - 1] + (half - spec[hi - 1]) * (f[hi] - f[hi - 1]) / (spec[hi] - spec[hi - 1])
    return f[k], f_hi - f[k]
