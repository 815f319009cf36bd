"""Graded absorbing layers, soft magnetic-current sources and field probes.

The absorbing layer is a matched lossy medium: electric conductivity
``sigma(d) = sigma_max (d / depth)^m`` grows polynomially with the distance
``d`` into the layer, and the magnetic conductivity is ``sigma mu0 / eps0``
so that the wave impedance stays equal to that of vacuum.  Both losses are
non-negative, so the layer is handled by the ordinary lossy update and
remains dissipative under the same time-step bound as the interior.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .constants import C0, EPS0, MU0
from .errors import ConfigurationError
from .grid import SIDES, FieldState, GridSpec, MaterialMap, YeeRegion, _normalize_sides


@dataclass(frozen=True)
class PmlSpec:
    """Absorbing layer of ``thickness`` cells on the listed sides.

    ``sigma_max`` defaults to ``-(m + 1) ln(r0) eps0 c / (2 depth)`` with
    ``depth`` the physical layer thickness.  Passing ``sigma_max=0`` gives a
    transparent layer.
    """

    thickness: int = 15
    order: float = 3.0
    r0: float = 1e-6
    sigma_max: Optional[float] = None
    sides: Tuple[str, ...] = SIDES

    def __post_init__(self):
        if int(self.thickness) != self.thickness or self.thickness < 4:
            raise ConfigurationError(
                f"absorbing layer must be at least 4 cells thick, got {self.thickness!r}")
        object.__setattr__(self, "thickness", int(self.thickness))
        if not 2.0 <= float(self.order) <= 4.0:
            raise ConfigurationError(f"grading order must lie in [2, 4], got {self.order!r}")
        if not 0.0 < float(self.r0) < 1.0:
            raise ConfigurationError(f"target reflection must lie in (0, 1), got {self.r0!r}")
        if self.sigma_max is not None and not float(self.sigma_max) >= 0:
            raise ConfigurationError(f"sigma_max must be >= 0, got {self.sigma_max!r}")
        object.__setattr__(self, "sides", tuple(sorted(_normalize_sides(self.sides))))

    def peak_conductivity(self, cell: float) -> float:
        if self.sigma_max is not None:
            return float(self.sigma_max)
        depth = self.thickness * cell
        return -(self.order + 1) * np.log(self.r0) * EPS0 * C0 / (2 * depth)


def grading_profile(depth_frac, sigma_max: float, order: float) -> np.ndarray:
    """Conductivity at normalised depth ``d / depth`` (0 at the inner face)."""
    d = np.clip(np.asarray(depth_frac, dtype=float), 0.0, 1.0)
    return sigma_max * d ** order


def _side_conductivity(spec: PmlSpec, grid: GridSpec, x, y) -> np.ndarray:
    out = np.zeros(np.broadcast(x, y).shape)
    for side in spec.sides:
        if side in ("W", "E"):
            cell, coord, extent = grid.dx, x, grid.width
        else:
            cell, coord, extent = grid.dy, y, grid.height
        depth = spec.thickness * cell
        if side in ("W", "S"):
            d = depth - coord
        else:
            d = coord - (extent - depth)
        out = out + grading_profile(np.maximum(d, 0.0) / depth,
                                    spec.peak_conductivity(cell), spec.order)
    return out


def pml_conductivity(spec: PmlSpec, grid: GridSpec):
    """Layer conductivities sampled at ``Ex``, ``Ey`` and ``Hz`` positions.

    Returns ``(sigma_x, sigma_y, sigma_h)``; ``sigma_h`` is electric
    conductivity at cell centres, to be scaled by ``mu0 / eps0``.
    Contributions of crossing layers add up in the corners.
    """
    xs = (np.arange(grid.nx) + 0.5) * grid.dx
    ys = (np.arange(grid.ny) + 0.5) * grid.dy
    xn = np.arange(grid.nx + 1) * grid.dx
    yn = np.arange(grid.ny + 1) * grid.dy
    sx = _side_conductivity(spec, grid, xs[None, :], yn[:, None])
    sy = _side_conductivity(spec, grid, xn[None, :], ys[:, None])
    sh = _side_conductivity(spec, grid, xs[None, :], ys[:, None])
    return sx, sy, sh


def with_pml(mat: MaterialMap, grid: GridSpec, spec: Optional[PmlSpec]) -> MaterialMap:
    """Return a copy of ``mat`` with the graded layer losses added."""
    out = mat.copy().validate(grid)
    if spec is None:
        return out
    sx, sy, sh = pml_conductivity(spec, grid)
    out.sigma_x = out.sigma_x + sx
    out.sigma_y = out.sigma_y + sy
    out.sigma_m = out.sigma_m + sh * MU0 / EPS0
    return out.validate(grid)


def pml_interior(spec: Optional[PmlSpec], grid: GridSpec) -> Tuple[int, int, int, int]:
    """Cell index box ``(i0, j0, i1, j1)`` left free of absorbing losses."""
    if spec is None:
        return 0, 0, grid.nx, grid.ny
    t = spec.thickness
    s = set(spec.sides)
    return (t if "W" in s else 0, t if "S" in s else 0,
            grid.nx - t if "E" in s else grid.nx, grid.ny - t if "N" in s else grid.ny)


def pml_update(region: YeeRegion, state: FieldState) -> None:
    """Advance a region whose coefficients include absorbing-layer losses.

    The layer is a lossy medium, so the step is the ordinary one; with zero
    conductivity it is the interior update bit for bit.
    """
    region.step(state)


# ---------------------------------------------------------------- sources

SOURCE_KINDS = ("gaussian", "sinusoid")


@dataclass(frozen=True)
class SourceSpec:
    """Soft ``Hz`` source driving the listed cells with one waveform.

    Parameters
    ----------
    nodes : sequence of ``(j, i)``
        ``Hz`` indices that receive the source term.
    kind : {"gaussian", "sinusoid"}
    amplitude : float
        Peak magnetic current density.
    f0 : float
        Carrier frequency in Hz.
    hwhm : float
        Spectral half-width at half-maximum (Gaussian kind).
    delay : float, optional
        Time of the Gaussian peak; defaults to five envelope widths.  For
        the sinusoid kind it is the length of the raised-cosine ramp
        (three periods by default).
    stop : float, optional
        Turn-off time.  The Gaussian kind is always cut at ``2 * delay``.
    """

    nodes: Tuple[Tuple[int, int], ...]
    kind: str = "gaussian"
    amplitude: float = 1.0
    f0: float = 1e9
    hwhm: float = 0.0
    delay: Optional[float] = None
    stop: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ConfigurationError(f"unknown source kind {self.kind!r}")
        if not float(self.f0) > 0:
            raise ConfigurationError(f"source frequency must be positive, got {self.f0!r}")
        if self.kind == "gaussian":
            if not float(self.hwhm) > 0:
                raise ConfigurationError("Gaussian sources need a positive half-width")
            if self.delay is not None and self.delay < 5 * self.tau * (1 - 1e-12):
                raise ConfigurationError(
                    f"delay {self.delay!r} s is shorter than five envelope widths")
        nodes = tuple((int(j), int(i)) for j, i in self.nodes)
        if not nodes:
            raise ConfigurationError("a source needs at least one node")
        object.__setattr__(self, "nodes", nodes)

    @property
    def tau(self) -> float:
        """Envelope width whose spectral magnitude has the requested HWHM."""
        return np.sqrt(2 * np.log(2)) / (2 * np.pi * self.hwhm)

    @property
    def t0(self) -> float:
        if self.kind == "gaussian":
            return 5 * self.tau if self.delay is None else float(self.delay)
        return 3.0 / self.f0 if self.delay is None else float(self.delay)

    @property
    def t_off(self) -> float:
        if self.kind == "gaussian":
            end = 2 * self.t0
            return end if self.stop is None else min(end, float(self.stop))
        return np.inf if self.stop is None else float(self.stop)

    def waveform(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        t0 = self.t0
        if self.kind == "gaussian":
            s = t - t0
            g = self.amplitude * np.exp(-s ** 2 / (2 * self.tau ** 2)) * np.cos(2 * np.pi * self.f0 * s)
        else:
            ramp = np.where(t < t0, 0.5 * (1 - np.cos(np.pi * np.clip(t, 0, None) / t0)), 1.0)
            g = self.amplitude * ramp * np.sin(2 * np.pi * self.f0 * t)
        return np.where((t >= 0) & (t < self.t_off), g, 0.0)


def source_index(spec: SourceSpec):
    js = np.array([n[0] for n in spec.nodes])
    is_ = np.array([n[1] for n in spec.nodes])
    return js, is_


def check_source(spec: SourceSpec, grid: GridSpec, active=None) -> None:
    js, is_ = source_index(spec)
    if np.any(js < 0) or np.any(js >= grid.ny) or np.any(is_ < 0) or np.any(is_ >= grid.nx):
        raise ConfigurationError("source node lies outside the grid")
    if active is not None and not np.all(np.asarray(active, dtype=bool)[js, is_]):
        raise ConfigurationError("source node lies outside the active region")


def inject_source(state: FieldState, spec: SourceSpec, n: int, dt: float, mu,
                  active=None) -> np.ndarray:
    """Add the source term for half step ``n + 1/2`` to ``state.hz``.

    ``mu`` is the permeability map (or a scalar).  Returns the increments
    added at ``spec.nodes`` so callers can account for the injected energy.
    """
    check_source(spec, GridSpec(state.hz.shape[1], state.hz.shape[0], 1.0, 1.0), active)
    js, is_ = source_index(spec)
    g = float(spec.waveform((n + 0.5) * dt))
    mu_n = np.broadcast_to(np.asarray(mu, dtype=float), state.hz.shape)[js, is_]
    inc = g * dt / mu_n
    np.add.at(state.hz, (js, is_), inc)
    return inc


# ----------------------------------------------------------------- probes

PROBE_COMPONENTS = ("hz", "ex", "ey")


@dataclass(frozen=True)
class ProbeSpec:
    """Point or averaged field sample recorded every ``stride`` steps.

    ``nodes`` index the chosen component's array; several nodes are averaged.
    """

    nodes: Tuple[Tuple[int, int], ...]
    component: str = "hz"
    stride: int = 1
    name: str = "probe"

    def __post_init__(self):
        comp = str(self.component).lower()
        if comp not in PROBE_COMPONENTS:
            raise ConfigurationError(f"unknown probe component {self.component!r}")
        object.__setattr__(self, "component", comp)
        if int(self.stride) != self.stride or self.stride < 1:
            raise ConfigurationError(f"probe stride must be >= 1, got {self.stride!r}")
        nodes = tuple((int(j), int(i)) for j, i in self.nodes)
        if not nodes:
            raise ConfigurationError("a probe needs at least one node")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_idx", (np.array([n[0] for n in nodes]),
                                          np.array([n[1] for n in nodes])))

    def check(self, grid: GridSpec) -> None:
        shape = {"hz": grid.hz_shape, "ex": grid.ex_shape, "ey": grid.ey_shape}[self.component]
        js, is_ = self._idx
        if np.any(js < 0) or np.any(js >= shape[0]) or np.any(is_ < 0) or np.any(is_ >= shape[1]):
            raise ConfigurationError(f"probe {self.name!r} lies outside the grid")


@dataclass
class ProbeSeries:
    times: list = field(default_factory=list)
    values: list = field(default_factory=list)

    def arrays(self):
        return np.asarray(self.times), np.asarray(self.values)

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time_s", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(t), repr(v)])
        return path


def probe_time(component: str, n: int, dt: float) -> float:
    """Sample time of a field stored at step ``n`` (``Hz`` lags by half a step)."""
    return (n - 0.5) * dt if component == "hz" else n * dt


def record_probe(state: FieldState, spec: ProbeSpec, n: int, dt: float,
                 series: Optional[ProbeSeries] = None):
    """Read one sample of ``state`` taken at step ``n``.

    Returns ``(time, value)``, or ``None`` when ``n`` is off the stride.
    The sample is appended to ``series`` when given.
    """
    if n % spec.stride:
        return None
    js, is_ = spec._idx
    v = float(np.mean(getattr(state, spec.component)[js, is_]))
    t = probe_time(spec.component, n, dt)
    if series is not None:
        series.times.append(t)
        series.values.append(v)
    return t, v


def read_probe_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


# ------------------------------------------------------- post-processing

@dataclass(frozen=True)
class ReflectionSpectrum:
    freqs: np.ndarray
    reflected: np.ndarray
    incident: np.ndarray
    ratio: np.ndarray

    def ratio_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 10 * np.log10(self.ratio)


def compute_reflection(total, incident, dt, f_max=30e9, f_min=0.0, pad=1) -> ReflectionSpectrum:
    """Reflected-to-incident power ratio from total and incident probe series.

    The reflected series is ``total - incident``.  ``pad`` zero-pads the
    series to ``pad`` times its length before the DFT.
    """
    total = np.asarray(total, dtype=float)
    incident = np.asarray(incident, dtype=float)
    if total.shape != incident.shape or total.ndim != 1:
        raise ConfigurationError(
            f"series lengths differ: {total.shape} vs {incident.shape}")
    n = total.size * max(int(pad), 1)
    refl = np.fft.rfft(total - incident, n)
    inc = np.fft.rfft(incident, n)
    f = np.fft.rfftfreq(n, dt)
    band = (f >= f_min) & (f <= f_max)
    r = np.abs(refl[band]) ** 2
    i = np.abs(inc[band]) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(i > 0, r / np.where(i > 0, i, 1.0), np.where(r > 0, np.inf, 0.0))
    return ReflectionSpectrum(freqs=f[band], reflected=refl[band], incident=inc[band], ratio=ratio)


@dataclass(frozen=True)
class SarMap:
    """Per-cell specific absorption rate (W/kg) with the maps it came from."""

    sar: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
    dx: float
    dy: float

    @property
    def tissue(self) -> np.ndarray:
        return self.sigma > 0


def compute_sar(peak_ex, peak_ey, sigma, rho, dx=1.0, dy=1.0) -> SarMap:
    """SAR from peak edge fields, averaged to cell centres.

    ``peak_ex`` has ``Ex`` edge shape ``(ny+1, nx)`` and ``peak_ey`` has
    ``(ny, nx+1)``; ``sigma`` and ``rho`` are per cell.  Cells-shaped peak
    arrays are accepted as already centred.
    """
    sigma = np.asarray(sigma, dtype=float)
    rho = np.asarray(rho, dtype=float)
    ex = np.abs(np.asarray(peak_ex, dtype=float))
    ey = np.abs(np.asarray(peak_ey, dtype=float))
    shape = sigma.shape
    if ex.shape == (shape[0] + 1, shape[1]):
        ex = 0.5 * (ex[:-1] + ex[1:])
    if ey.shape == (shape[0], shape[1] + 1):
        ey = 0.5 * (ey[:, :-1] + ey[:, 1:])
    if ex.shape != shape or ey.shape != shape or rho.shape != shape:
        raise ConfigurationError("peak field, conductivity and density maps do not match")
    if np.any(sigma < 0):
        raise ConfigurationError("conductivity must be non-negative")
    tissue = sigma > 0
    if np.any(rho[tissue] <= 0):
        raise ConfigurationError("tissue density must be positive wherever sigma > 0")
    sar = np.zeros(shape)
    sar[tissue] = sigma[tissue] * (ex[tissue] ** 2 + ey[tissue] ** 2) / (2 * rho[tissue])
    return SarMap(sar=sar, rho=rho, sigma=sigma, dx=float(dx), dy=float(dy))


def sar_integral(sar_map: SarMap) -> float:
    """Area integral of SAR over tissue cells (W/kg times m^2)."""
    return float(np.sum(sar_map.sar) * sar_map.dx * sar_map.dy)
