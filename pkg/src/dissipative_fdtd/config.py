"""Scenario configuration: dataclasses, validation and YAML round-trip.

All lengths are in metres, times in seconds and material parameters
relative to vacuum (conductivity in S/m, density in kg/m^3).  Subgrid
rectangles are given in coarse cell indices.  A minimal document::

    schema_version: 1
    name: demo
    grid: {nx: 60, ny: 20, dx: 1.0e-3, dy: 2.0e-3}
    sources:
      - {at: [7.5e-3, 5.0e-3], f0: 3.75e9, hwhm: 0.74e9}
    probes:
      - {name: p, at: [52.5e-3, 35.0e-3]}
    steps: 1000
"""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import yaml

from .errors import ConfigurationError

SCHEMA_VERSION = 1


@dataclass
class GridConfig:
    nx: int = 1
    ny: int = 1
    dx: float = 1e-3
    dy: float = 1e-3


@dataclass
class BoundaryConfig:
    """Outer boundary per side (``pec`` or ``pml``) and absorbing-layer settings.

    Sides marked ``pml`` get a graded lossy layer backed by a PEC wall.
    """

    S: str = "pec"
    N: str = "pec"
    W: str = "pec"
    E: str = "pec"
    pml_thickness: int = 15
    pml_order: float = 3.0
    pml_r0: float = 1e-6
    pml_sigma_max: Optional[float] = None


@dataclass
class MediumConfig:
    eps_r: float = 1.0
    mu_r: float = 1.0
    sigma: float = 0.0
    rho: float = 0.0


@dataclass
class MaterialRegion:
    """Rectangle ``box: [x0, y0, x1, y1]`` or disc (``center``, ``radius``).

    A disc with ``inner_radius > 0`` is an annulus.  Later regions
    override earlier ones; cells are assigned by their centre.
    """

    shape: str = "rect"
    box: Optional[List[float]] = None
    center: Optional[List[float]] = None
    radius: float = 0.0
    inner_radius: float = 0.0
    eps_r: float = 1.0
    mu_r: float = 1.0
    sigma: float = 0.0
    rho: float = 0.0
    name: str = ""


@dataclass
class SubgridConfig:
    i0: int = 0
    j0: int = 0
    i1: int = 0
    j1: int = 0
    r: int = 1


@dataclass
class SourceConfig:
    """Soft ``Hz`` source over the cells whose centres fall in a box.

    Give either ``at`` (with optional ``size``, default one cell of the
    hosting grid) or ``box``.
    """

    kind: str = "gaussian"
    at: Optional[List[float]] = None
    size: Optional[List[float]] = None
    box: Optional[List[float]] = None
    amplitude: float = 1.0
    f0: float = 1e9
    hwhm: float = 0.0
    delay: Optional[float] = None
    stop: Optional[float] = None


@dataclass
class ProbeConfig:
    """Field sample averaged over the nodes whose positions fall in a box."""

    name: str = "probe"
    component: str = "hz"
    at: Optional[List[float]] = None
    size: Optional[List[float]] = None
    box: Optional[List[float]] = None
    stride: int = 1


@dataclass
class DtConfig:
    """``policy`` is ``cfl_fraction`` (of the smallest per-cell bound) or ``seconds``."""

    policy: str = "cfl_fraction"
    value: float = 0.99


@dataclass
class OutputConfig:
    directory: Optional[str] = None
    ledger: bool = True
    probes: bool = True
    snapshot_every: int = 0
    snapshot_components: List[str] = field(default_factory=lambda: ["hz"])
    snapshot_format: str = "binary"


@dataclass
class AuditConfig:
    """``ledger`` tracks the storage balance every step; ``interface`` the coupling supply."""

    ledger: bool = True
    interface: bool = True
    divergence_limit: float = 1e30


@dataclass
class SarConfig:
    """Observation window ``[t0, t1]`` for peak-field tracking; ``None`` disables SAR."""

    window: Optional[List[float]] = None


@dataclass
class InitConfig:
    """``zero`` or ``random`` initial fields; ``scale`` is the ``E`` amplitude in V/m."""

    kind: str = "zero"
    scale: float = 1.0


@dataclass
class SimulationConfig:
    schema_version: int = SCHEMA_VERSION
    name: str = "scenario"
    grid: GridConfig = field(default_factory=GridConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    background: MediumConfig = field(default_factory=MediumConfig)
    materials: List[MaterialRegion] = field(default_factory=list)
    subgrids: List[SubgridConfig] = field(default_factory=list)
    sources: List[SourceConfig] = field(default_factory=list)
    probes: List[ProbeConfig] = field(default_factory=list)
    steps: int = 0
    dt: DtConfig = field(default_factory=DtConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    audit: AuditConfig = field(default_factory=AuditConfig)
    sar: SarConfig = field(default_factory=SarConfig)
    init: InitConfig = field(default_factory=InitConfig)
    seed: int = 0
    threads: int = 1

    # ------------------------------------------------------------ serialisation
    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_yaml())
        return path

    @classmethod
    def from_dict(cls, data) -> "SimulationConfig":
        cfg = _build(cls, data, "")
        cfg.validate()
        return cfg

    @classmethod
    def from_yaml(cls, text: str) -> "SimulationConfig":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"config is not valid YAML: {exc}") from exc
        return cls.from_dict(data if data is not None else {})

    @classmethod
    def load(cls, path) -> "SimulationConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
        return cls.from_yaml(text)

    # --------------------------------------------------------------- checking
    def validate(self) -> "SimulationConfig":
        if self.schema_version != SCHEMA_VERSION:
            _fail("schema_version", f"unsupported version {self.schema_version}")
        g = self.grid
        if g.nx < 1 or g.ny < 1:
            _fail("grid", "nx and ny must be >= 1")
        if not (g.dx > 0 and g.dy > 0):
            _fail("grid", "dx and dy must be positive")
        width, height = g.nx * g.dx, g.ny * g.dy
        b = self.boundary
        for side in "SNWE":
            if getattr(b, side) not in ("pec", "pml"):
                _fail(f"boundary.{side}", "must be 'pec' or 'pml'")
        if self.pml_sides():
            if b.pml_thickness < 4:
                _fail("boundary.pml_thickness", "must be >= 4 cells")
            if not 2 <= b.pml_order <= 4:
                _fail("boundary.pml_order", "must lie in [2, 4]")
            if not 0 < b.pml_r0 < 1:
                _fail("boundary.pml_r0", "must lie in (0, 1)")
        _check_medium(self.background, "background")
        for k, m in enumerate(self.materials):
            p = f"materials[{k}]"
            _check_medium(m, p)
            if m.shape == "rect":
                _check_box(m.box, width, height, p + ".box")
            elif m.shape == "disc":
                if m.center is None or len(m.center) != 2:
                    _fail(p + ".center", "needs [x, y]")
                if not m.radius > 0 or not 0 <= m.inner_radius < m.radius:
                    _fail(p + ".radius", "need radius > inner_radius >= 0")
            else:
                _fail(p + ".shape", f"unknown shape {m.shape!r}")
        t = b.pml_thickness if self.pml_sides() else 0
        for k, s in enumerate(self.subgrids):
            p = f"subgrids[{k}]"
            if s.r < 1:
                _fail(p + ".r", "must be >= 1")
            if s.i1 <= s.i0 or s.j1 <= s.j0:
                _fail(p, "empty rectangle")
            lo_i = 1 + (t if b.W == "pml" else 0)
            lo_j = 1 + (t if b.S == "pml" else 0)
            hi_i = g.nx - 1 - (t if b.E == "pml" else 0)
            hi_j = g.ny - 1 - (t if b.N == "pml" else 0)
            if s.i0 < lo_i or s.j0 < lo_j or s.i1 > hi_i or s.j1 > hi_j:
                _fail(p, "must lie strictly inside the grid and outside absorbing layers")
        for k, s in enumerate(self.sources):
            p = f"sources[{k}]"
            if s.kind not in ("gaussian", "sinusoid"):
                _fail(p + ".kind", f"unknown kind {s.kind!r}")
            if not s.f0 > 0:
                _fail(p + ".f0", "must be positive")
            if s.kind == "gaussian" and not s.hwhm > 0:
                _fail(p + ".hwhm", "must be positive for Gaussian sources")
            _check_place(s, width, height, p)
        names = set()
        for k, pr in enumerate(self.probes):
            p = f"probes[{k}]"
            if pr.component not in ("hz", "ex", "ey"):
                _fail(p + ".component", f"unknown component {pr.component!r}")
            if pr.stride < 1:
                _fail(p + ".stride", "must be >= 1")
            if pr.name in names:
                _fail(p + ".name", f"duplicate probe name {pr.name!r}")
            names.add(pr.name)
            _check_place(pr, width, height, p)
        if self.steps < 0:
            _fail("steps", "must be >= 0")
        if self.dt.policy not in ("cfl_fraction", "seconds"):
            _fail("dt.policy", "must be 'cfl_fraction' or 'seconds'")
        if not self.dt.value > 0 or (self.dt.policy == "cfl_fraction" and self.dt.value > 1):
            _fail("dt.value", "must be positive (and at most 1 for cfl_fraction)")
        if self.output.snapshot_every < 0:
            _fail("output.snapshot_every", "must be >= 0")
        if self.output.snapshot_format not in ("binary", "csv"):
            _fail("output.snapshot_format", "must be 'binary' or 'csv'")
        for c in self.output.snapshot_components:
            if c not in ("hz", "ex", "ey"):
                _fail("output.snapshot_components", f"unknown component {c!r}")
        w = self.sar.window
        if w is not None and (len(w) != 2 or not 0 <= w[0] < w[1]):
            _fail("sar.window", "needs [t0, t1] with 0 <= t0 < t1")
        if self.init.kind not in ("zero", "random"):
            _fail("init.kind", "must be 'zero' or 'random'")
        if self.threads < 1:
            _fail("threads", "must be >= 1")
        return self

    def pml_sides(self):
        return tuple(s for s in "SNWE" if getattr(self.boundary, s) == "pml")


def _plain(obj):
    """Replace numpy scalars with Python numbers so the dict serialises cleanly."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        return obj.item()
    return obj


def _fail(path, msg):
    raise ConfigurationError(f"{path}: {msg}")


def _check_medium(m, path):
    if not m.eps_r > 0:
        _fail(path + ".eps_r", "must be positive")
    if not m.mu_r > 0:
        _fail(path + ".mu_r", "must be positive")
    if m.sigma < 0:
        _fail(path + ".sigma", "must be >= 0")
    if m.rho < 0:
        _fail(path + ".rho", "must be >= 0")


def _check_box(box, width, height, path):
    if box is None or len(box) != 4:
        _fail(path, "needs [x0, y0, x1, y1]")
    x0, y0, x1, y1 = box
    if not (x0 <= x1 and y0 <= y1):
        _fail(path, "needs x0 <= x1 and y0 <= y1")
    tol = 1e-9 * max(width, height)
    if x0 < -tol or y0 < -tol or x1 > width + tol or y1 > height + tol:
        _fail(path, "lies outside the domain")


def _check_place(obj, width, height, path):
    if (obj.at is None) == (obj.box is None):
        _fail(path, "give exactly one of 'at' or 'box'")
    if obj.box is not None:
        _check_box(obj.box, width, height, path + ".box")
    else:
        if len(obj.at) != 2:
            _fail(path + ".at", "needs [x, y]")
        x, y = obj.at
        if not (0 <= x <= width and 0 <= y <= height):
            _fail(path + ".at", "lies outside the domain")
        if obj.size is not None and (len(obj.size) != 2 or min(obj.size) <= 0):
            _fail(path + ".size", "needs two positive lengths")


# --------------------------------------------------------- generic builder

def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            _fail(path, f"expected a list, got {type(value).__name__}")
        return [_convert(args[0], v, f"{path}[{k}]") for k, v in enumerate(value)]
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            _fail(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            _fail(path, f"expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                _fail(path, f"expected a number, got {value!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            _fail(path, f"expected a string, got {value!r}")
        return value
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        _fail(path or "<root>", f"expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        key = sorted(map(str, unknown))[0]
        _fail(f"{path}.{key}" if path else key, "unknown key")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            sub = f"{path}.{f.name}" if path else f.name
            kwargs[f.name] = _convert(hints[f.name], data[f.name], sub)
    return cls(**kwargs)
