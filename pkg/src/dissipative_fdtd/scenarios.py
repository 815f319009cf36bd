"""Desk-scale reproductions of the reference experiments.

Every builder returns a :class:`SimulationConfig`; variants select the
reference runs needed for comparisons (all-fine, all-coarse, incident
field and so on).  Geometry is in metres.
"""

from __future__ import annotations

from typing import Callable, Dict

from .config import (AuditConfig, BoundaryConfig, DtConfig, GridConfig, InitConfig,
                     MaterialRegion, MediumConfig, OutputConfig, ProbeConfig, SarConfig,
                     SimulationConfig, SourceConfig, SubgridConfig)
from .constants import C0
from .dissipativity import cfl_uniform
from .errors import ConfigurationError

MM = 1e-3

# ------------------------------------------------------------------ cavity


def cavity_stability(steps: int = 100_000, r: int = 4, dt_fraction: float = 0.99,
                     subgrid: bool = True) -> SimulationConfig:
    """Empty PEC cavity with a centred fine region, driven by a short pulse.

    60 x 40 mm, 1 x 2 mm coarse cells, fine region over x 10..50 mm and
    y 10..30 mm.
    """
    subs = [SubgridConfig(i0=10, j0=5, i1=50, j1=15, r=r)] if subgrid else []
    return SimulationConfig(
        name="cavity-stability",
        grid=GridConfig(nx=60, ny=20, dx=1 * MM, dy=2 * MM),
        subgrids=subs,
        sources=[SourceConfig(at=[7.5 * MM, 5 * MM], f0=3.75e9, hwhm=0.74e9)],
        probes=[ProbeConfig(name="probe", at=[52.5 * MM, 35 * MM])],
        steps=steps,
        dt=DtConfig("cfl_fraction", dt_fraction),
    )


# ------------------------------------------------------- material traverse

TRAVERSE_PLACEMENTS = {
    "enclosing": (40, 43, 66, 69),
    "traversing": (53, 43, 79, 69),
    "outside": (66, 43, 92, 69),
}
TRAVERSE_MATERIALS = {
    "dielectric": dict(eps_r=2.0, sigma=5.0),
    "copper": dict(eps_r=1.0, sigma=5.8e7),
}
TRAVERSE_DT = 0.467e-12


def material_traverse(placement: str = "enclosing", material: str = "dielectric",
                      steps: int = 1600) -> SimulationConfig:
    """16 x 16 mm slab with a 5x fine region placed around, across or beside it.

    ``placement`` is one of ``enclosing``, ``traversing``, ``outside``,
    ``all-fine`` or ``all-coarse``.  Source and probe average over one
    coarse cell so all variants inject and sample the same area.
    """
    if material not in TRAVERSE_MATERIALS:
        raise ConfigurationError(f"unknown slab material {material!r}")
    if placement in TRAVERSE_PLACEMENTS:
        i0, j0, i1, j1 = TRAVERSE_PLACEMENTS[placement]
        grid = GridConfig(nx=132, ny=112, dx=1 * MM, dy=1 * MM)
        subs = [SubgridConfig(i0=i0, j0=j0, i1=i1, j1=j1, r=5)]
        pml = 15
    elif placement == "all-fine":
        grid = GridConfig(nx=660, ny=560, dx=0.2 * MM, dy=0.2 * MM)
        subs, pml = [], 75
    elif placement == "all-coarse":
        grid = GridConfig(nx=132, ny=112, dx=1 * MM, dy=1 * MM)
        subs, pml = [], 15
    else:
        raise ConfigurationError(f"unknown placement {placement!r}")
    cell = [1 * MM, 1 * MM]
    return SimulationConfig(
        name=f"material-traverse-{placement}-{material}",
        grid=grid,
        boundary=BoundaryConfig(S="pml", N="pml", W="pml", E="pml", pml_thickness=pml),
        materials=[MaterialRegion(shape="rect", box=[45 * MM, 48 * MM, 61 * MM, 64 * MM],
                                  name="slab", **TRAVERSE_MATERIALS[material])],
        subgrids=subs,
        sources=[SourceConfig(at=[40.5 * MM, 40.5 * MM], size=cell, f0=15e9, hwhm=8.82e9)],
        probes=[ProbeConfig(name="probe", at=[65.5 * MM, 71.5 * MM], size=cell)],
        steps=steps,
        dt=DtConfig("seconds", TRAVERSE_DT),
        audit=AuditConfig(ledger=False, interface=False),
    )


# ---------------------------------------------------------------- four rods

ROD_CENTERS = [(41, 22), (41, 18), (45, 22), (45, 18)]


def four_rod(variant: str = "total", r: int = 4, steps: int = 1600) -> SimulationConfig:
    """Parallel-plate waveguide with four copper rods inside a fine region.

    Variants: ``total`` (rods and fine region), ``interface`` (fine region
    only), ``incident`` (neither), ``all-fine`` (rods, fine cells
    everywhere) and ``all-fine-incident``.  All variants share the fine
    time step so their probe series line up sample for sample.
    """
    rods = variant in ("total", "all-fine")
    fine_everywhere = variant.startswith("all-fine")
    with_subgrid = variant in ("total", "interface")
    if variant not in ("total", "interface", "incident", "all-fine", "all-fine-incident"):
        raise ConfigurationError(f"unknown four-rod variant {variant!r}")
    dt = 0.99 * cfl_uniform(1 * MM / r, 1 * MM / r)
    if fine_everywhere:
        grid = GridConfig(nx=66 * r, ny=40 * r, dx=1 * MM / r, dy=1 * MM / r)
        pml = 15 * r
    else:
        grid = GridConfig(nx=66, ny=40, dx=1 * MM, dy=1 * MM)
        pml = 15
    mats = []
    if rods:
        mats = [MaterialRegion(shape="disc", center=[x * MM, y * MM], radius=1 * MM,
                               sigma=5.8e7, name=f"rod{k}")
                for k, (x, y) in enumerate(ROD_CENTERS)]
    subs = [SubgridConfig(i0=39, j0=16, i1=47, j1=24, r=r)] if with_subgrid else []
    return SimulationConfig(
        name=f"four-rod-{variant}",
        grid=grid,
        boundary=BoundaryConfig(W="pml", E="pml", pml_thickness=pml),
        materials=mats,
        subgrids=subs,
        sources=[SourceConfig(box=[16.5 * MM, 0.0, 17.5 * MM, 40 * MM], f0=15e9, hwhm=10e9)],
        probes=[ProbeConfig(name="line", box=[18.5 * MM, 0.0, 19.5 * MM, 40 * MM])],
        steps=steps,
        dt=DtConfig("seconds", dt),
        audit=AuditConfig(ledger=False, interface=False),
    )


# -------------------------------------------------------------- synthetic SAR

SAR_FREQ = 900e6
SAR_STANDOFF = 1.0
MUSCLE = dict(eps_r=55.0, sigma=0.94, rho=1050.0)
BONE = dict(eps_r=12.0, sigma=0.14, rho=1900.0)


def sar_window(standoff: float = SAR_STANDOFF):
    """Peak-tracking window: end time scaled with the standoff, 1.2 ns long."""
    end = 26.8e-9 * standoff / 3.0
    return [end - 1.2e-9, end]


def synthetic_sar(variant: str = "subgrid") -> SimulationConfig:
    """Two-tissue disc illuminated by a 900 MHz line source 1 m away.

    ``subgrid``: 1 cm air cells with 2 mm cells around the disc;
    ``all-fine``: 2 mm everywhere; ``all-coarse``: 1 cm everywhere.
    """
    cx, cy = 1.30, 0.40
    tissue = [
        MaterialRegion(shape="disc", center=[cx, cy], radius=0.075, inner_radius=0.065,
                       name="bone", **BONE),
        MaterialRegion(shape="disc", center=[cx, cy], radius=0.065, name="muscle", **MUSCLE),
    ]
    if variant == "subgrid":
        grid = GridConfig(nx=180, ny=80, dx=1e-2, dy=1e-2)
        subs = [SubgridConfig(i0=120, j0=30, i1=140, j1=50, r=5)]
        pml, dt = 20, 4.67e-12
    elif variant == "all-fine":
        grid = GridConfig(nx=900, ny=400, dx=2e-3, dy=2e-3)
        subs, pml, dt = [], 100, 4.67e-12
    elif variant == "all-coarse":
        grid = GridConfig(nx=180, ny=80, dx=1e-2, dy=1e-2)
        subs, pml, dt = [], 20, 23.11e-12
    else:
        raise ConfigurationError(f"unknown SAR variant {variant!r}")
    window = sar_window()
    steps = int(round(window[1] / dt)) + 1
    return SimulationConfig(
        name=f"synthetic-sar-{variant}",
        grid=grid,
        boundary=BoundaryConfig(S="pml", N="pml", W="pml", E="pml", pml_thickness=pml),
        materials=tissue,
        subgrids=subs,
        sources=[SourceConfig(kind="sinusoid", at=[cx - SAR_STANDOFF, cy], size=[1e-2, 1e-2],
                              f0=SAR_FREQ)],
        steps=steps,
        dt=DtConfig("seconds", dt),
        audit=AuditConfig(ledger=False, interface=False),
        sar=SarConfig(window=window),
    )


BUILTINS: Dict[str, Callable[..., SimulationConfig]] = {
    "cavity-stability": cavity_stability,
    "material-traverse": material_traverse,
    "four-rod": four_rod,
    "synthetic-sar": synthetic_sar,
}

VARIANTS = {
    "cavity-stability": ("subgrid", "uniform"),
    "material-traverse": tuple(TRAVERSE_PLACEMENTS) + ("all-fine", "all-coarse"),
    "four-rod": ("total", "interface", "incident", "all-fine", "all-fine-incident"),
    "synthetic-sar": ("subgrid", "all-fine", "all-coarse"),
}

DESCRIPTIONS = {
    "cavity-stability": "PEC cavity with a 4x fine region, long-run stability and energy ledger",
    "material-traverse": "lossy or copper slab with a 5x fine region enclosing, crossing or beside it",
    "four-rod": "waveguide reflections from four copper rods and from the fine-region interface",
    "synthetic-sar": "900 MHz SAR in a two-tissue disc with fine tissue cells and coarse air",
}


def builtin(name: str, variant: str | None = None) -> SimulationConfig:
    """Config of a built-in scenario (``name`` as listed by :data:`BUILTINS`)."""
    if name not in BUILTINS:
        raise ConfigurationError(f"unknown scenario {name!r}")
    if variant is None:
        return BUILTINS[name]()
    if variant not in VARIANTS[name]:
        raise ConfigurationError(f"scenario {name!r} has no variant {variant!r}")
    if name == "cavity-stability":
        return cavity_stability(subgrid=variant == "subgrid")
    if name == "material-traverse":
        return material_traverse(placement=variant)
    if name == "four-rod":
        return four_rod(variant=variant)
    return synthetic_sar(variant=variant)
