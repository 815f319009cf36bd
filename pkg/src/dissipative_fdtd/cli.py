"""Command-line entry point: ``run``, ``analyze`` and ``scenarios``.

Exit codes: 0 success, 2 configuration error, 3 instability detected.
"""

from __future__ import annotations

import argparse
import sys

from .config import SimulationConfig
from .descriptor import assemble_descriptor
from .dissipativity import cfl_global, cfl_per_cell
from .errors import ConfigurationError, ConvergenceError, FDTDError
from .scenarios import BUILTINS, DESCRIPTIONS, VARIANTS, builtin
from .simulation import Simulation

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNSTABLE = 3
GLOBAL_BOUND_MAX_CELLS = 10_000


def _load(target: str, variant=None) -> SimulationConfig:
    if target in BUILTINS:
        return builtin(target, variant)
    if variant is not None:
        raise ConfigurationError("--variant only applies to built-in scenarios")
    return SimulationConfig.load(target)


def _apply_overrides(cfg: SimulationConfig, args) -> SimulationConfig:
    if getattr(args, "steps", None) is not None:
        cfg.steps = args.steps
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "threads", None) is not None:
        cfg.threads = args.threads
    if getattr(args, "out", None) is not None:
        cfg.output.directory = args.out
    if getattr(args, "dt", None) is not None:
        cfg.dt.policy, cfg.dt.value = "seconds", args.dt
    return cfg.validate()


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_load(args.config, args.variant), args)
    sim = Simulation(cfg)
    report = sim.run()
    for line in report.lines():
        print(line)
    if cfg.output.directory:
        print(f"outputs          : {cfg.output.directory}")
    return EXIT_UNSTABLE if not report.stable else EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = _apply_overrides(_load(args.config, args.variant), args)
    sim = Simulation(cfg)
    ps = 1e12
    print(f"scenario         : {cfg.name}")
    regions = sim.domain.regions_all
    for k, reg in enumerate(regions):
        g = reg.grid
        label = "coarse" if k == 0 else f"fine[{k - 1}] (r={sim.regions[k - 1].r})"
        _, dt_cell = cfl_per_cell(reg.mat, g, reg.active)
        print(f"{label}: {g.nx} x {g.ny} cells of {g.dx * 1e3:g} x {g.dy * 1e3:g} mm")
        print(f"  dt_max_percell = {dt_cell * ps:.5f} ps")
        print(f"  0.99 x percell = {0.99 * dt_cell * ps:.4f} ps")
        if args.global_bound or g.n_hz <= GLOBAL_BOUND_MAX_CELLS:
            try:
                est = cfl_global(assemble_descriptor(g, reg.mat, sim.dt))
                print(f"  dt_max_global  = {est.dt_max * ps:.5f} ps "
                      f"({est.iterations} power sweeps, seed {est.seed})")
            except ConvergenceError as exc:
                print(f"  dt_max_global  : not converged ({exc})")
        else:
            print("  dt_max_global  : skipped (large grid; pass --global to compute)")
        loss_ok = not reg.mat.has_negative_losses()
        print(f"  non-negative losses: {loss_ok}")
    verdict = sim.dt <= sim.dt_limit
    print(f"dt               = {sim.dt * ps:.5f} ps ({sim.dt / sim.dt_limit:.4f} of the bound)")
    print(f"dissipative      : {verdict and all(not r.mat.has_negative_losses() for r in regions)}")
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    if args.dump:
        name = args.dump
        cfg = builtin(name, args.variant)
        sys.stdout.write(cfg.to_yaml())
        return EXIT_OK
    for name in BUILTINS:
        print(f"{name:18s} {DESCRIPTIONS[name]}")
        print(f"{'':18s} variants: {', '.join(VARIANTS[name])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="dissipative-fdtd",
        description="2D TE FDTD with stable subgridding and an energy audit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="YAML config file or built-in scenario name")
        sp.add_argument("--variant", help="variant of a built-in scenario")
        sp.add_argument("--steps", type=int, help="override the step count")
        sp.add_argument("--dt", type=float, help="explicit time step in seconds")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="seed for random initial fields")
        sp.add_argument("--threads", type=int, help="worker threads for per-grid updates")

    run = sub.add_parser("run", help="simulate a scenario")
    common(run)
    run.set_defaults(func=_cmd_run)
    an = sub.add_parser("analyze", help="report time-step bounds without stepping")
    common(an)
    an.add_argument("--global", dest="global_bound", action="store_true",
                    help="compute the global bound even on large grids")
    an.set_defaults(func=_cmd_analyze)
    sc = sub.add_parser("scenarios", help="list built-in scenarios")
    sc.add_argument("--dump", metavar="NAME", help="print the YAML config of a built-in")
    sc.add_argument("--variant", help="variant to dump")
    sc.set_defaults(func=_cmd_scenarios)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FDTDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
