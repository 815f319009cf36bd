"""2D TE FDTD written as a dissipative system, with stable subgridding.

Submodules
----------
grid           Yee storage, materials and the leapfrog update.
descriptor     Sparse ``R, F, B, L`` matrices of a region.
dissipativity  Storage, supply, energy ledger and time-step bounds.
subgrid        Coarse/fine coupling at any integer refinement ratio.
absorbing      Absorbing layers, sources, probes, reflection and SAR.
config         Scenario configuration and YAML round-trip.
simulation     Scenario runner.
scenarios      Built-in desk-scale experiments.
cli            Command-line entry point.
"""

from .absorbing import (PmlSpec, ProbeSeries, ProbeSpec, SarMap, SourceSpec,
                        compute_reflection, compute_sar, inject_source, pml_update,
                        record_probe, sar_integral, with_pml)
from .config import SimulationConfig
from .descriptor import (DescriptorSystem, assemble_descriptor, build_difference_matrix,
                         explicit_step)
from .dissipativity import (EnergyLedger, EnergyMeter, StabilityReport, analyze_region,
                            audit_step, cfl_global, cfl_per_cell, cfl_uniform, storage_energy,
                            supply_rate, verify_theorem1)
from .errors import (ConfigurationError, ConvergenceError, FDTDError, InstabilityError,
                     MaterialError, StateError)
from .grid import FieldState, GridSpec, MaterialMap, YeeRegion, leapfrog_step, update_e, update_hz
from .simulation import RunReport, Simulation, run_scenario
from .subgrid import (InterfaceCoeffs, SubgridRegion, SubgriddedDomain, coupled_step,
                      interface_coeffs, interface_supply, interface_update, interpolate_e,
                      interpolate_h)

__version__ = "0.1.0"
