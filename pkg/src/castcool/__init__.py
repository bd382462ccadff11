"""Thermal model of a curved continuous caster and identification of the
spray-cooling convective heat-transfer coefficient."""

from .chtc import ChtcProfile, uniform_profile
from .errors import (CastcoolError, ConfigError, ConvergenceError,
                     DegenerateDataError, MaterialDomainError, NumericFailure,
                     StabilityError)
from .fronts import PhaseFront, extract_front, section_front, stefan_residual
from .geometry import (CurvilinearSection, GridSpec, MachineLayout, MouldGeometry,
                       RectilinearSection, SectionGrid, build_grids,
                       build_section_grid, classify_surface, nearest_offset)
from .harness import ExperimentConfig, SurfaceMeasurement
from .ident_lsq import (ChtcLeastSquares, FluxSamples, direct_reversion,
                        fit_alpha_c, fit_alpha_p, flux_samples, identify,
                        solve_interior_dirichlet)
from .ident_sa import (ChtcStochasticTuner, SaState, StepSequence, check_stop,
                       run_tuning, sa_step, step_size)
from .machine import MachineSolver
from .materials import (MaterialProperties, PropertyTable, builtin_material,
                        constant_material, load_material, save_material)
from .mould import MouldEnvironment, MouldSolver, WaterChannel
from .solver import (SectionEnvironment, SectionSolver, SurfaceCooling,
                     build_section_solver, energy_audit, field_bounds_ok)

__version__ = "0.1.0"
