"""Characteristic analysis and one-dimensional simulation of stress and
heat-flux relaxation extensions of the compressible Euler equations.

The package covers four one-dimensional models built on an ideal-gas
equation of state: a four-field Eulerian system with relaxing shear
stress, its five-field extension with a relaxing heat flux, a three-field
isothermal reduction, and the five-field system in Lagrangian mass
coordinates.  `models` defines the quasilinear systems and conserved-form
maps, `modes` the wave-speed and nonlinearity analysis, `sim1d` a
finite-volume solver for gradient-steepening experiments, and `cli` the
command-line frontend.
"""

from .errors import (
    ConfigError,
    DomainError,
    HyperbolicityError,
    InternalInconsistencyError,
    ReconstructionError,
)
from .models import (
    KINDS,
    FluidParams,
    QuasilinearSystem,
    StateE3,
    StateE4,
    StateE5,
    StateL5,
    SystemE3,
    SystemE4,
    SystemE5,
    SystemL5,
    build_system,
    conserved_to_primitive,
    eos,
    eos_lagrangian,
    primitive_to_conserved,
)
from .modes import (
    AnalysisResult,
    Crossing,
    ModeReport,
    Pi0Report,
    ScanReport,
    analyze,
    degeneracy_scan,
    eigvec_e4_equilibrium,
    eigvec_l5_equilibrium,
    equilibrium_eigenvector,
    find_tau_threshold,
    find_tau_threshold_bisect,
    gnl_e4,
    gnl_l5,
    pi0_report,
    speeds_e3,
    speeds_e4,
    speeds_generic,
)
from .sim1d import (
    STATUS_ADMISSIBILITY,
    STATUS_BALL_EXIT,
    STATUS_BLOWUP,
    STATUS_SMOOTH,
    Grid1D,
    Perturbation,
    RunConfig,
    RunResult,
    SweepReport,
    amplitude_sweep,
    initial_data,
    run,
)

__all__ = [
    "KINDS",
    "STATUS_ADMISSIBILITY",
    "STATUS_BALL_EXIT",
    "STATUS_BLOWUP",
    "STATUS_SMOOTH",
    "AnalysisResult",
    "ConfigError",
    "Crossing",
    "DomainError",
    "FluidParams",
    "Grid1D",
    "HyperbolicityError",
    "InternalInconsistencyError",
    "ModeReport",
    "Perturbation",
    "Pi0Report",
    "QuasilinearSystem",
    "ReconstructionError",
    "RunConfig",
    "RunResult",
    "ScanReport",
    "StateE3",
    "StateE4",
    "StateE5",
    "StateL5",
    "SweepReport",
    "SystemE3",
    "SystemE4",
    "SystemE5",
    "SystemL5",
    "amplitude_sweep",
    "analyze",
    "build_system",
    "conserved_to_primitive",
    "degeneracy_scan",
    "eigvec_e4_equilibrium",
    "eigvec_l5_equilibrium",
    "eos",
    "eos_lagrangian",
    "equilibrium_eigenvector",
    "find_tau_threshold",
    "find_tau_threshold_bisect",
    "gnl_e4",
    "gnl_l5",
    "initial_data",
    "pi0_report",
    "primitive_to_conserved",
    "run",
    "speeds_e3",
    "speeds_e4",
    "speeds_generic",
]

__version__ = "0.1.0"
