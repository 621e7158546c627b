"""Casimir energies, forces and thermodynamics for point-like obstacles in three dimensions."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DomainError,
    InadmissibleConfiguration,
    NonIdenticalStrengths,
    NumericalError,
    PathBudgetExceeded,
    PoleProximity,
    QuadratureFailure,
    RotationInvalid,
    SingularMatrix,
    StepWouldViolateAdmissibility,
    StripViolation,
    TailBoundUnreachable,
    TruncationInsufficient,
    ZeroInteraction,
)
from .model import (
    AdmissibilityReport,
    ObstacleConfiguration,
    RescaledConfiguration,
    rescale,
    validate,
)
from .spectral import (
    spectral_density,
    zeta_continued,
    zeta_strip,
)
from .thermo import ThermoPoint, thermo_point
from .vacuum import (
    BornEnergyBreakdown,
    ForceResult,
    energy_born,
    energy_direct,
    energy_identical,
    forces,
    interaction_energy,
    relative_error_estimate,
)

__all__ = [
    "__version__",
    "AdmissibilityReport",
    "BornEnergyBreakdown",
    "ConfigurationError",
    "DomainError",
    "ForceResult",
    "InadmissibleConfiguration",
    "NonIdenticalStrengths",
    "NumericalError",
    "ObstacleConfiguration",
    "PathBudgetExceeded",
    "PoleProximity",
    "QuadratureFailure",
    "RescaledConfiguration",
    "RotationInvalid",
    "SingularMatrix",
    "StepWouldViolateAdmissibility",
    "StripViolation",
    "TailBoundUnreachable",
    "ThermoPoint",
    "TruncationInsufficient",
    "ZeroInteraction",
    "energy_born",
    "energy_direct",
    "energy_identical",
    "forces",
    "interaction_energy",
    "relative_error_estimate",
    "rescale",
    "spectral_density",
    "thermo_point",
    "validate",
    "zeta_continued",
    "zeta_strip",
]
