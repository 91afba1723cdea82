"""
Кинетика палочковидных полимеров и мономеров в заданном течении.

Неявная полудискретная схема для плотности полимеров ψ(r, η, y) и
концентрации мономеров φ(y) с журналом устойчивости и диагностикой.
"""

from .config import RunConfig, config_hash, load_config
from .convergence import ConvergenceTable, convergence_study
from .exceptions import (
    BoundViolation,
    ConfigurationError,
    ConfigurationNotDegenerate,
    InvariantBreach,
    InvariantError,
    KernelNormalizationFailure,
    MissingField,
    NegativeMonomerInput,
    NegativeSink,
    NonPositiveCoefficient,
    NumericalError,
    OdeToleranceExceeded,
    PointLeftDomain,
    ProvenanceMismatch,
    SimulationError,
    SolverDiverged,
    TimestepTooLarge,
    TruncationTail,
    UnsupportedDomainPairing,
    exit_code_for,
)
from .greer import GreerState, compare_with_full, greer_step
from .params import FragmentationKernel, ModelParams, evaluate_g, load_params
from .registry import ClosureRegistry
from .simulation import Simulator, SimulationState, StabilityLedger, check_initial_envelope
from .storage import read_snapshot, write_snapshot

__all__ = [
    "Simulator",
    "SimulationState",
    "StabilityLedger",
    "check_initial_envelope",
    "RunConfig",
    "load_config",
    "config_hash",
    "ModelParams",
    "FragmentationKernel",
    "load_params",
    "evaluate_g",
    "ClosureRegistry",
    "GreerState",
    "greer_step",
    "compare_with_full",
    "ConvergenceTable",
    "convergence_study",
    "read_snapshot",
    "write_snapshot",
    "exit_code_for",
    "SimulationError",
    "ConfigurationError",
    "MissingField",
    "NonPositiveCoefficient",
    "KernelNormalizationFailure",
    "UnsupportedDomainPairing",
    "ConfigurationNotDegenerate",
    "ProvenanceMismatch",
    "BoundViolation",
    "NumericalError",
    "TruncationTail",
    "OdeToleranceExceeded",
    "PointLeftDomain",
    "SolverDiverged",
    "InvariantError",
    "TimestepTooLarge",
    "NegativeMonomerInput",
    "NegativeSink",
    "InvariantBreach",
]

__version__ = "1.0.0"
