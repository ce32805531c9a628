"""Crosstalk attacks on trapped-ion quantum adders: simulation toolkit."""

from .adders import AdderSpec, build, resources
from .attacks import AttackKind, AttackSpec, build_attack
from .bench import ExperimentConfig, ExperimentReport, run_suite
from .noise import NoiseParams, calibrate
from .rns import RnsSet, aggregate_probability, select_moduli
from .simcore import Circuit, Gate, GateKind, PureState, SimulationError
from .tenancy import DeviceModel, TenancyModel, allocate, merge_timeline

__version__ = "0.1.0"

__all__ = [
    "AdderSpec", "AttackKind", "AttackSpec", "Circuit", "DeviceModel", "ExperimentConfig",
    "ExperimentReport", "Gate", "GateKind", "NoiseParams", "PureState", "RnsSet", "SimulationError",
    "TenancyModel", "aggregate_probability", "allocate", "build", "build_attack", "calibrate",
    "merge_timeline", "resources", "run_suite", "select_moduli",
]
