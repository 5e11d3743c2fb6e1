"""Executable finite-stage priority constructions."""

from ershov.constructions.common import (
    PreconditionError, Requirement, ScenarioResult, StageTrace, trace_from_history,
)
from ershov.constructions.dark import DarkConfig, run_dark
from ershov.constructions.minimal import (
    build_inversion_counterexample, run_finitely_minimal, run_onto_extension,
)
from ershov.constructions.mutual import MutualConfig, run_mutually_dark
from ershov.constructions.nosup import NoSupConfig, run_no_sup
from ershov.constructions.omega import OmegaConfig, run_omega_pair

__all__ = [
    "PreconditionError", "Requirement", "ScenarioResult", "StageTrace", "trace_from_history",
    "DarkConfig", "run_dark", "build_inversion_counterexample", "run_finitely_minimal",
    "run_onto_extension", "MutualConfig", "run_mutually_dark", "NoSupConfig", "run_no_sup",
    "OmegaConfig", "run_omega_pair",
]
