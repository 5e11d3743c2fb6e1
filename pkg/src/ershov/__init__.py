"""Finite-stage machinery for Delta^0_2 equivalence relations in the Ershov hierarchy."""

from ershov.notation import Notation, Ordering, cmp, fin, omega, successor
from ershov.approximation import (
    ApproxTrace, ClockedMachine, OracleMachine, limit_value, mind_changes,
    opponent_family, oracle_enumerate, pair_code, unpair, validate,
)
from ershov.eqrel import Partition

__all__ = [
    "Notation", "Ordering", "cmp", "fin", "omega", "successor",
    "ApproxTrace", "ClockedMachine", "OracleMachine", "limit_value", "mind_changes",
    "opponent_family", "oracle_enumerate", "pair_code", "unpair", "validate",
    "Partition",
]
