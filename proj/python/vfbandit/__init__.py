"""Vertically federated contextual bandits: simulator, masks and cost model."""

from ._vfbandit import (
    Algorithm,
    CostAlgorithm,
    RunConfig,
    RunResult,
    SpecError,
    comm_elements,
    privacy_witness,
    random_orthogonal,
    relative_cost,
    run,
    run_synthetic_spec,
    verify,
)

__all__ = [
    "Algorithm",
    "CostAlgorithm",
    "RunConfig",
    "RunResult",
    "SpecError",
    "comm_elements",
    "privacy_witness",
    "random_orthogonal",
    "relative_cost",
    "run",
    "run_synthetic_spec",
    "verify",
]
