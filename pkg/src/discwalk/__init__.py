"""Discrepancy coloring toolkit: a barrier-potential walk for low-degree set
systems, classical baselines, and a benchmark harness."""

from .instance import (
    CanonicalInstance,
    InstanceError,
    SetSystem,
    brute_force_min_disc,
    canonicalize,
    discrepancy,
    gen_random_regular,
    parse_instance,
    write_instance,
)
from .walk import RunStatus, StepRecord, WalkConfig, run_walk
from .rounding import PartialColoring, finish_remainder, round_full, snap_frozen
from .baselines import beck_fiala, gram_schmidt_walk, random_coloring
from .harness import ExperimentConfig, ResultRow, cli_main, run_experiment

__all__ = [
    "CanonicalInstance", "InstanceError", "SetSystem", "brute_force_min_disc",
    "canonicalize", "discrepancy", "gen_random_regular", "parse_instance",
    "write_instance", "RunStatus", "StepRecord", "WalkConfig", "run_walk",
    "PartialColoring", "finish_remainder", "round_full", "snap_frozen",
    "beck_fiala", "gram_schmidt_walk", "random_coloring",
    "ExperimentConfig", "ResultRow", "cli_main", "run_experiment",
]

__version__ = "0.1.0"
