"""Partial soft-matching: exact (partial) optimal transport between neural
population tuning matrices, L-curve selection of the matched mass, and the
ranking / simulation tools built on it."""

__version__ = "0.1.0"

from .analyze import (
    MatchReport,
    RankOrder,
    brute_force_rank,
    corr_score,
    correlation_rank,
    match_precision,
    partial_rank,
    rotation_test,
)
from .cost import CostMatrix, cosine_cost, squared_euclidean_cost
from .matrixio import TuningMatrix, center_and_normalize, load_matrix, save_matrix, save_plan
from .partial import MatchSets, extract_matches, solve_partial
from .select import ElbowResult, LCurve, auc_score, find_elbow, sweep
from .solver import SolveResult, TransportPlan, soft_matching_distance, solve_balanced
from .synth import SynthConfig, SynthPair, generate_pair

__all__ = [
    "CostMatrix", "ElbowResult", "LCurve", "MatchReport", "MatchSets", "RankOrder",
    "SolveResult", "SynthConfig", "SynthPair", "TransportPlan", "TuningMatrix",
    "auc_score", "brute_force_rank", "center_and_normalize", "corr_score",
    "correlation_rank", "cosine_cost", "extract_matches", "find_elbow", "generate_pair",
    "load_matrix", "match_precision", "partial_rank", "rotation_test", "save_matrix",
    "save_plan", "soft_matching_distance", "solve_balanced", "solve_partial",
    "squared_euclidean_cost", "sweep",
]
