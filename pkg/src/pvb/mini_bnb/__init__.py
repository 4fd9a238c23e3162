"""Miniature MIP solver: dense simplex, MPS subset, branching rules."""

from .corpus import multiknapsack, random_binary_mip, sparse_multiknapsack, toy_corpus
from .mip import SENSES, MiniMip, MpsError, load_mps, save_mps
from .simplex import (
    INFEASIBLE,
    ITERATION_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LpResult,
    SolverError,
    solve_bounded_lp,
)
from .solver import (
    CUTOFF_FOUND,
    NODE_LIMIT,
    PSEUDOCOST_ONLY,
    BranchDecision,
    MipResult,
    Pseudocost,
    SbEval,
    ScanOutcome,
    SolverConfig,
    select_branching_variable,
    solve,
    strong_branch_candidate,
)

__all__ = [
    "SENSES",
    "MiniMip",
    "MpsError",
    "load_mps",
    "save_mps",
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "ITERATION_LIMIT",
    "NODE_LIMIT",
    "LpResult",
    "SolverError",
    "solve_bounded_lp",
    "CUTOFF_FOUND",
    "PSEUDOCOST_ONLY",
    "BranchDecision",
    "MipResult",
    "Pseudocost",
    "SbEval",
    "ScanOutcome",
    "SolverConfig",
    "select_branching_variable",
    "solve",
    "strong_branch_candidate",
    "multiknapsack",
    "random_binary_mip",
    "sparse_multiknapsack",
    "toy_corpus",
]
