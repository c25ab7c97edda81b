"""Validation and price optimisation for formation-building puzzles."""

from .constraints import OpCounter, PartialState, filter_pool, update
from .constructor import (Attempt, ConstructorConfig, Infeasible, construct,
                          construct_unguided, random_traversal)
from .domain import (FormationGraph, Item, MaxCount, MaxPerValue, MinCount, MinDistinct, MinSum,
                     Pool, Puzzle, Solution, SynergyAtLeast, TraitDef, TraitSchema, evaluate,
                     validate_puzzle)
from .evolution import GaConfig, Population, run_ga
from .islands import IslandConfig, run_multi_island
from .kernels import BACKEND
from .oracle import OracleResult, enumerate_all
from .synergy import WeightKernel, default_kernel, neighbor_score, pair_weight, solution_synergy

__version__ = "0.1.0"
