"""Maximum-entropy ensembles and gravity baselines for weighted networks."""

from ._kernels import BACKEND
from .graph import NodeAttributes, WeightedGraph, load_attributes, load_graph
from .gravity import GravityFit, fit_gravity, predict_gravity
from .solver import FittedModel, SolverConfig, fit_fitness, solve_bcm, solve_mixed, solve_wcm
from .statistics import ModelSpec, PairStatistics, pair_statistics

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FittedModel",
    "GravityFit",
    "ModelSpec",
    "NodeAttributes",
    "PairStatistics",
    "SolverConfig",
    "WeightedGraph",
    "fit_fitness",
    "fit_gravity",
    "load_attributes",
    "load_graph",
    "pair_statistics",
    "predict_gravity",
    "solve_bcm",
    "solve_mixed",
    "solve_wcm",
]
