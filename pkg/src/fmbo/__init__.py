"""Mixed-variable Bayesian optimization with frequency-modulated graph-spectral kernels."""

from .graphs import FactorGraph, complete_graph, from_weighted_edges, path_graph, spectral_transform
from .space import MixedPoint, SearchSpace
from .kernels import FmFunction, Hyperparams, KernelSpec, kernel_spec_from_name
from .gp import Dataset, GpModel, fit, log_marginal_likelihood, predict
from .acquire import AcquireConfig, acquire_next, expected_improvement
from .bo import BoConfig, BoHistory, BoState, run
from .bench import Benchmark, ackley5c, func2c, func3c, get_benchmark, random_search

__all__ = [
    "FactorGraph", "complete_graph", "path_graph", "from_weighted_edges",
    "spectral_transform", "MixedPoint", "SearchSpace", "FmFunction",
    "Hyperparams", "KernelSpec", "kernel_spec_from_name", "Dataset", "GpModel",
    "fit", "log_marginal_likelihood", "predict", "AcquireConfig",
    "acquire_next", "expected_improvement", "BoConfig", "BoHistory", "BoState",
    "run", "Benchmark", "ackley5c", "func2c", "func3c", "get_benchmark",
    "random_search",
]

__version__ = "0.1.0"
