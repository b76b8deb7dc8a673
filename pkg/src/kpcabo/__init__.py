"""Bayesian optimisation in a kernel-PCA reduced space, with linear-PCA and
plain BO baselines, a rotated benchmark testbed and a campaign harness."""

from .config import ALGORITHMS, RunConfig, RunRecord
from .drivers import run, run_kpca_bo, run_pca_bo, run_vanilla_bo
from .testbed import FUNCTION_IDS, make_function

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "FUNCTION_IDS",
    "RunConfig",
    "RunRecord",
    "make_function",
    "run",
    "run_kpca_bo",
    "run_pca_bo",
    "run_vanilla_bo",
]
