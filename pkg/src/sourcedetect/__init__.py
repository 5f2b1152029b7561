"""Plume-source localization on a lattice: particle simulation, oracles and search."""

from .lattice import (
    DEFAULT_H,
    FIGURE_KERNEL,
    REFERENCE_KERNELS,
    RngStream,
    SimParams,
    SiteIndex,
    StepKernel,
    make_kernel,
)
from .particles import ParticleSim
from .oracle import ExpectedFieldSim, green_function, mu_recursion
from .search import Alg1Config, Alg2Config, alg1_run, alg2_run, success_check
from .bench import run_sweep

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_H",
    "FIGURE_KERNEL",
    "REFERENCE_KERNELS",
    "RngStream",
    "SimParams",
    "SiteIndex",
    "StepKernel",
    "make_kernel",
    "ParticleSim",
    "ExpectedFieldSim",
    "green_function",
    "mu_recursion",
    "Alg1Config",
    "Alg2Config",
    "alg1_run",
    "alg2_run",
    "success_check",
    "run_sweep",
]
