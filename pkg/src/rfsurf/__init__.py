"""Lattice laboratory for gradient interface models in a quenched random field."""

__version__ = "0.1.0"

from .lattice import Box, EdgeField, VertexField, divergence_of_flux, gradient, make_box
from .potentials import Potential, Quadratic, QuadraticCosine, UserPotential, make_potential
from .disorder import LAWS, SeededStream, sample_field, shift_field
from .ground_state import (GroundStateSolution, dyadic_gap_statistic,
                           dyadic_ground_state_study, solve)
from .green import RepresentationKernel, SupNormStudy, build_kernel, sup_norm_study
from .langevin import (CoupledPair, DlrCheck, LangevinConfig, LocalObservable,
                       Trajectory, coupled_simulate, dlr_resample_check,
                       simulate, stability_limit)
from .observables import (PowerLawFit, ScalingSeries, SeriesPoint,
                          fit_log_growth, fit_power_law, spatial_average,
                          sup_gradient_difference, weighted_norm)
from .experiments import ExperimentConfig, load_config

__all__ = [
    "Box",
    "EdgeField",
    "VertexField",
    "divergence_of_flux",
    "gradient",
    "make_box",
    "Potential",
    "Quadratic",
    "QuadraticCosine",
    "UserPotential",
    "make_potential",
    "LAWS",
    "SeededStream",
    "sample_field",
    "shift_field",
    "GroundStateSolution",
    "dyadic_gap_statistic",
    "dyadic_ground_state_study",
    "solve",
    "RepresentationKernel",
    "SupNormStudy",
    "build_kernel",
    "sup_norm_study",
    "CoupledPair",
    "DlrCheck",
    "LangevinConfig",
    "LocalObservable",
    "Trajectory",
    "coupled_simulate",
    "dlr_resample_check",
    "simulate",
    "stability_limit",
    "PowerLawFit",
    "ScalingSeries",
    "SeriesPoint",
    "fit_log_growth",
    "fit_power_law",
    "spatial_average",
    "sup_gradient_difference",
    "weighted_norm",
    "ExperimentConfig",
    "load_config",
    "__version__",
]
