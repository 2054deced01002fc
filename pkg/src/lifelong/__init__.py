"""Streaming multi-task learners that build shared internal representations,
with planted-instance generators and verifiers for every bound they target.
"""

from .booleans import Dictionary, Monomial, TargetSet, online_session, solve_consistency
from .geometry import (AngleBudget, OrthonormalBasis, UnitVector,
                       angle_between_vectors, angle_subspace_to_subspace,
                       angle_vector_to_subspace, check_span_perturbation,
                       extend_basis)
from .harness import ScenarioConfig, RunReport, run_experiment
from .linear_lifelong import (LinearRepState, gamma_effective_dimension_lower_bound,
                              run_single_level, run_two_level)
from .polynomials import MultilinearPolynomial, PolyRepState, mq_interpolate, run_poly_lifelong
from .sampling import Distribution, estimate_error, labeled_stream, sample

__version__ = "0.1.0"

__all__ = [
    "AngleBudget", "Dictionary", "Distribution", "LinearRepState", "Monomial",
    "MultilinearPolynomial", "OrthonormalBasis", "PolyRepState", "RunReport",
    "ScenarioConfig", "TargetSet", "UnitVector", "angle_between_vectors",
    "angle_subspace_to_subspace", "angle_vector_to_subspace",
    "check_span_perturbation", "estimate_error", "extend_basis",
    "gamma_effective_dimension_lower_bound", "labeled_stream", "mq_interpolate",
    "online_session", "run_experiment", "run_poly_lifelong", "run_single_level",
    "run_two_level", "sample", "solve_consistency",
]
