"""Residual-based distributionally robust optimization with covariate information."""

__version__ = "0.1.0"

from .backend import HighsBackend, LPResult, SolverBackend
from .casestudy import (CaseStudy, CaseStudyConfig, TrueModel, build_case_study,
                        generate_dataset, portfolio_program, random_correlation_vine)
from .core import (Box, CostSpec, DiscreteDistribution, FeasibleSet, FullSpace, Polyhedron,
                   cost_dual_norm_bound, evaluate_cost, project_onto_support)
from .dro import (SAA, CVaRSet, DeviationBound, DROSolution, Hellinger, MeanUpperSemidev,
                  SampleRobust, Variation, Wasserstein, deviation_sup, discrete_sup,
                  solve_discrete_support_dro, solve_dro, solve_saa, solve_sample_robust,
                  solve_wasserstein_dro)
from .evaluation import MRPConfig, UCBReport, mrp_ucb, out_of_sample_cost, ucb_from_gaps
from .exceptions import (ConfigurationError, ContractError, CovarDROError,
                         DegenerateLeverageError, InfeasibleError, NonConvergenceError,
                         SingularDesignError, SolverError)
from .radius import (RadiusGrid, TuningConfig, default_grid, select_radius,
                     tune_radius_covariate_dependent, tune_radius_covariate_independent,
                     tune_radius_naive)
from .regression import (Dataset, RegressionModel, cv_lasso_penalty, cv_penalty, fit_linear,
                         loo_residuals, predict_and_residuals)
from .scenarios import ScenarioSet, build_er_scenarios, wasserstein_p_distance

__all__ = [
    "Box", "build_case_study", "build_er_scenarios", "CaseStudy", "CaseStudyConfig",
    "ConfigurationError", "ContractError", "cost_dual_norm_bound", "CostSpec",
    "CovarDROError", "cv_lasso_penalty", "cv_penalty", "CVaRSet", "Dataset",
    "DegenerateLeverageError", "deviation_sup", "DeviationBound", "discrete_sup",
    "DiscreteDistribution", "DROSolution", "evaluate_cost", "FeasibleSet", "fit_linear",
    "FullSpace", "generate_dataset", "Hellinger", "HighsBackend", "InfeasibleError",
    "loo_residuals", "LPResult", "MeanUpperSemidev", "mrp_ucb", "MRPConfig",
    "NonConvergenceError", "out_of_sample_cost", "default_grid", "Polyhedron",
    "portfolio_program", "predict_and_residuals", "project_onto_support", "RadiusGrid",
    "random_correlation_vine", "RegressionModel", "SAA", "SampleRobust", "ScenarioSet",
    "select_radius", "SingularDesignError", "solve_discrete_support_dro", "solve_dro",
    "solve_saa", "solve_sample_robust", "solve_wasserstein_dro", "SolverBackend",
    "SolverError", "TrueModel", "tune_radius_covariate_dependent",
    "tune_radius_covariate_independent", "tune_radius_naive", "TuningConfig",
    "ucb_from_gaps", "UCBReport", "Variation", "Wasserstein", "wasserstein_p_distance",
]
