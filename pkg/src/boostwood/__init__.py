"""boostwood: boosted subsampled forests with variance estimates.

A regression forest whose residuals are fit by further forests, plus an
infinitesimal-jackknife variance estimate for every prediction, prediction
intervals, a chi-square stopping test for further boosting, and the
simulation / cross-validation harnesses used to benchmark it all.
"""

from .archive import ArchiveError, load_model, save_model
from .boost import (BoostConfig, BoostedForest, SingularCovarianceError,
                    StopTestResult, count_variants, enumerate_patterns,
                    fit_boosted, predict_boosted, stop_test,
                    zero_mean_chi_square)
from .data import (DataError, Dataset, FoldPlan, load_csv, make_folds,
                   save_csv)
from .evaluation import (CvReport, SimDesign, SimReport,
                         compare_residual_modes, ks_normality,
                         performance_improvement, prediction_interval,
                         run_cv_benchmark, run_simulation,
                         standard_test_points)
from .forest import (BOOTSTRAP, SUBSAMPLE, ForestConfig, ForestStage,
                     OobPrediction, fit_forest, fit_forest_from_indices,
                     predict_forest, predict_oob, tree_matrix)
from .tree import TreeConfig, TreeModel, fit_tree, predict_tree
from .variance import (PredictionWithVariance, ij_covariance_matrix,
                       ij_covariance_pair, ij_variance_single,
                       predict_with_variance, variance_variant1,
                       variance_variant2)

__version__ = "0.1.0"

__all__ = [
    "ArchiveError", "BOOTSTRAP", "BoostConfig", "BoostedForest", "CvReport",
    "DataError", "Dataset", "FoldPlan", "ForestConfig", "ForestStage",
    "OobPrediction", "PredictionWithVariance", "SUBSAMPLE", "SimDesign",
    "SimReport", "SingularCovarianceError", "StopTestResult", "TreeConfig",
    "TreeModel", "compare_residual_modes", "count_variants",
    "enumerate_patterns", "fit_boosted", "fit_forest",
    "fit_forest_from_indices", "fit_tree", "ij_covariance_matrix",
    "ij_covariance_pair", "ij_variance_single", "ks_normality", "load_csv",
    "load_model", "make_folds", "performance_improvement",
    "predict_boosted", "predict_forest", "predict_oob", "predict_tree",
    "predict_with_variance", "prediction_interval", "run_cv_benchmark",
    "run_simulation", "save_csv", "save_model", "standard_test_points",
    "stop_test", "tree_matrix", "variance_variant1", "variance_variant2",
    "zero_mean_chi_square",
]
