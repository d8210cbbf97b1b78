"""One-class novelty detection trained by Cholesky-factored kernel regression.

The model projects a probe through a kernel expansion whose coefficients
solve a single symmetric positive definite linear system, so training
needs one Cholesky factorization instead of an eigen-decomposition, and
new training rows extend the factor incrementally.  Baseline scorers and
a repeated-split AUC harness round out the toolkit.
"""

from .baselines import (
    EigenSolverDidNotConverge,
    KMeansModel,
    KnnddModel,
    KpcaModel,
    default_component_count,
    kmeans_fit,
    kmeans_score,
    knndd_fit,
    knndd_score,
    kpca_fit,
    kpca_score,
    kpca_score_batch,
)
from .cholesky import (
    CholeskyFactor,
    NotPositiveDefinite,
    factor_batch,
    factor_extend,
    factor_init,
    solve_lower_transposed,
    solve_spd,
    solve_upper,
)
from .dataset import (
    DataFormatError,
    Dataset,
    l2_normalize,
    l2_normalize_rows,
    load_csv,
    load_features_csv,
    make_synthetic,
    random_split,
    write_csv,
)
from .evaluation import (
    BenchReport,
    FriedmanResult,
    ScoredSet,
    bench_run,
    best_neighborhood,
    chi_square_from_ranks,
    chi_square_p_value,
    friedman_ranks,
    friedman_test,
    make_scorer,
    repeated_aucs,
    repeated_eval,
    roc_auc,
    write_bench_csv,
    write_bench_json,
    write_ranks_csv,
)
from .kernel import (
    GramMatrix,
    KernelSpec,
    gram,
    kernel_cross,
    kernel_eval,
    kernel_vector,
    median_pairwise_distance,
)
from .model import (
    Decision,
    Model,
    ModelFormatError,
    calibrate_threshold,
    classify,
    fit,
    fit_incremental,
    fit_supervised,
    load_model,
    project_train,
    save_model,
    score,
    score_batch,
)

__version__ = "0.1.0"

__all__ = [
    "BenchReport",
    "CholeskyFactor",
    "DataFormatError",
    "Dataset",
    "Decision",
    "EigenSolverDidNotConverge",
    "FriedmanResult",
    "GramMatrix",
    "KMeansModel",
    "KernelSpec",
    "KnnddModel",
    "KpcaModel",
    "Model",
    "ModelFormatError",
    "NotPositiveDefinite",
    "ScoredSet",
    "bench_run",
    "best_neighborhood",
    "calibrate_threshold",
    "chi_square_from_ranks",
    "chi_square_p_value",
    "classify",
    "default_component_count",
    "factor_batch",
    "factor_extend",
    "factor_init",
    "fit",
    "fit_incremental",
    "fit_supervised",
    "friedman_ranks",
    "friedman_test",
    "gram",
    "kernel_cross",
    "kernel_eval",
    "kernel_vector",
    "kmeans_fit",
    "kmeans_score",
    "knndd_fit",
    "knndd_score",
    "kpca_fit",
    "kpca_score",
    "kpca_score_batch",
    "l2_normalize",
    "l2_normalize_rows",
    "load_csv",
    "load_features_csv",
    "load_model",
    "make_scorer",
    "make_synthetic",
    "median_pairwise_distance",
    "project_train",
    "random_split",
    "repeated_aucs",
    "repeated_eval",
    "roc_auc",
    "save_model",
    "score",
    "score_batch",
    "solve_lower_transposed",
    "solve_spd",
    "solve_upper",
    "write_bench_csv",
    "write_bench_json",
    "write_csv",
    "write_ranks_csv",
]
