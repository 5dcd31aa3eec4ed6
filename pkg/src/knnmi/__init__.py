"""Fixed-k nearest-neighbor estimators of entropy and mutual information."""

from .dataset import (Dataset, DegeneracyPolicy, DuplicateSampleError, IngestionError,
                      check_duplicates, load_csv)
from .entropy import (EntropyConfig, LocalEntropyTerms, kl_entropy, truncated_kl_entropy,
                      truncation_threshold)
from .experiments import (ExperimentResult, ExperimentSpec, fit_loglog_slope, pearson,
                          run_bias_table, run_correlation_boost, run_experiment, run_mse_slope)
from .knn import (INCLUSIVE, STRICT, NeighborIndex, NeighborStats, Norm, brute_force_stats,
                  build_index, count_within, kth_nn_distance, neighbor_stats)
from .mi import (LocalMiTerms, MiMethod, decompose_local, estimate_mi, mi_3kl, mi_biksg,
                 mi_ksg, mi_truncated)
from .mmi import (BalanceError, BalancedSetFunction, mmi_biksg, mmi_general, mmi_ksg,
                  mmi_l_plus_1_kl)
from .report import EstimateReport
from .specfn import BallVolume, digamma, log_ball_volume, log_gamma
from .synth import (BetaIID, MultivariateNormal, UniformCube, beta_entropy, make_rng,
                    sample, true_entropy, true_mi)

__version__ = "0.1.0"

__all__ = [
    "BallVolume", "BalanceError", "BalancedSetFunction", "BetaIID", "Dataset",
    "DegeneracyPolicy", "DuplicateSampleError", "EntropyConfig", "EstimateReport",
    "ExperimentResult", "ExperimentSpec", "INCLUSIVE", "IngestionError",
    "LocalEntropyTerms", "LocalMiTerms", "MiMethod", "MultivariateNormal",
    "NeighborIndex", "NeighborStats", "Norm", "STRICT", "UniformCube", "beta_entropy",
    "brute_force_stats", "build_index", "check_duplicates", "count_within",
    "decompose_local", "digamma", "estimate_mi", "fit_loglog_slope", "kl_entropy",
    "kth_nn_distance", "load_csv", "log_ball_volume", "log_gamma", "make_rng",
    "mi_3kl", "mi_biksg", "mi_ksg", "mi_truncated", "mmi_biksg", "mmi_general",
    "mmi_ksg", "mmi_l_plus_1_kl", "neighbor_stats", "pearson", "run_bias_table",
    "run_correlation_boost", "run_experiment", "run_mse_slope", "sample",
    "true_entropy", "true_mi", "truncated_kl_entropy", "truncation_threshold",
]
