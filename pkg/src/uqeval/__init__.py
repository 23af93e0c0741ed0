"""Evaluation toolkit for predictive uncertainty in 1-D regression.

Synthetic benchmark generators with known conditional distributions, the
standard uncertainty metrics (AUSE, calibration error, Spearman rank
correlation, NLL), an analytic reference predictor, a small deep-ensemble
baseline trained from scratch, and experiment drivers for metric
stability studies.
"""
from .datasets import (
    DatasetKind,
    DomainError,
    CsvFormatError,
    LabeledSet,
    Split,
    conditional_mean,
    generate,
    read_csv,
    residual_std,
    write_csv,
)
from .distributions import Gaussian, GaussianMixture, moment_match, VARIANCE_FLOOR
from .metrics import (
    CalibrationConfig,
    EvalConfig,
    EvaluationRecords,
    MetricReport,
    RankTieMode,
    UndefinedMetricError,
    WeightMode,
    ause,
    calibration_error,
    empirical_frequency,
    evaluate,
    mae,
    nll,
    rank,
    sparsification_curve,
    spearman,
)
from .network import AdamConfig, MlpParams
from .predictors import (
    EnsemblePredictor,
    ScaledUncertaintyPredictor,
    TrainConfig,
    TrainingDivergedError,
    TrueDistributionPredictor,
    load_ensemble,
    log_density_grid,
    make_records,
    save_ensemble,
    train_ensemble,
)
from .experiments import (
    RunManifest,
    StabilityResult,
    StabilityRow,
    TableRow,
    bias_experiment,
    convergence_experiment,
    density_grid_csv,
    guarded_report,
    make_manifest,
    read_manifest,
    sha256_file,
    sparsification_csv,
    table_csv,
    table_experiment,
)

__version__ = "0.1.0"
