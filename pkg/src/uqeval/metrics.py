"""Scoring metrics for predictive uncertainty in regression.

Four headline numbers per evaluation:

    AUSE      area between the uncertainty-ordered and error-ordered
              sparsification curves (0 = uncertainty ranks errors perfectly)
    CE        squared-deviation calibration error of the PIT values
    Spearman  rank correlation between uncertainty and absolute error
    NLL       mean negative log predictive density per sample

All functions operate on EvaluationRecords, a struct-of-arrays bundle of
per-sample quantities produced by `uqeval.predictors.make_records`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .seeds import TAG_TIEBREAK, derive_seed, make_rng


class UndefinedMetricError(ValueError):
    """Raised when a metric has no defined value for the given records."""


@dataclass(frozen=True, eq=False)
class EvaluationRecords:
    """Per-sample evaluation quantities, one array per field."""

    predictions: np.ndarray
    abs_errors: np.ndarray
    uncertainties: np.ndarray
    log_densities: np.ndarray
    pits: np.ndarray

    def __post_init__(self):
        fields = {}
        n = None
        for name in ("predictions", "abs_errors", "uncertainties", "log_densities", "pits"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be 1-D")
            if n is None:
                n = len(arr)
            elif len(arr) != n:
                raise ValueError("all record arrays must share one length")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            fields[name] = arr
        if np.any(fields["abs_errors"] < 0):
            raise ValueError("abs_errors must be nonnegative")
        if np.any(fields["pits"] < 0) or np.any(fields["pits"] > 1):
            raise ValueError("pits must lie in [0, 1]")
        for name, arr in fields.items():
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.abs_errors)

    def take(self, index: np.ndarray) -> "EvaluationRecords":
        return EvaluationRecords(
            self.predictions[index],
            self.abs_errors[index],
            self.uncertainties[index],
            self.log_densities[index],
            self.pits[index],
        )


def _require_nonempty(records: EvaluationRecords) -> None:
    if len(records) == 0:
        raise ValueError("empty records")


def mae(records: EvaluationRecords) -> float:
    _require_nonempty(records)
    return float(np.mean(records.abs_errors))


# ----------------------------------------------------------------- sparsification

@dataclass(frozen=True, eq=False)
class SparsificationCurve:
    """Normalized MAE of the retained subset as a removal fraction grows.

    At fractions[k], the floor(fractions[k] * N) samples ranked worst by
    the ordering criterion have been removed.  `by_uncertainty` removes
    highest predicted uncertainty first; `by_oracle` removes highest
    actual absolute error first.  Both start at 1 (nothing removed).
    """

    fractions: np.ndarray
    by_uncertainty: np.ndarray
    by_oracle: np.ndarray


def _removal_curve(values: np.ndarray, order: np.ndarray, removed: np.ndarray) -> np.ndarray:
    n = len(values)
    total = float(values.sum())
    if total == 0.0:
        # all-zero errors: every retained subset has MAE 0; the normalized
        # curve is taken as identically 1
        return np.ones(len(removed))
    prefix = np.concatenate([[0.0], np.cumsum(values[order])])
    retained_mean = (total - prefix[removed]) / (n - removed)
    return retained_mean / (total / n)


def sparsification_curve(
    records: EvaluationRecords, grid_size: int | None = None, tie_seed: int = 0
) -> SparsificationCurve:
    """Removal curves on the fraction grid k / grid_size, k = 0..grid_size-1.

    Ordering ties (notably constant uncertainties) are broken by a seeded
    uniform shuffle applied before a stable descending sort, so the result
    is deterministic in (records, grid_size, tie_seed).
    """
    _require_nonempty(records)
    n = len(records)
    k = n if grid_size is None else int(grid_size)
    if not 1 <= k <= n:
        raise ValueError(f"grid_size must be in [1, {n}]")

    perm = make_rng(derive_seed(tie_seed, TAG_TIEBREAK)).permutation(n)
    errors = records.abs_errors[perm]
    uncertainties = records.uncertainties[perm]
    order_by_u = np.argsort(-uncertainties, kind="stable")
    order_by_e = np.argsort(-errors, kind="stable")

    fractions = np.arange(k) / k
    removed = np.floor(fractions * n).astype(np.int64)
    return SparsificationCurve(
        fractions=fractions,
        by_uncertainty=_removal_curve(errors, order_by_u, removed),
        by_oracle=_removal_curve(errors, order_by_e, removed),
    )


def ause(records: EvaluationRecords, grid_size: int | None = None, tie_seed: int = 0) -> float:
    """Mean gap between the two sparsification curves (left Riemann sum)."""
    curve = sparsification_curve(records, grid_size, tie_seed)
    return float(np.mean(curve.by_uncertainty - curve.by_oracle))


# ----------------------------------------------------------------- calibration

class WeightMode(enum.Enum):
    # literal reading of the reference weighting: w_j = phat_j / N
    PAPER = "paper"
    UNIFORM = "uniform"


def _default_thresholds() -> np.ndarray:
    return np.linspace(0.0, 1.0, 100)


@dataclass(frozen=True, eq=False)
class CalibrationConfig:
    thresholds: np.ndarray = field(default_factory=_default_thresholds)
    weight_mode: WeightMode = WeightMode.PAPER

    def __post_init__(self):
        t = np.asarray(self.thresholds, dtype=np.float64)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("thresholds must be a nonempty 1-D array")
        if np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        if t[0] < 0.0 or t[-1] > 1.0:
            raise ValueError("thresholds must lie in [0, 1]")
        t.flags.writeable = False
        object.__setattr__(self, "thresholds", t)


def empirical_frequency(pits: np.ndarray, p: float) -> float:
    """Fraction of PIT values not exceeding p."""
    pits = np.asarray(pits, dtype=np.float64)
    if pits.size == 0:
        raise ValueError("empty pits")
    return float(np.count_nonzero(pits <= p) / pits.size)


def calibration_error(pits: np.ndarray, config: CalibrationConfig | None = None) -> float:
    """Weighted squared deviation between nominal and observed coverage."""
    config = config or CalibrationConfig()
    pits = np.asarray(pits, dtype=np.float64)
    if pits.size == 0:
        raise ValueError("empty pits")
    observed = np.searchsorted(np.sort(pits), config.thresholds, side="right") / pits.size
    if config.weight_mode is WeightMode.PAPER:
        weights = observed / pits.size
    else:
        weights = np.full(len(config.thresholds), 1.0 / len(config.thresholds))
    return float(np.sum(weights * (config.thresholds - observed) ** 2))


# ----------------------------------------------------------------- rank correlation

class RankTieMode(enum.Enum):
    # ties share the minimum rank: r(x_i) = 1 + |{j : x_j < x_i}|
    PAPER = "paper"
    # ties share the average rank, as in standard statistics references
    AVERAGE = "average"


def rank(values: np.ndarray, tie_mode: RankTieMode = RankTieMode.PAPER) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) == 0:
        raise ValueError("values must be a nonempty 1-D array")
    ordered = np.sort(values)
    below = np.searchsorted(ordered, values, side="left")
    if tie_mode is RankTieMode.PAPER:
        return below + 1
    through = np.searchsorted(ordered, values, side="right")
    return (below + through + 1) / 2.0


def spearman(
    uncertainties: np.ndarray,
    abs_errors: np.ndarray,
    tie_mode: RankTieMode = RankTieMode.PAPER,
) -> float:
    """Pearson correlation of the two rank sequences."""
    u = np.asarray(uncertainties, dtype=np.float64)
    e = np.asarray(abs_errors, dtype=np.float64)
    if u.shape != e.shape or u.ndim != 1:
        raise ValueError("inputs must be 1-D arrays of equal length")
    if len(u) < 2:
        raise UndefinedMetricError("need at least 2 samples")
    ru = rank(u, tie_mode).astype(np.float64)
    re = rank(e, tie_mode).astype(np.float64)
    du = ru - ru.mean()
    de = re - re.mean()
    denom = np.sqrt(np.sum(du * du) * np.sum(de * de))
    if denom == 0.0:
        raise UndefinedMetricError("rank variance is zero")
    return float(np.clip(np.sum(du * de) / denom, -1.0, 1.0))


# ----------------------------------------------------------------- NLL and report

def nll(records: EvaluationRecords) -> float:
    """Mean negative log predictive density per sample."""
    _require_nonempty(records)
    return float(-np.mean(records.log_densities))


@dataclass(frozen=True)
class EvalConfig:
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    rank_tie_mode: RankTieMode = RankTieMode.PAPER
    sparsification_grid: int | None = None
    tie_seed: int = 0


REPORT_HEADER = "dataset,predictor,ause,ce,spearman,nll"


@dataclass(frozen=True)
class MetricReport:
    ause: float
    ce: float
    spearman: float
    nll: float

    def csv_row(self, dataset: str, predictor: str) -> str:
        cells = [f"{v:.6g}" for v in (self.ause, self.ce, self.spearman, self.nll)]
        return ",".join([dataset, predictor] + cells)


def evaluate(records: EvaluationRecords, config: EvalConfig | None = None) -> MetricReport:
    """All four metrics in one pass; propagates component errors."""
    config = config or EvalConfig()
    return MetricReport(
        ause=ause(records, config.sparsification_grid, config.tie_seed),
        ce=calibration_error(records.pits, config.calibration),
        spearman=spearman(records.uncertainties, records.abs_errors, config.rank_tie_mode),
        nll=nll(records),
    )
