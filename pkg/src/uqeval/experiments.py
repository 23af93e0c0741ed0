"""Experiment harness: metric stability studies and summary tables.

Two stability protocols over a fixed predictor (heteroscedastic data by
default):

    convergence  one size-2^16 test set; metrics on nested subsets of
                 sizes 2^3 .. 2^16 (each subset is a prefix of one seeded
                 permutation, so smaller subsets are contained in larger)
    bias         100 independently generated test sets per size; the per
                 size means expose small-sample bias of each metric

Metrics that are undefined for a given input (Spearman under constant
uncertainty) are recorded as nan with a warning, never as silent zeros.
All CSV emission is deterministic: full-precision repr values, LF line
endings, no timestamps.
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .datasets import DatasetKind, Split, generate
from .metrics import (
    REPORT_HEADER,
    EvalConfig,
    EvaluationRecords,
    MetricReport,
    UndefinedMetricError,
    ause,
    calibration_error,
    nll,
    sparsification_curve,
    spearman,
)
from .predictors import log_density_grid, make_records
from .seeds import TAG_REPLICATE, TAG_SUBSET, TAG_TABLE, derive_seed, make_rng

SIZES = tuple(2**k for k in range(3, 17))
DEFAULT_REPLICATES = 100


def guarded_report(records: EvaluationRecords, config: EvalConfig | None = None) -> MetricReport:
    """Like metrics.evaluate but records undefined metrics as nan."""
    config = config or EvalConfig()
    try:
        rho = spearman(records.uncertainties, records.abs_errors, config.rank_tie_mode)
    except UndefinedMetricError as exc:
        warnings.warn(f"spearman undefined ({exc}); recording nan", RuntimeWarning)
        rho = float("nan")
    return MetricReport(
        ause=ause(records, config.sparsification_grid, config.tie_seed),
        ce=calibration_error(records.pits, config.calibration),
        spearman=rho,
        nll=nll(records),
    )


# ----------------------------------------------------------------- stability

@dataclass(frozen=True)
class StabilityRow:
    test_size: int
    report: MetricReport


@dataclass(frozen=True)
class StabilityResult:
    rows: tuple[StabilityRow, ...]

    def to_csv(self, mean_prefix: bool = False) -> str:
        names = ("ause", "spearman", "nll", "ece")
        header = ",".join(["test_size"] + [("mean_" if mean_prefix else "") + c for c in names])
        lines = [header]
        for row in self.rows:
            r = row.report
            values = (r.ause, r.spearman, r.nll, r.ce)
            lines.append(",".join([str(row.test_size)] + [repr(float(v)) for v in values]))
        return "\n".join(lines) + "\n"


def convergence_experiment(
    predictor,
    kind: DatasetKind = DatasetKind.HETEROSCEDASTIC,
    base_seed: int = 0,
    eval_config: EvalConfig | None = None,
    sizes: tuple[int, ...] = SIZES,
) -> StabilityResult:
    data = generate(kind, Split.TEST, max(sizes), base_seed)
    records = make_records(predictor, data)
    perm = make_rng(derive_seed(base_seed, TAG_SUBSET)).permutation(len(records))
    rows = []
    for size in sizes:
        subset = records.take(perm[:size])
        rows.append(StabilityRow(size, guarded_report(subset, eval_config)))
    return StabilityResult(tuple(rows))


def bias_experiment(
    predictor,
    kind: DatasetKind = DatasetKind.HETEROSCEDASTIC,
    base_seed: int = 0,
    replicates: int = DEFAULT_REPLICATES,
    eval_config: EvalConfig | None = None,
    sizes: tuple[int, ...] = SIZES,
) -> StabilityResult:
    if replicates < 1:
        raise ValueError("replicates must be positive")
    rows = []
    for size_ix, size in enumerate(sizes):
        reports = []
        for rep in range(replicates):
            seed = derive_seed(base_seed, TAG_REPLICATE, size_ix, rep)
            data = generate(kind, Split.TEST, size, seed)
            reports.append(guarded_report(make_records(predictor, data), eval_config))
        mean = MetricReport(
            ause=float(np.mean([r.ause for r in reports])),
            ce=float(np.mean([r.ce for r in reports])),
            spearman=float(np.mean([r.spearman for r in reports])),
            nll=float(np.mean([r.nll for r in reports])),
        )
        rows.append(StabilityRow(size, mean))
    return StabilityResult(tuple(rows))


# ----------------------------------------------------------------- summary table

@dataclass(frozen=True)
class TableRow:
    dataset: str
    predictor: str
    report: MetricReport


def table_experiment(
    predictors: list[tuple[str, object]],
    kinds: tuple[DatasetKind, ...] = tuple(DatasetKind),
    base_seed: int = 0,
    n: int = 2**16,
    eval_config: EvalConfig | None = None,
) -> tuple[TableRow, ...]:
    """One test set per dataset kind, shared across the named predictors."""
    rows = []
    for kind_ix, kind in enumerate(kinds):
        data = generate(kind, Split.TEST, n, derive_seed(base_seed, TAG_TABLE, kind_ix))
        for name, predictor in predictors:
            report = guarded_report(make_records(predictor, data), eval_config)
            rows.append(TableRow(kind.value, name, report))
    return tuple(rows)


def table_csv(rows: tuple[TableRow, ...]) -> str:
    lines = [REPORT_HEADER]
    for row in rows:
        lines.append(row.report.csv_row(row.dataset, row.predictor))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- artifact CSVs

def sparsification_csv(
    predictor,
    kind: DatasetKind,
    base_seed: int = 0,
    n: int = 2**16,
    eval_config: EvalConfig | None = None,
) -> str:
    eval_config = eval_config or EvalConfig()
    data = generate(kind, Split.TEST, n, base_seed)
    records = make_records(predictor, data)
    curve = sparsification_curve(records, eval_config.sparsification_grid, eval_config.tie_seed)
    lines = ["fraction,oracle,sparsification"]
    for f, orc, unc in zip(curve.fractions, curve.by_oracle, curve.by_uncertainty):
        lines.append(f"{float(f)!r},{float(orc)!r},{float(unc)!r}")
    return "\n".join(lines) + "\n"


def density_grid_csv(
    predictor,
    x_values: np.ndarray,
    y_values: np.ndarray,
) -> str:
    """Rows iterate x in the outer loop and y in the inner loop."""
    z = log_density_grid(predictor, x_values, y_values)
    lines = ["x,y,z"]
    for i, x in enumerate(x_values):
        for j, y in enumerate(y_values):
            lines.append(f"{float(x)!r},{float(y)!r},{float(z[i, j])!r}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- run manifests

MANIFEST_VERSION = 1


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to regenerate a run's artifacts byte-identically."""

    command: str
    argv: tuple[str, ...]
    parameters: dict
    outputs: tuple[dict, ...]
    manifest_version: int = MANIFEST_VERSION

    @property
    def config_hash(self) -> str:
        canon = json.dumps(self.parameters, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def to_json(self) -> str:
        payload = asdict(self)
        payload["argv"] = list(self.argv)
        payload["outputs"] = [dict(o) for o in self.outputs]
        payload["config_hash"] = self.config_hash
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def make_manifest(command: str, argv: list[str], parameters: dict, output_paths: list) -> RunManifest:
    outputs = tuple(
        {"path": str(p), "sha256": sha256_file(p)} for p in output_paths
    )
    return RunManifest(
        command=command,
        argv=tuple(str(a) for a in argv),
        parameters=dict(parameters),
        outputs=outputs,
    )


def read_manifest(path) -> RunManifest:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return RunManifest(
        command=payload["command"],
        argv=tuple(payload["argv"]),
        parameters=payload["parameters"],
        outputs=tuple(payload["outputs"]),
        manifest_version=payload["manifest_version"],
    )
