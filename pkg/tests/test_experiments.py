import json
import math

import numpy as np
import pytest

from uqeval.datasets import DatasetKind, Split, generate
from uqeval.metrics import EvalConfig, evaluate
from uqeval.experiments import (
    SIZES,
    StabilityResult,
    StabilityRow,
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
from uqeval.predictors import TrueDistributionPredictor, make_records
from uqeval.seeds import TAG_REPLICATE, derive_seed

ORACLE_HET = TrueDistributionPredictor(DatasetKind.HETEROSCEDASTIC)
ORACLE_HOMO = TrueDistributionPredictor(DatasetKind.HOMOSCEDASTIC)


def test_sizes_cover_the_documented_range() -> None:
    assert SIZES == tuple(2**k for k in range(3, 17))


def test_convergence_rows_and_determinism() -> None:
    sizes = (8, 16, 32)
    a = convergence_experiment(ORACLE_HET, base_seed=1, sizes=sizes)
    b = convergence_experiment(ORACLE_HET, base_seed=1, sizes=sizes)
    assert [r.test_size for r in a.rows] == list(sizes)
    for ra, rb in zip(a.rows, b.rows):
        assert ra.report == rb.report


def test_convergence_subsets_are_nested_prefixes() -> None:
    # the row for a given size is identical whether or not smaller sizes
    # are requested, because subsets are prefixes of one seeded permutation
    full = convergence_experiment(ORACLE_HET, base_seed=3, sizes=(8, 16, 64))
    solo = convergence_experiment(ORACLE_HET, base_seed=3, sizes=(64,))
    assert full.rows[-1].report == solo.rows[0].report


def test_convergence_full_size_equals_one_shot_evaluation() -> None:
    n = 512
    result = convergence_experiment(ORACLE_HET, base_seed=0, sizes=(n,))
    data = generate(DatasetKind.HETEROSCEDASTIC, Split.TEST, n, 0)
    direct = evaluate(make_records(ORACLE_HET, data), EvalConfig())
    row = result.rows[0].report
    assert row.ause == pytest.approx(direct.ause, rel=1e-12)
    assert row.ce == pytest.approx(direct.ce, rel=1e-12)
    assert row.spearman == pytest.approx(direct.spearman, rel=1e-12)
    assert row.nll == pytest.approx(direct.nll, rel=1e-12)


def test_guarded_report_records_nan_with_warning() -> None:
    data = generate(DatasetKind.HOMOSCEDASTIC, Split.TEST, 64, 0)
    records = make_records(ORACLE_HOMO, data)
    with pytest.warns(RuntimeWarning, match="spearman undefined"):
        report = guarded_report(records)
    assert math.isnan(report.spearman)
    assert math.isfinite(report.ause)
    assert math.isfinite(report.nll)


def test_stability_csv_format_and_nan_marker() -> None:
    data = generate(DatasetKind.HOMOSCEDASTIC, Split.TEST, 32, 0)
    with pytest.warns(RuntimeWarning):
        report = guarded_report(make_records(ORACLE_HOMO, data))
    result = StabilityResult(rows=(StabilityRow(32, report),))
    text = result.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "test_size,ause,spearman,nll,ece"
    cells = lines[1].split(",")
    assert cells[0] == "32"
    assert cells[2] == "nan"
    assert result.to_csv(mean_prefix=True).startswith(
        "test_size,mean_ause,mean_spearman,mean_nll,mean_ece"
    )


def test_bias_single_replicate_matches_direct_evaluation() -> None:
    size = 64
    result = bias_experiment(ORACLE_HET, base_seed=5, replicates=1, sizes=(size,))
    seed = derive_seed(5, TAG_REPLICATE, 0, 0)
    data = generate(DatasetKind.HETEROSCEDASTIC, Split.TEST, size, seed)
    direct = evaluate(make_records(ORACLE_HET, data), EvalConfig())
    row = result.rows[0].report
    assert row.ause == pytest.approx(direct.ause, rel=1e-12)
    assert row.nll == pytest.approx(direct.nll, rel=1e-12)


def test_bias_replicates_average_and_determinism() -> None:
    sizes = (8, 16)
    a = bias_experiment(ORACLE_HET, base_seed=2, replicates=3, sizes=sizes)
    b = bias_experiment(ORACLE_HET, base_seed=2, replicates=3, sizes=sizes)
    assert a == b
    assert [r.test_size for r in a.rows] == list(sizes)
    single = bias_experiment(ORACLE_HET, base_seed=2, replicates=1, sizes=sizes)
    assert a.rows[0].report.nll != single.rows[0].report.nll
    with pytest.raises(ValueError):
        bias_experiment(ORACLE_HET, replicates=0, sizes=sizes)


def test_table_experiment_rows_and_csv() -> None:
    rows = table_experiment(
        [("oracle", ORACLE_HET)],
        kinds=(DatasetKind.HETEROSCEDASTIC,),
        base_seed=0,
        n=256,
    )
    assert len(rows) == 1
    assert rows[0].dataset == "heteroscedastic"
    assert rows[0].predictor == "oracle"
    text = table_csv(rows)
    lines = text.strip().split("\n")
    assert lines[0] == "dataset,predictor,ause,ce,spearman,nll"
    cells = lines[1].split(",")
    assert cells[0] == "heteroscedastic"
    assert float(cells[5]) == pytest.approx(rows[0].report.nll, rel=1e-5)


def test_table_supports_multiple_predictors_per_kind() -> None:
    with pytest.warns(RuntimeWarning):  # homoscedastic oracle has tied uncertainties
        rows = table_experiment(
            [("oracle", ORACLE_HOMO), ("oracle-x2", ORACLE_HOMO)],
            kinds=(DatasetKind.HOMOSCEDASTIC,),
            base_seed=0,
            n=128,
        )
    assert [(r.dataset, r.predictor) for r in rows] == [
        ("homoscedastic", "oracle"),
        ("homoscedastic", "oracle-x2"),
    ]
    # both predictors saw the same test set
    assert rows[0].report.nll == rows[1].report.nll


def test_sparsification_csv_layout() -> None:
    text = sparsification_csv(ORACLE_HET, DatasetKind.HETEROSCEDASTIC, base_seed=0, n=64)
    lines = text.strip().split("\n")
    assert lines[0] == "fraction,oracle,sparsification"
    assert len(lines) == 65
    first = [float(c) for c in lines[1].split(",")]
    assert first == [0.0, 1.0, 1.0]
    fractions = np.array([float(l.split(",")[0]) for l in lines[1:]])
    assert np.allclose(fractions, np.arange(64) / 64)
    oracle = np.array([float(l.split(",")[1]) for l in lines[1:]])
    assert np.all(np.diff(oracle) <= 1e-12)


def test_homoscedastic_oracle_curve_stays_flat_at_scale() -> None:
    n = 2**16
    data = generate(DatasetKind.HOMOSCEDASTIC, Split.TEST, n, 0)
    records = make_records(ORACLE_HOMO, data)
    from uqeval.metrics import sparsification_curve

    curve = sparsification_curve(records)
    half = curve.fractions <= 0.5
    assert np.all(curve.by_uncertainty[half] >= 0.95)
    assert np.all(curve.by_uncertainty[half] <= 1.05)


def test_density_grid_csv_two_by_two() -> None:
    text = density_grid_csv(ORACLE_HOMO, np.array([0.0, 0.5]), np.array([-1.0, 1.0]))
    lines = text.strip().split("\n")
    assert lines[0] == "x,y,z"
    assert len(lines) == 5
    # x is the outer loop
    assert [float(l.split(",")[0]) for l in lines[1:]] == [0.0, 0.0, 0.5, 0.5]
    assert [float(l.split(",")[1]) for l in lines[1:]] == [-1.0, 1.0, -1.0, 1.0]


# ----------------------------------------------------------------- manifests

def test_manifest_round_trip_and_hashes(tmp_path) -> None:
    artifact = tmp_path / "out.csv"
    artifact.write_text("x,y\n1.0,2.0\n", encoding="utf-8")
    manifest = make_manifest(
        "generate",
        ["generate", "--dataset", "homoscedastic", "--out", str(artifact)],
        {"dataset": "homoscedastic", "n": 1, "seed": 0},
        [artifact],
    )
    assert manifest.outputs[0]["sha256"] == sha256_file(artifact)
    path = tmp_path / "m.json"
    path.write_text(manifest.to_json(), encoding="utf-8")
    back = read_manifest(path)
    assert back.command == "generate"
    assert back.argv == manifest.argv
    assert back.outputs == manifest.outputs
    assert back.config_hash == manifest.config_hash


def test_manifest_json_is_stable_and_config_hash_sensitive(tmp_path) -> None:
    artifact = tmp_path / "a.txt"
    artifact.write_text("data", encoding="utf-8")
    m1 = make_manifest("eval", ["eval"], {"n": 5}, [artifact])
    m2 = make_manifest("eval", ["eval"], {"n": 5}, [artifact])
    assert m1.to_json() == m2.to_json()
    m3 = make_manifest("eval", ["eval"], {"n": 6}, [artifact])
    assert m1.config_hash != m3.config_hash
    payload = json.loads(m1.to_json())
    assert payload["manifest_version"] == 1
