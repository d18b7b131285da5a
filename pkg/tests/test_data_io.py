import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
from scipy import sparse

from contpath.data_io import (
    dump_svmlight,
    generate_synthetic,
    load_csv,
    load_dataset,
    load_svmlight,
    normalize_columns,
    read_trace,
    synthetic_draw,
    write_bench_report,
    write_path_csv,
    write_trace,
)
from contpath.exceptions import DataError, DataParseError
from contpath.path_runner import run_path
from contpath.schemas import BenchRow, DatasetSpec, PathPolicy
from contpath.models import TerminationReason

GOLDEN = Path(__file__).parent / "data" / "golden_trace.json"


def test_synthetic_is_reproducible():
    X1, y1, b1 = synthetic_draw(15, 25, seed=3)
    X2, y2, b2 = synthetic_draw(15, 25, seed=3)
    np.testing.assert_array_equal(X1, X2)
    np.testing.assert_array_equal(y1, y2)
    np.testing.assert_array_equal(b1, b2)
    X3, _, _ = synthetic_draw(15, 25, seed=4)
    assert not np.array_equal(X1, X3)


def test_synthetic_design_is_pinned():
    # leading standard normals of PCG64(0), consumed row-major
    X, _, _ = synthetic_draw(2, 3, seed=0)
    expected = [[0.12573022, -0.13210486, 0.64042265], [0.10490012, -0.53566937, 0.36159505]]
    np.testing.assert_allclose(X, expected, rtol=1e-6)


def test_synthetic_draw_order():
    n, p, seed = 8, 12, 11
    X, y, beta = synthetic_draw(n, p, zero_frac=0.5, noise_sd=0.3, seed=seed)
    rng = np.random.Generator(np.random.PCG64(seed))
    X_ref = rng.standard_normal((n, p))
    beta_ref = rng.laplace(0.0, 1.0, size=p)
    beta_ref[rng.choice(p, size=6, replace=False)] = 0.0
    y_ref = X_ref @ beta_ref + rng.normal(0.0, 0.3, size=n)
    np.testing.assert_array_equal(X, X_ref)
    np.testing.assert_array_equal(beta, beta_ref)
    np.testing.assert_array_equal(y, y_ref)


def test_synthetic_sparsity():
    _, _, beta = synthetic_draw(10, 50, zero_frac=0.8, seed=0)
    assert np.count_nonzero(beta) == 10
    X, y, beta = synthetic_draw(10, 20, zero_frac=1.0, noise_sd=0.0, seed=0)
    assert not beta.any()
    assert not y.any()


@pytest.mark.parametrize("kwargs", [dict(n=0, p=3), dict(n=3, p=3, zero_frac=1.5), dict(n=3, p=3, noise_sd=-1.0)])
def test_synthetic_rejects_bad_arguments(kwargs):
    with pytest.raises(DataError):
        synthetic_draw(**kwargs)


def test_generate_synthetic_name_and_truth():
    prob, beta = generate_synthetic(12, 7, seed=5, return_truth=True)
    assert prob.name == "synthetic-12x7-seed5"
    assert beta.shape == (7,)
    assert prob.X.shape == (12, 7)


def test_load_svmlight(tmp_path):
    path = tmp_path / "tiny.svm"
    path.write_text("# header comment\n1.5 1:2 3:-1\n\n-0.5 2:4 # trailing\n0 \n", encoding="utf-8")
    prob = load_svmlight(path)
    np.testing.assert_allclose(prob.y, [1.5, -0.5, 0.0])
    np.testing.assert_allclose(prob.X.toarray(), [[2.0, 0.0, -1.0], [0.0, 4.0, 0.0], [0.0, 0.0, 0.0]])
    assert prob.X.is_sparse
    assert prob.name == "tiny"


@pytest.mark.parametrize(
    "body, line",
    [
        ("1 1:2\nx 1:2\n", 2),
        ("1 1:2\n1 2:3 1:1\n", 2),
        ("1 0:2\n", 1),
        ("1 1:2\n\n1 3\n", 3),
        ("1 1:abc\n", 1),
    ],
)
def test_load_svmlight_parse_errors(tmp_path, body, line):
    path = tmp_path / "bad.svm"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataParseError) as err:
        load_svmlight(path)
    assert err.value.line_number == line


@pytest.mark.parametrize("body", ["", "# only comments\n", "1 1:nan\n", "inf 1:1\n"])
def test_load_svmlight_data_errors(tmp_path, body):
    path = tmp_path / "bad.svm"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataError):
        load_svmlight(path)


def test_svmlight_dump_and_load(tmp_path):
    X, y, _ = synthetic_draw(6, 4, zero_frac=0.0, seed=1)
    X[2, 1] = 0.0
    path = tmp_path / "round.svm"
    dump_svmlight(path, X, y)
    prob = load_svmlight(path)
    np.testing.assert_array_equal(prob.X.toarray(), X)
    np.testing.assert_array_equal(prob.y, y)


def test_svmlight_round_trip_keeps_trailing_empty_columns(tmp_path):
    rng = np.random.default_rng(7)
    X = sparse.random(6, 5, density=0.5, format="csc", random_state=rng)
    X = X.tolil()
    X[:, 4] = 0.0
    X = X.tocsc()
    y = rng.standard_normal(6)
    path = tmp_path / "wide.svm"
    dump_svmlight(path, X, y)
    assert path.read_text(encoding="utf-8").startswith("# n_features: 5\n")
    prob = load_svmlight(path)
    assert prob.X.shape == (6, 5)
    np.testing.assert_array_equal(prob.X.toarray(), X.toarray())


def test_load_svmlight_declared_width(tmp_path):
    path = tmp_path / "narrow.svm"
    path.write_text("1 1:2\n0 2:1\n", encoding="utf-8")
    assert load_svmlight(path).X.shape == (2, 2)
    assert load_svmlight(path, n_features=4).X.shape == (2, 4)
    spec = DatasetSpec(source="svmlight", path=str(path), n_features=3)
    assert load_dataset(spec).X.shape == (2, 3)
    with pytest.raises(DataParseError) as err:
        load_svmlight(path, n_features=1)
    assert err.value.line_number == 2
    with pytest.raises(DataError):
        load_svmlight(path, n_features=0)


def test_header_after_samples_is_a_comment(tmp_path):
    path = tmp_path / "late.svm"
    path.write_text("1 1:2\n# n_features: 9\n0 2:1\n", encoding="utf-8")
    assert load_svmlight(path).X.shape == (2, 2)


def test_load_csv_by_name_and_index(tmp_path):
    path = tmp_path / "frame.csv"
    pd.DataFrame({"a": [1.0, 2.0, 3.0], "target": [0.5, 1.0, 1.5], "b": [0.0, 1.0, 0.0]}).to_csv(path, index=False)
    by_name = load_csv(path, "target")
    by_index = load_csv(path, 1)
    by_text_index = load_csv(path, "1")
    for prob in (by_name, by_index, by_text_index):
        np.testing.assert_allclose(prob.y, [0.5, 1.0, 1.5])
        np.testing.assert_allclose(prob.X.toarray(), [[1.0, 0.0], [2.0, 1.0], [3.0, 0.0]])


def test_load_csv_without_header(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("1,2,3\n4,5,6\n", encoding="utf-8")
    prob = load_csv(path, 0, header=False)
    np.testing.assert_allclose(prob.y, [1.0, 4.0])
    np.testing.assert_allclose(prob.X.toarray(), [[2.0, 3.0], [5.0, 6.0]])


@pytest.mark.parametrize(
    "body, target",
    [("a,b\n1,2\n", "missing"), ("a,b\n", "a"), ("a,b\n1,x\n", "a"), ("a\n1\n", "a"), ("a,b\n1,nan\n", "a")],
)
def test_load_csv_errors(tmp_path, body, target):
    path = tmp_path / "bad.csv"
    path.write_text(body, encoding="utf-8")
    with pytest.raises(DataError):
        load_csv(path, target)


def test_normalize_columns_flags_zero_columns():
    X = np.array([[3.0, 0.0, 1.0], [4.0, 0.0, 0.0]])
    normalized, zero = normalize_columns(X)
    np.testing.assert_allclose(np.linalg.norm(normalized, axis=0), [1.0, 0.0, 1.0])
    assert list(zero) == [False, True, False]
    sparse_normalized, _ = normalize_columns(sparse.csc_matrix(X))
    np.testing.assert_allclose(sparse_normalized.toarray(), normalized)


def test_load_dataset_synthetic():
    spec = DatasetSpec(source="synthetic", n=8, p=5, seed=2, normalize_columns=True)
    prob = load_dataset(spec)
    np.testing.assert_allclose(prob.X.col_norms, np.ones(5))
    assert prob.name == "synthetic-8x5-seed2"


def test_golden_trace_parses():
    document = read_trace(GOLDEN)
    assert document.meta.lambda_ == 1.0
    assert document.meta.terminated_by == TerminationReason.REACHED_LAMBDA
    assert [s.t for s in document.steps] == [0, 1]
    assert document.steps[0].gap_at_target == pytest.approx(0.53125)
    assert document.steps[1].active_indices == [0]
    assert document.certificates[0].progress_slack == 0.0


def test_write_trace(tmp_path, toy):
    result = run_path(toy, PathPolicy.simplified(1.0, 1e-6), record_masks=True)
    path = tmp_path / "trace.json"
    write_trace(result, path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    assert set(raw) == {"meta", "steps", "certificates", "grid"}
    assert raw["meta"]["lambda"] == 1.0
    assert "lambda_" not in raw["meta"]
    document = read_trace(path)
    assert document.steps == result.trace.steps
    assert document.meta == result.meta


def test_trace_floats_round_trip_bit_for_bit(tmp_path, small_synthetic):
    result = run_path(small_synthetic, PathPolicy.fastpath(small_synthetic.lambda_max / 10.0, 1e-6))
    path = tmp_path / "trace.json"
    write_trace(result, path)
    document = read_trace(path)
    assert document.steps == result.trace.steps
    assert document.certificates == result.certificates
    for record, written in zip(result.trace.steps, document.steps):
        assert float(f"{written.gap_at_target:.17g}") == record.gap_at_target
        assert written.lambda_t == record.lambda_t


def test_write_path_csv(tmp_path, small_synthetic):
    lam = small_synthetic.lambda_max / 10.0
    grid_run = run_path(small_synthetic, PathPolicy.geometric(lam, 1e-6, T=4))
    path = tmp_path / "grid.csv"
    write_path_csv(grid_run, path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["lambda", "nnz", "gap", "step"]
    assert len(frame) == 4

    step_run = run_path(small_synthetic, PathPolicy.simplified(lam, 1e-6))
    write_path_csv(step_run, path)
    frame = pd.read_csv(path)
    assert len(frame) == len(step_run.trace.steps)
    assert frame["lambda"].is_monotonic_decreasing


def test_write_bench_report(tmp_path):
    rows = [BenchRow(policy="geometric", screening=True, working_set=True, T=10, eps=1e-4, status="reached_lambda")]
    path = tmp_path / "bench.csv"
    frame = write_bench_report(rows, str(path))
    assert list(pd.read_csv(path).columns) == list(frame.columns)
    assert frame.loc[0, "policy"] == "geometric"
