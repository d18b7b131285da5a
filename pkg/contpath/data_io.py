"""
contpath - Data I/O
Dataset loaders, synthetic benchmarks and trace / report serialization
"""

import logging
import math
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import sparse

from .exceptions import DataError, DataParseError
from .models import DatasetSource, DesignMatrix, Problem
from .schemas import BenchRow, DatasetSpec, TraceDocument

# Configure logging
logger = logging.getLogger(__name__)

N_FEATURES_HEADER = re.compile(r"^#\s*n_features\s*[:=]\s*(\d+)\s*$")


# ===============================
# Synthetic data
# ===============================


def synthetic_draw(n: int, p: int, zero_frac: float = 0.8, noise_sd: float = 1.0, seed: int = 0):
    """(X, y, beta_star) from a PCG64 generator seeded with ``seed``.

    Draw order: X standard normal (n x p, row-major), beta_star Laplace(0, 1),
    floor(zero_frac p) coordinates of beta_star chosen without replacement and
    set to zero, then the Gaussian noise.
    """
    if n < 1 or p < 1:
        raise DataError(f"Synthetic data needs n, p >= 1, got n={n}, p={p}")
    if not 0.0 <= zero_frac <= 1.0:
        raise DataError(f"zero_frac must be in [0, 1], got {zero_frac}")
    if noise_sd < 0:
        raise DataError(f"noise_sd must be nonnegative, got {noise_sd}")

    rng = np.random.Generator(np.random.PCG64(seed))
    X = rng.standard_normal((n, p))
    beta_star = rng.laplace(0.0, 1.0, size=p)
    n_zero = int(math.floor(zero_frac * p))
    if n_zero:
        beta_star[rng.choice(p, size=n_zero, replace=False)] = 0.0
    noise = rng.normal(0.0, noise_sd, size=n)
    y = X @ beta_star + noise
    return X, y, beta_star


def generate_synthetic(
    n: int,
    p: int,
    zero_frac: float = 0.8,
    noise_sd: float = 1.0,
    seed: int = 0,
    return_truth: bool = False,
) -> Union[Problem, Tuple[Problem, np.ndarray]]:
    """Gaussian design with a sparse Laplace ground truth and Gaussian noise."""
    X, y, beta_star = synthetic_draw(n, p, zero_frac, noise_sd, seed)
    prob = Problem(X=DesignMatrix.from_array(X), y=y, name=f"synthetic-{n}x{p}-seed{seed}")
    logger.debug(
        f"Generated {prob.name}: {int(np.count_nonzero(beta_star))} nonzero coefficients, "
        f"lambda_max={prob.lambda_max:.6e}"
    )
    if return_truth:
        return prob, beta_star
    return prob


# ===============================
# Loaders
# ===============================


def normalize_columns(X) -> Tuple[Union[np.ndarray, sparse.csc_matrix], np.ndarray]:
    """Scale columns to unit Euclidean norm; zero columns are left as is and flagged."""
    design = DesignMatrix.from_array(X)
    norms = design.col_norms
    zero = norms == 0
    scale = np.ones_like(norms)
    scale[~zero] = 1.0 / norms[~zero]
    if design.is_sparse:
        normalized = sparse.csc_matrix(design.data @ sparse.diags(scale))
    else:
        normalized = np.asfortranarray(design.data * scale)
    if zero.any():
        logger.warning(f"{int(zero.sum())} zero-norm columns left unnormalized: {np.flatnonzero(zero)[:10].tolist()}")
    return normalized, zero


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise DataError(f"{what} contains non-finite values")


def load_svmlight(path, normalize: bool = False, n_features: Optional[int] = None) -> Problem:
    """Read "label idx:val idx:val ..." lines (1-based ascending indices, '#' comments).

    The width is ``n_features`` when given, else a "# n_features: p" header line,
    else the largest index seen. Without a declared width trailing all-zero columns are lost.
    """
    if n_features is not None and n_features < 1:
        raise DataError(f"n_features must be at least 1, got {n_features}")
    declared = n_features
    path = Path(path)
    labels: List[float] = []
    indptr = [0]
    indices: List[int] = []
    data: List[float] = []

    with path.open("r", encoding="utf-8") as handle:
        for line_number, raw in enumerate(handle, start=1):
            header = N_FEATURES_HEADER.match(raw.strip())
            if header and n_features is None and not labels:
                declared = int(header.group(1))
                if declared < 1:
                    raise DataParseError(line_number, f"n_features must be at least 1, got {declared}")
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                labels.append(float(tokens[0]))
            except ValueError:
                raise DataParseError(line_number, f"bad label '{tokens[0]}'")

            previous = 0
            for token in tokens[1:]:
                idx, sep, value = token.partition(":")
                if not sep:
                    raise DataParseError(line_number, f"expected idx:val, got '{token}'")
                try:
                    j = int(idx)
                    v = float(value)
                except ValueError:
                    raise DataParseError(line_number, f"bad entry '{token}'")
                if j < 1:
                    raise DataParseError(line_number, f"indices are 1-based, got {j}")
                if declared is not None and j > declared:
                    raise DataParseError(line_number, f"index {j} exceeds n_features={declared}")
                if j <= previous:
                    raise DataParseError(line_number, f"indices must be strictly ascending ({previous} then {j})")
                previous = j
                if v != 0.0:
                    indices.append(j - 1)
                    data.append(v)
            indptr.append(len(indices))

    if not labels:
        raise DataError(f"{path} contains no samples")

    y = np.asarray(labels, dtype=np.float64)
    values = np.asarray(data, dtype=np.float64)
    _check_finite(y, "labels")
    _check_finite(values, "feature values")

    seen = (max(indices) + 1) if indices else 1
    p = declared if declared is not None else seen
    X = sparse.csr_matrix(
        (values, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), p),
    ).tocsc()
    logger.info(f"Loaded {path.name}: n={X.shape[0]}, p={X.shape[1]}, nnz={X.nnz}")

    if normalize:
        X, _ = normalize_columns(X)
    return Problem(X=DesignMatrix.from_array(X), y=y, name=path.stem)


def load_csv(path, target_col: Union[int, str], header: bool = True, normalize: bool = False) -> Problem:
    """Dense CSV; the target column is given by name or by 0-based position."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, header=0 if header else None)
    except pd.errors.EmptyDataError:
        raise DataError(f"{path} is empty")
    except pd.errors.ParserError as e:
        raise DataParseError(0, str(e))
    if frame.empty:
        raise DataError(f"{path} contains no samples")

    if target_col in frame.columns:
        target = target_col
    elif isinstance(target_col, str) and target_col.lstrip("-").isdigit():
        target = frame.columns[int(target_col)]
    elif isinstance(target_col, int):
        target = frame.columns[target_col]
    else:
        raise DataError(f"target column '{target_col}' not found in {path}")

    try:
        y = frame[target].to_numpy(dtype=np.float64)
        X = frame.drop(columns=[target]).to_numpy(dtype=np.float64)
    except ValueError as e:
        raise DataError(f"{path} contains non-numeric values: {e}")
    if X.shape[1] == 0:
        raise DataError(f"{path} has no feature columns")
    _check_finite(y, "target column")
    _check_finite(X, "feature matrix")
    logger.info(f"Loaded {path.name}: n={X.shape[0]}, p={X.shape[1]}")

    if normalize:
        X, _ = normalize_columns(X)
    return Problem(X=DesignMatrix.from_array(X), y=y, name=path.stem)


def load_dataset(spec: DatasetSpec) -> Problem:
    if spec.source == DatasetSource.SYNTHETIC:
        prob = generate_synthetic(spec.n, spec.p, spec.zero_frac, spec.noise_sd, spec.seed)
        if spec.normalize_columns:
            X, _ = normalize_columns(prob.X)
            prob = Problem(X=DesignMatrix.from_array(X), y=prob.y, name=prob.name)
        return prob
    if spec.source == DatasetSource.SVMLIGHT:
        return load_svmlight(spec.path, normalize=spec.normalize_columns, n_features=spec.n_features)
    return load_csv(spec.path, spec.target_column, header=spec.csv_header, normalize=spec.normalize_columns)


def dump_svmlight(path, X, y: Sequence[float]) -> None:
    """Write svmlight lines with 17 significant digits under a "# n_features: p" header."""
    design = DesignMatrix.from_array(X)
    rows = sparse.csr_matrix(design.data)
    y = np.asarray(y, dtype=np.float64)
    with Path(path).open("w", encoding="utf-8") as handle:
        handle.write(f"# n_features: {rows.shape[1]}\n")
        for i in range(rows.shape[0]):
            start, stop = rows.indptr[i], rows.indptr[i + 1]
            entries = " ".join(
                f"{j + 1}:{v:.17g}"
                for j, v in zip(rows.indices[start:stop], rows.data[start:stop])
                if v != 0.0
            )
            handle.write(f"{y[i]:.17g} {entries}".rstrip() + "\n")
    logger.info(f"Wrote {rows.shape[0]} samples to {path}")


# ===============================
# Traces and reports
# ===============================


def trace_document(result) -> TraceDocument:
    return TraceDocument(
        meta=result.meta,
        steps=result.trace.steps,
        certificates=result.certificates,
        grid=result.grid_solutions,
    )


def write_trace(result, path) -> None:
    """Write the JSON trace {meta, steps, certificates, grid} of a run.

    Floats use the shortest repr that round-trips exactly; reading one back
    gives the same double as a %.17g rendering would.
    """
    document = trace_document(result)
    Path(path).write_text(document.model_dump_json(indent=2, by_alias=True), encoding="utf-8")
    logger.info(f"Trace with {len(document.steps)} steps written to {path}")


def read_trace(path) -> TraceDocument:
    return TraceDocument.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_path_csv(result, path) -> None:
    """Plot-ready CSV: one row per grid point, or per accepted step without a grid."""
    if result.grid_solutions:
        frame = pd.DataFrame(
            {
                "lambda": [g.lambda_grid for g in result.grid_solutions],
                "nnz": [g.nnz for g in result.grid_solutions],
                "gap": [g.gap for g in result.grid_solutions],
                "step": [g.step for g in result.grid_solutions],
            }
        )
    else:
        frame = pd.DataFrame(
            {
                "lambda": [s.lambda_t for s in result.trace.steps],
                "nnz": [int(np.count_nonzero(state.beta)) for state in result.states],
                "gap": [s.gap_local for s in result.trace.steps],
                "step": [s.t for s in result.trace.steps],
            }
        )
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Path CSV with {len(frame)} rows written to {path}")


def write_bench_report(rows: List[BenchRow], path: Optional[str]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump() for row in rows])
    if path:
        frame.to_csv(path, index=False)
        logger.info(f"Bench report with {len(frame)} rows written to {path}")
    return frame
