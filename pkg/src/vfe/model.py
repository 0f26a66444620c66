"""Ridge regression force models and their JSON persistence."""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import linalg

from ._io import atomic_write_text
from .errors import (
    CorruptFile,
    DegenerateColumn,
    IoError,
    SchemaMismatch,
    SchemaVersionMismatch,
    SingularSystem,
)
from .features import FEATURE_SCHEMA_VERSION

MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StandardizationStats:
    means: tuple
    stds: tuple

    def __post_init__(self):
        if any(not s > 0 for s in self.stds):
            raise DegenerateColumn("standardization needs every column std > 0")

    @classmethod
    def fit(cls, X, column_names=None):
        means = X.mean(axis=0)
        stds = X.std(axis=0)
        zero = np.flatnonzero(stds == 0)
        if zero.size:
            name = column_names[zero[0]] if column_names else int(zero[0])
            raise DegenerateColumn(f"feature column {name!r} has zero variance")
        return cls(tuple(float(m) for m in means), tuple(float(s) for s in stds))

    def transform(self, X):
        return (X - np.asarray(self.means)) / np.asarray(self.stds)


@dataclass(frozen=True)
class ForceModel:
    kind: str
    weights: tuple
    intercept: float
    ridge_lambda: float
    standardization: StandardizationStats | None
    column_names: tuple
    pipeline_config_hash: str = ""
    schema_version: int = MODEL_SCHEMA_VERSION

    def __post_init__(self):
        if len(self.weights) != len(self.column_names):
            raise SchemaMismatch("weights and column_names differ in length")
        if self.kind == "absolute" and self.standardization is None:
            raise SchemaMismatch("absolute models carry standardization statistics")
        if self.kind == "relative" and self.standardization is not None:
            raise SchemaMismatch("relative models use unscaled features")

    def to_dict(self):
        std = None
        if self.standardization is not None:
            std = {"means": list(self.standardization.means), "stds": list(self.standardization.stds)}
        return {
            "schema_version": self.schema_version,
            "feature_schema_version": FEATURE_SCHEMA_VERSION,
            "kind": self.kind,
            "lambda": self.ridge_lambda,
            "column_names": list(self.column_names),
            "weights": list(self.weights),
            "intercept": self.intercept,
            "standardization": std,
            "pipeline_config_hash": self.pipeline_config_hash,
        }


def solve_ridge(X, y, lam):
    """Ridge weights and unpenalized intercept via centering and a Cholesky solve.

    Minimizes ``||y - X w - b||^2 + lam ||w||^2``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    if lam == 0 and np.linalg.matrix_rank(Xc) < X.shape[1]:
        raise SingularSystem("X is rank deficient and lambda is 0")
    A = Xc.T @ Xc + lam * np.eye(X.shape[1])
    try:
        factor = linalg.cho_factor(A, lower=True, check_finite=True)
    except linalg.LinAlgError as exc:
        raise SingularSystem("normal equations are not positive definite (rank-deficient X with lambda = 0?)") from exc
    w = linalg.cho_solve(factor, Xc.T @ yc)
    b = y_mean - x_mean @ w
    return w, float(b)


def ridge_fit(features, lam=1.0, config_hash=""):
    """Train a ridge model on a FeatureMatrix.

    Absolute models z-score every column first (population std) and keep the
    statistics; relative models train on raw columns.
    """
    if features.target is None:
        raise ValueError("training needs a target")
    X = features.rows
    n, p = X.shape
    if not n > p:
        raise SingularSystem(f"need more samples ({n}) than columns ({p})")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    stats = None
    if features.kind == "absolute":
        stats = StandardizationStats.fit(X, features.column_names)
        X = stats.transform(X)
    w, b = solve_ridge(X, features.target, lam)
    return ForceModel(
        kind=features.kind,
        weights=tuple(float(v) for v in w),
        intercept=b,
        ridge_lambda=float(lam),
        standardization=stats,
        column_names=tuple(features.column_names),
        pipeline_config_hash=config_hash,
    )


def predict(model, features):
    if tuple(features.column_names) != tuple(model.column_names):
        raise SchemaMismatch(
            f"feature columns {list(features.column_names)} do not match model columns {list(model.column_names)}"
        )
    X = features.rows
    if model.standardization is not None:
        X = model.standardization.transform(X)
    return X @ np.asarray(model.weights) + model.intercept


def save_model(model, path):
    # json writes floats with repr, the shortest string that round-trips bitwise
    atomic_write_text(path, json.dumps(model.to_dict(), indent=2) + "\n")


def load_model(path):
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise IoError(f"model file not found: {path}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptFile(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise CorruptFile(f"{path}: expected a JSON object")
    version = data.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: model schema_version {version!r}, expected {MODEL_SCHEMA_VERSION}")
    try:
        std = data["standardization"]
        stats = None if std is None else StandardizationStats(
            tuple(float(v) for v in std["means"]), tuple(float(v) for v in std["stds"])
        )
        return ForceModel(
            kind=data["kind"],
            weights=tuple(float(v) for v in data["weights"]),
            intercept=float(data["intercept"]),
            ridge_lambda=float(data["lambda"]),
            standardization=stats,
            column_names=tuple(data["column_names"]),
            pipeline_config_hash=str(data["pipeline_config_hash"]),
            schema_version=version,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: malformed model ({exc})") from exc
