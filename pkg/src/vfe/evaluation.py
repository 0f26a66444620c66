"""Hold-one-out cross-validation over sessions, metrics and outlier flagging."""

import json
import statistics
from fractions import Fraction
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import InvalidSpec, SessionPipelineError, VFEError, ZeroVarianceTarget
from .features import UNITS, concat_features
from .model import predict, ridge_fit
from .pipeline import process_session

REPORT_SCHEMA_VERSION = 1
CSV_HEADER = "fold,session_id,r2,mae,rmse,n"


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ValueError(f"metric inputs must be equal-length 1-D arrays, got {y_true.shape} and {y_pred.shape}")
    return y_true, y_pred


def metric_r2(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0:
        raise ZeroVarianceTarget("R² is undefined for a constant target")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def metric_mae(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.mean(np.abs(y_true - y_pred)))


def metric_rmse(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


@dataclass(frozen=True, eq=False)
class FoldResult:
    fold: int
    held_out_session: str
    r2: float
    mae: float
    rmse: float
    n_test_samples: int
    # prediction trace for the held-out session; not part of the JSON summary
    t: np.ndarray = field(default=None, repr=False)
    y_true: np.ndarray = field(default=None, repr=False)
    y_pred: np.ndarray = field(default=None, repr=False)
    train_means: tuple | None = field(default=None, repr=False)

    def summary(self):
        return {
            "fold": self.fold,
            "held_out_session": self.held_out_session,
            "r2": self.r2,
            "mae": self.mae,
            "rmse": self.rmse,
            "n_test_samples": self.n_test_samples,
        }


def _spread(values, ddof):
    if len(values) <= ddof:
        return 0.0
    return statistics.pstdev(values) if ddof == 0 else statistics.stdev(values)


def flag_outliers(folds, sd_multiplier=2.0, ddof=0):
    """Sessions whose fold MAE lies strictly above ``mean + sd_multiplier * SD``.

    The comparison runs in exact rational arithmetic: a fold is flagged when
    ``mae - mean > 0`` and ``(mae - mean)**2 > sd_multiplier**2 * variance``,
    so a fold sitting exactly on the threshold is never flagged by round-off.
    """
    if sd_multiplier < 0:
        raise InvalidSpec("outlier SD multiplier must be >= 0")
    maes = [Fraction(f.mae) for f in folds]
    if len(maes) <= max(1, ddof):
        return []
    mean = sum(maes) / len(maes)
    var = sum((m - mean) ** 2 for m in maes) / (len(maes) - ddof)
    k2 = Fraction(sd_multiplier) ** 2
    return [f.held_out_session for f, m in zip(folds, maes)
            if m > mean and (m - mean) ** 2 > k2 * var]


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    kind: str
    folds: tuple
    outlier_sessions: tuple
    ridge_lambda: float
    config: dict
    config_hash: str
    sd_ddof: int = 0

    @property
    def units(self):
        return UNITS[self.kind]

    @property
    def total_samples(self):
        return sum(f.n_test_samples for f in self.folds)

    def _values(self, metric):
        return [getattr(f, metric) for f in self.folds]

    def mean(self, metric):
        return statistics.fmean(self._values(metric))

    def sd(self, metric):
        return _spread(self._values(metric), self.sd_ddof)

    def best(self, metric):
        vals = self._values(metric)
        return max(vals) if metric == "r2" else min(vals)

    def worst(self, metric):
        vals = self._values(metric)
        return min(vals) if metric == "r2" else max(vals)

    @property
    def mean_mae(self):
        return self.mean("mae")

    def aggregates(self):
        out = {}
        for metric in ("mae", "rmse", "r2"):
            for stat in ("mean", "sd", "best", "worst"):
                out[f"{stat}_{metric}"] = getattr(self, stat)(metric)
        return out

    def to_dict(self):
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "kind": self.kind,
            "units": self.units,
            "lambda": self.ridge_lambda,
            "n_folds": len(self.folds),
            "total_samples": self.total_samples,
            **self.aggregates(),
            "outlier_sessions": list(self.outlier_sessions),
            "folds": [f.summary() for f in self.folds],
            "config_hash": self.config_hash,
            "config": self.config,
        }

    def to_csv(self):
        lines = [CSV_HEADER]
        for f in self.folds:
            lines.append(f"{f.fold},{f.held_out_session},{f.r2!r},{f.mae!r},{f.rmse!r},{f.n_test_samples}")
        return "\n".join(lines) + "\n"

    def summary_line(self):
        return (f"{self.kind}: {len(self.folds)} folds, mean MAE {self.mean_mae:.1f} {self.units}, "
                f"mean RMSE {self.mean('rmse'):.1f} {self.units}, worst R² {self.worst('r2'):.3f}")


def process_corpus(sessions, config):
    """Run the pipeline once per session, attributing failures to the session."""
    processed = []
    for session in sessions:
        try:
            processed.append(process_session(session, config))
        except VFEError as exc:
            raise SessionPipelineError(session.session_id, exc) from exc
    return processed


def hold_one_out_features(matrices, ridge_lambda, config_hash=""):
    """Folds over prepared per-session feature matrices (one matrix per session).

    Every fold fits its own model, so standardization statistics come from the
    training sessions alone.
    """
    folds = []
    for i, test in enumerate(matrices):
        train = concat_features([m for j, m in enumerate(matrices) if j != i])
        model = ridge_fit(train, ridge_lambda, config_hash)
        y_pred = predict(model, test)
        y_true = test.target
        folds.append(FoldResult(
            fold=i,
            held_out_session=str(test.session_ids[0]),
            r2=metric_r2(y_true, y_pred),
            mae=metric_mae(y_true, y_pred),
            rmse=metric_rmse(y_true, y_pred),
            n_test_samples=test.n_samples,
            t=test.t,
            y_true=y_true,
            y_pred=y_pred,
            train_means=None if model.standardization is None else model.standardization.means,
        ))
    return folds


def hold_one_out(sessions, kind, config):
    """Hold each session out once, train on the rest, and collect fold metrics."""
    if len(sessions) < 3:
        raise InvalidSpec(f"hold-one-out needs at least 3 sessions, got {len(sessions)}")
    if kind != config.kind:
        config = config.replace(kind=kind)
    processed = process_corpus(sessions, config)
    folds = hold_one_out_features([p.features for p in processed], config.model.ridge_lambda,
                                  config.config_hash)
    ev = config.evaluation
    return EvaluationReport(
        kind=kind,
        folds=tuple(folds),
        outlier_sessions=tuple(flag_outliers(folds, ev.outlier_sd_multiplier, ev.sd_ddof)),
        ridge_lambda=config.model.ridge_lambda,
        config=config.to_dict(),
        config_hash=config.config_hash,
        sd_ddof=ev.sd_ddof,
    )


def trace_csv(fold, fmt="%.9g"):
    lines = ["t,y_true,y_pred"]
    lines.extend(f"{fmt % t},{fmt % a},{fmt % b}" for t, a, b in zip(fold.t, fold.y_true, fold.y_pred))
    return "\n".join(lines) + "\n"


def write_report(report, out_path, traces=False):
    """Write ``<out>.json`` and ``<out>.csv``; with ``traces`` also one CSV per fold.

    ``out_path`` may carry a ``.json`` suffix or none. Returns the written paths.
    """
    out_path = Path(out_path)
    stem = out_path.with_suffix("") if out_path.suffix == ".json" else out_path
    json_path, csv_path = stem.with_suffix(".json"), stem.with_suffix(".csv")
    stem.parent.mkdir(parents=True, exist_ok=True)
    atomic_write_text(json_path, json.dumps(report.to_dict(), indent=2) + "\n")
    atomic_write_text(csv_path, report.to_csv())
    written = [json_path, csv_path]
    if traces:
        trace_dir = stem.parent / f"{stem.name}_traces"
        trace_dir.mkdir(parents=True, exist_ok=True)
        for f in report.folds:
            path = trace_dir / f"fold_{f.fold:02d}_{f.held_out_session}.csv"
            atomic_write_text(path, trace_csv(f))
            written.append(path)
    return written

