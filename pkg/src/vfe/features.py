"""Absolute and relative feature matrices built from aligned envelopes."""

from dataclasses import dataclass

import numpy as np

from .config import ACCEL_CHANNELS, GYRO_CHANNELS, IMU_CHANNELS, NEWTONS_TO_POUNDS_MICRO
from .errors import DegenerateRange, LengthMismatch, SchemaViolation

FEATURE_SCHEMA_VERSION = 1
ABSOLUTE_COLUMNS = IMU_CHANNELS + ("accel_mag", "gyro_mag")
RELATIVE_COLUMNS = ("accel_x_pct", "gyro_y_pct")
UNITS = {"absolute": "lb", "relative": "percent"}


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Per-sample feature rows; ``target`` is None when force is unavailable."""

    rows: np.ndarray
    column_names: tuple
    target: np.ndarray | None
    session_ids: np.ndarray
    kind: str
    t: np.ndarray | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != len(self.column_names):
            raise SchemaViolation(
                f"rows of shape {rows.shape} do not match {len(self.column_names)} columns"
            )
        if not np.isfinite(rows).all():
            raise SchemaViolation("feature rows contain non-finite entries")
        if self.target is not None and np.shape(self.target) != (rows.shape[0],):
            raise LengthMismatch("target length must equal the number of rows")
        if np.shape(self.session_ids) != (rows.shape[0],):
            raise LengthMismatch("session_ids length must equal the number of rows")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "column_names", tuple(self.column_names))

    @property
    def n_samples(self):
        return self.rows.shape[0]

    @property
    def units(self):
        return UNITS[self.kind]

    def to_csv(self, fmt="%.9g"):
        header = list(self.column_names) + (["target"] if self.target is not None else [])
        data = self.rows if self.target is None else np.column_stack([self.rows, self.target])
        lines = [",".join(header)]
        lines.extend(",".join(fmt % v for v in row) for row in data)
        return "\n".join(lines) + "\n"


def concat_features(matrices):
    """Stack several matrices sharing one schema; provenance is kept per row."""
    first = matrices[0]
    for m in matrices[1:]:
        if m.column_names != first.column_names or m.kind != first.kind:
            raise SchemaViolation("cannot concatenate feature matrices with different schemas")
    has_target = all(m.target is not None for m in matrices)
    return FeatureMatrix(
        rows=np.vstack([m.rows for m in matrices]),
        column_names=first.column_names,
        target=np.concatenate([m.target for m in matrices]) if has_target else None,
        session_ids=np.concatenate([m.session_ids for m in matrices]),
        kind=first.kind,
    )


@dataclass(frozen=True)
class ScalingAnchors:
    p5: float
    p95: float

    def __post_init__(self):
        if not self.p95 > self.p5:
            raise DegenerateRange(f"95th percentile {self.p95} does not exceed 5th percentile {self.p5}")

    def scale(self, x):
        return 100.0 * (np.asarray(x, dtype=float) - self.p5) / (self.p95 - self.p5)

    def unscale(self, pct):
        return np.asarray(pct, dtype=float) * (self.p95 - self.p5) / 100.0 + self.p5


def magnitude(x, y, z):
    x, y, z = (np.asarray(a, dtype=float) for a in (x, y, z))
    if not x.shape == y.shape == z.shape:
        raise LengthMismatch(f"axis lengths differ: {x.shape}, {y.shape}, {z.shape}")
    return np.sqrt(x * x + y * y + z * z)


def percentile_scale(signal):
    """Map ``signal`` so its 5th percentile is 0% and its 95th is 100%; tails are kept."""
    p5, p95 = np.percentile(np.asarray(signal, dtype=float), [5.0, 95.0])
    anchors = ScalingAnchors(float(p5), float(p95))
    return anchors.scale(signal), anchors


def newtons_to_pounds(force_n):
    # scaling by the integer 224809 and then dividing by 1e6 keeps whole-newton
    # readings exact (100 N gives the float nearest 22.4809, where a plain
    # multiply by 0.224809 lands one ulp above it)
    return np.asarray(force_n, dtype=float) * NEWTONS_TO_POUNDS_MICRO / 1e6


def _session_ids(aligned):
    return np.full(aligned.common_length, aligned.session_id, dtype=object)


def build_absolute_features(aligned):
    env = aligned.envelopes
    cols = [env[c] for c in IMU_CHANNELS]
    cols.append(magnitude(*(env[c] for c in ACCEL_CHANNELS)))
    cols.append(magnitude(*(env[c] for c in GYRO_CHANNELS)))
    target = None if aligned.force is None else newtons_to_pounds(aligned.force)
    return FeatureMatrix(np.column_stack(cols), ABSOLUTE_COLUMNS, target,
                         _session_ids(aligned), "absolute", aligned.t)


def build_relative_features(aligned):
    env = aligned.envelopes
    ax, _ = percentile_scale(env["accel_x"])
    gy, _ = percentile_scale(env["gyro_y"])
    target = None if aligned.force is None else percentile_scale(aligned.force)[0]
    return FeatureMatrix(np.column_stack([ax, gy]), RELATIVE_COLUMNS, target,
                         _session_ids(aligned), "relative", aligned.t)


def build_features(aligned, kind):
    if kind == "absolute":
        return build_absolute_features(aligned)
    if kind == "relative":
        return build_relative_features(aligned)
    raise ValueError(f"unknown feature kind {kind!r}")
