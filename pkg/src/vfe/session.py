"""Session recordings: data model, on-disk bundle format, resampling.

A session bundle is a directory holding ``meta.json``, ``imu.csv`` and
``force.csv``. Timestamps are float seconds relative to session start.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .config import IMU_CHANNELS
from .errors import (
    MissingFile,
    NonFiniteValue,
    NonMonotonicTimestamps,
    NoTemporalOverlap,
    RateTooLow,
    SchemaViolation,
)

SCHEMA_VERSION = 1
TRAJECTORY_KINDS = ("ramp", "sine", "square", "freeform")
IMU_HEADER = ("t",) + IMU_CHANNELS
FORCE_HEADER = ("t", "force_n")
CSV_FORMAT = "%.9g"
DEFAULT_MIN_RATE = 292.0

# grid points closer than this fraction of a sample to an input timestamp
# reuse the stored value directly
_SNAP_FRACTION = 1e-6


@dataclass(frozen=True, eq=False)
class ChannelSeries:
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or v.shape != t.shape:
            raise SchemaViolation("timestamps and values must be 1-D and equal length")
        if t.size < 2:
            raise SchemaViolation("a channel needs at least 2 samples")
        bad = np.flatnonzero(np.diff(t) <= 0)
        if bad.size:
            raise NonMonotonicTimestamps("timestamps not strictly increasing", row=int(bad[0]) + 2)
        for arr in (t, v):
            nonfinite = np.flatnonzero(~np.isfinite(arr))
            if nonfinite.size:
                raise NonFiniteValue("non-finite value", row=int(nonfinite[0]) + 1)
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.timestamps.size

    @property
    def span(self):
        return float(self.timestamps[-1] - self.timestamps[0])


@dataclass(frozen=True, eq=False)
class SessionRecording:
    session_id: str
    device_model: str
    imu: dict
    force: ChannelSeries | None
    trajectory_kind: str
    nominal_duration: float

    def __post_init__(self):
        if self.trajectory_kind not in TRAJECTORY_KINDS:
            raise SchemaViolation(f"trajectory_kind must be one of {TRAJECTORY_KINDS}")
        if set(self.imu) != set(IMU_CHANNELS):
            raise SchemaViolation(f"IMU channels must be exactly {IMU_CHANNELS}")
        ref = self.imu[IMU_CHANNELS[0]].timestamps
        for name in IMU_CHANNELS[1:]:
            if not np.array_equal(self.imu[name].timestamps, ref):
                raise SchemaViolation(f"IMU channel {name} does not share the common timestamps")
        span = float(ref[-1] - ref[0])
        if not abs(self.nominal_duration - span) <= 0.25 * span:
            raise SchemaViolation(
                f"nominal_duration {self.nominal_duration} s is not within 25% of the IMU span {span:.3f} s"
            )
        object.__setattr__(self, "imu", {name: self.imu[name] for name in IMU_CHANNELS})

    @property
    def imu_timestamps(self):
        return self.imu[IMU_CHANNELS[0]].timestamps

    @property
    def imu_rate(self):
        """Median sample rate of the IMU stream, rounded to 1 µHz.

        The rounding removes the float noise of ``1 / median(diff)`` so that a
        400 Hz stream reports exactly 400.0.
        """
        return round(float(1.0 / np.median(np.diff(self.imu_timestamps))), 6)


@dataclass(frozen=True, eq=False)
class UniformSession:
    """All series on one uniform grid; ``force_newtons`` is None for IMU-only use."""

    session_id: str
    sample_rate: float
    t: np.ndarray
    imu: dict
    force_newtons: np.ndarray | None

    def __post_init__(self):
        n = self.t.size
        arrays = list(self.imu.values())
        if self.force_newtons is not None:
            arrays.append(self.force_newtons)
        if any(a.size != n for a in arrays):
            raise SchemaViolation("uniform session arrays must share one length")

    def __len__(self):
        return self.t.size


# -- loading / saving ------------------------------------------------------

def _read_csv(path, header):
    if not path.is_file():
        raise MissingFile("file not found", path=path)
    with open(path, newline="") as fh:
        first = fh.readline().strip()
        got = tuple(c.strip() for c in first.split(","))
        if got != header:
            raise SchemaViolation(f"expected header {','.join(header)}, got {first!r}", path=path)
        rows = []
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise SchemaViolation(f"expected {len(header)} columns, got {len(cells)}", path=path, row=lineno)
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise SchemaViolation(f"non-numeric cell in {line.strip()!r}", path=path, row=lineno) from None
    if len(rows) < 2:
        raise SchemaViolation("need at least 2 data rows", path=path)
    data = np.array(rows, dtype=float)
    nonfinite = np.flatnonzero(~np.isfinite(data).all(axis=1))
    if nonfinite.size:
        raise NonFiniteValue("non-finite value", path=path, row=int(nonfinite[0]) + 1)
    bad = np.flatnonzero(np.diff(data[:, 0]) <= 0)
    if bad.size:
        raise NonMonotonicTimestamps("timestamps not strictly increasing", path=path, row=int(bad[0]) + 2)
    return data


def load_session(path, with_force=True):
    """Load and validate a session bundle directory.

    With ``with_force=False`` force.csv is never opened and ``force`` is None.
    """
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise MissingFile("file not found", path=meta_path)
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"invalid JSON ({exc})", path=meta_path) from exc
    required = ("session_id", "device_model", "trajectory_kind", "nominal_duration_s", "schema_version")
    missing = [k for k in required if k not in meta]
    if missing:
        raise SchemaViolation(f"missing keys {missing}", path=meta_path)
    if meta["schema_version"] != SCHEMA_VERSION:
        raise SchemaViolation(f"unsupported schema_version {meta['schema_version']}", path=meta_path)

    imu = _read_csv(path / "imu.csv", IMU_HEADER)
    force = _read_csv(path / "force.csv", FORCE_HEADER) if with_force else None
    t = imu[:, 0]
    channels = {name: ChannelSeries(t, imu[:, i + 1]) for i, name in enumerate(IMU_CHANNELS)}
    try:
        return SessionRecording(
            session_id=str(meta["session_id"]),
            device_model=str(meta["device_model"]),
            imu=channels,
            force=None if force is None else ChannelSeries(force[:, 0], force[:, 1]),
            trajectory_kind=meta["trajectory_kind"],
            nominal_duration=float(meta["nominal_duration_s"]),
        )
    except SchemaViolation as exc:
        raise SchemaViolation(str(exc), path=meta_path) from exc


def save_session(session, path):
    """Write ``session`` as a bundle directory (created if needed)."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "session_id": session.session_id,
        "device_model": session.device_model,
        "trajectory_kind": session.trajectory_kind,
        "nominal_duration_s": session.nominal_duration,
        "schema_version": SCHEMA_VERSION,
    }
    atomic_write_text(path / "meta.json", json.dumps(meta, indent=2) + "\n")
    imu = np.column_stack([session.imu_timestamps] + [session.imu[c].values for c in IMU_CHANNELS])
    atomic_write_text(path / "imu.csv", format_csv(IMU_HEADER, imu))
    if session.force is not None:
        force = np.column_stack([session.force.timestamps, session.force.values])
        atomic_write_text(path / "force.csv", format_csv(FORCE_HEADER, force))


def format_csv(header, data, fmt=CSV_FORMAT):
    lines = [",".join(header)]
    lines.extend(",".join(fmt % v for v in row) for row in np.atleast_2d(data))
    return "\n".join(lines) + "\n"


def discover_sessions(corpus_dir):
    """Session directories under ``corpus_dir`` (those holding meta.json), sorted by name."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise MissingFile("corpus directory not found", path=corpus_dir)
    return sorted(p.parent for p in corpus_dir.glob("*/meta.json"))


# -- resampling ------------------------------------------------------------

def uniform_grid(start, stop, rate):
    n = math.floor((stop - start) * rate + 1e-9) + 1
    return start + np.arange(n) / rate


def interp_series(timestamps, values, grid, rate):
    """Linear interpolation that returns stored samples bitwise where the grid hits them."""
    out = np.interp(grid, timestamps, values)
    idx = np.clip(np.searchsorted(timestamps, grid), 0, timestamps.size - 1)
    for cand in (idx, np.maximum(idx - 1, 0)):
        hit = np.abs(timestamps[cand] - grid) <= _SNAP_FRACTION / rate
        out[hit] = values[cand[hit]]
    return out


def resample_to_uniform(session, target_rate=None, min_rate=DEFAULT_MIN_RATE):
    """Interpolate IMU and force onto one uniform grid over their common span.

    ``target_rate`` defaults to the IMU's native rate. The grid starts at the
    later of the two start times and has ``floor(overlap * rate) + 1`` points.
    """
    rate = session.imu_rate if target_rate is None else float(target_rate)
    if rate < min_rate:
        raise RateTooLow(f"target rate {rate} Hz is below the minimum {min_rate} Hz")
    if session.force is None:
        raise SchemaViolation(f"session {session.session_id!r} was loaded without force")
    ti = session.imu_timestamps
    tf = session.force.timestamps
    start = max(ti[0], tf[0])
    stop = min(ti[-1], tf[-1])
    if stop <= start:
        raise NoTemporalOverlap(
            f"IMU span [{ti[0]}, {ti[-1]}] and force span [{tf[0]}, {tf[-1]}] do not overlap"
        )
    grid = uniform_grid(start, stop, rate)
    imu = {name: interp_series(ti, session.imu[name].values, grid, rate) for name in IMU_CHANNELS}
    force = interp_series(tf, session.force.values, grid, rate)
    return UniformSession(session.session_id, rate, grid, imu, force)


def resample_imu_only(session, target_rate=None, min_rate=DEFAULT_MIN_RATE):
    """Uniform IMU grid over the IMU span alone (no force is read)."""
    rate = session.imu_rate if target_rate is None else float(target_rate)
    if rate < min_rate:
        raise RateTooLow(f"target rate {rate} Hz is below the minimum {min_rate} Hz")
    ti = session.imu_timestamps
    grid = uniform_grid(ti[0], ti[-1], rate)
    imu = {name: interp_series(ti, session.imu[name].values, grid, rate) for name in IMU_CHANNELS}
    return UniformSession(session.session_id, rate, grid, imu, None)
