"""Synthetic profiling sessions with known ground truth.

Each IMU channel is a carrier whose amplitude is damped by the applied force,
``gain * A(F) * sin(2 pi f t + phase)`` with ``A(F) = 1 / (1 + k F)`` and F in
pounds, plus white noise. Clock offsets delay the force content seen by each
sensor group; dropouts multiply the IMU stream by a collapse factor followed
by a short linear recovery ramp.
"""

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .config import ACCEL_CHANNELS, IMU_CHANNELS, NEWTONS_TO_POUNDS
from .errors import InvalidSpec, IoError
from .session import ChannelSeries, SessionRecording, save_session

SQUARE_RAMP_S = 0.2
RECOVERY_RAMP_S = 0.02
DEVICE_MODEL = "simulated-phone"

# accel in m/s^2, gyro in rad/s
DEFAULT_GAINS = (1.2, 0.8, 0.5, 0.06, 0.09, 0.04)
CHANNEL_PHASES = (0.0, 0.7, 1.4, 2.1, 2.8, 3.5)

TRAJECTORY_PARAMS = {
    "ramp": ("start_lb", "end_lb"),
    "sine": ("mean_lb", "amplitude_lb", "period_s"),
    "square": ("low_lb", "high_lb", "period_s"),
    "freeform": ("mean_lb",),
}


@dataclass(frozen=True)
class Trajectory:
    kind: str = "ramp"
    params: dict = field(default_factory=lambda: {"start_lb": 0.0, "end_lb": 20.0})

    def validate(self):
        if self.kind not in TRAJECTORY_PARAMS:
            raise InvalidSpec(f"unknown trajectory kind {self.kind!r}")
        missing = set(TRAJECTORY_PARAMS[self.kind]) - set(self.params)
        if missing:
            raise InvalidSpec(f"{self.kind} trajectory missing parameters {sorted(missing)}")
        if "period_s" in self.params and not self.params["period_s"] > 2 * SQUARE_RAMP_S:
            raise InvalidSpec("trajectory period too short")


@dataclass(frozen=True)
class Dropout:
    start_s: float
    duration_s: float
    collapse_fraction: float


@dataclass(frozen=True)
class SimulationSpec:
    seed: int = 0
    duration_s: float = 40.0
    imu_rate_hz: float = 400.0
    force_rate_hz: float = 100.0
    carrier_hz: float = 136.0
    trajectory: Trajectory = field(default_factory=Trajectory)
    force_range_lb: tuple = (0.0, 25.0)
    damping_k: float = 0.08
    channel_gains: tuple = DEFAULT_GAINS
    noise_sd_fraction: float = 0.02
    accel_clock_offset_s: float = 0.0
    gyro_clock_offset_s: float = 0.0
    dropouts: tuple = ()
    # smooth zero-mean force wobble (SD in lb) imitating imperfect tracking
    # of the on-screen guide; 0 gives the ideal trajectory
    force_wander_lb: float = 0.0
    session_id: str = "sim"

    def validate(self):
        self.trajectory.validate()
        lo, hi = self.force_range_lb
        if lo < 0 or hi <= lo:
            raise InvalidSpec(f"force_range_lb must satisfy 0 <= min < max, got {self.force_range_lb}")
        if self.duration_s <= 0 or self.imu_rate_hz <= 0 or self.force_rate_hz <= 0:
            raise InvalidSpec("duration and sample rates must be positive")
        if not self.carrier_hz < self.imu_rate_hz / 2:
            raise InvalidSpec(f"carrier {self.carrier_hz} Hz must be below IMU Nyquist")
        if len(self.channel_gains) != 6 or any(g <= 0 for g in self.channel_gains):
            raise InvalidSpec("channel_gains needs 6 positive values")
        if self.noise_sd_fraction < 0 or self.damping_k < 0 or self.force_wander_lb < 0:
            raise InvalidSpec("noise, damping and wander must be nonnegative")
        for d in self.dropouts:
            if not 0 < d.collapse_fraction < 1:
                raise InvalidSpec(f"collapse_fraction must lie in (0, 1), got {d.collapse_fraction}")
            if d.duration_s <= 0:
                raise InvalidSpec("dropout duration must be positive")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if "trajectory" in data:
            data["trajectory"] = Trajectory(**data["trajectory"])
        if "dropouts" in data:
            data["dropouts"] = tuple(Dropout(**d) for d in data["dropouts"])
        for key in ("force_range_lb", "channel_gains"):
            if key in data:
                data[key] = tuple(data[key])
        try:
            return cls(**data)
        except TypeError as exc:
            raise InvalidSpec(str(exc)) from exc


def _wander_components(spec, n=6):
    rng = np.random.default_rng([spec.seed, 0])
    freqs = rng.uniform(0.3, 3.0, n)
    phases = rng.uniform(0, 2 * np.pi, n)
    # n sinusoids of amplitude a have SD a * sqrt(n / 2)
    amp = spec.force_wander_lb / np.sqrt(n / 2)
    return freqs, phases, amp


def force_lb_at(spec, t):
    """Ground-truth force in pounds at arbitrary times (extends beyond the session)."""
    t = np.asarray(t, dtype=float)
    p = spec.trajectory.params
    kind = spec.trajectory.kind
    if kind == "ramp":
        frac = np.clip(t / spec.duration_s, 0.0, 1.0)
        f = p["start_lb"] + (p["end_lb"] - p["start_lb"]) * frac
    elif kind == "sine":
        f = p["mean_lb"] + p["amplitude_lb"] * np.sin(2 * np.pi * t / p["period_s"])
    elif kind == "square":
        period, lo, hi = p["period_s"], p["low_lb"], p["high_lb"]
        phase = np.mod(t, period)
        half = period / 2
        up = np.clip((phase - half) / SQUARE_RAMP_S, 0.0, 1.0)
        down = np.clip((phase - (period - SQUARE_RAMP_S)) / SQUARE_RAMP_S, 0.0, 1.0)
        f = lo + (hi - lo) * (up - down)
    else:
        f = np.full_like(t, p["mean_lb"])
    if spec.force_wander_lb > 0:
        freqs, phases, amp = _wander_components(spec)
        f = f + amp * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None]).sum(axis=0)
    lo, hi = spec.force_range_lb
    return np.clip(f, lo, hi)


def generate_force_trajectory(spec):
    """Force-sensor series in newtons, sampled at ``force_rate_hz``."""
    spec.validate()
    n = int(round(spec.duration_s * spec.force_rate_hz))
    t = np.arange(n) / spec.force_rate_hz
    return ChannelSeries(t, force_lb_at(spec, t) / NEWTONS_TO_POUNDS)


def damping(force_lb, k):
    return 1.0 / (1.0 + k * np.asarray(force_lb, dtype=float))


def dropout_mask(spec, t):
    mask = np.ones_like(t)
    for d in spec.dropouts:
        end = d.start_s + d.duration_s
        inside = (t >= d.start_s) & (t < end)
        mask[inside] = np.minimum(mask[inside], d.collapse_fraction)
        rec = (t >= end) & (t < end + RECOVERY_RAMP_S)
        ramp = d.collapse_fraction + (1 - d.collapse_fraction) * (t[rec] - end) / RECOVERY_RAMP_S
        mask[rec] = np.minimum(mask[rec], ramp)
    return mask


def synthesize_session(spec):
    spec.validate()
    n = int(round(spec.duration_s * spec.imu_rate_hz))
    t = np.arange(n) / spec.imu_rate_hz
    rng = np.random.default_rng([spec.seed, 1])
    mask = dropout_mask(spec, t)
    imu = {}
    for name, gain, phase in zip(IMU_CHANNELS, spec.channel_gains, CHANNEL_PHASES):
        offset = spec.accel_clock_offset_s if name in ACCEL_CHANNELS else spec.gyro_clock_offset_s
        amp = gain * damping(force_lb_at(spec, t - offset), spec.damping_k)
        x = amp * np.sin(2 * np.pi * spec.carrier_hz * t + phase)
        x = x + rng.normal(0.0, spec.noise_sd_fraction * gain, n)
        imu[name] = ChannelSeries(t, x * mask)
    return SessionRecording(
        session_id=spec.session_id,
        device_model=DEVICE_MODEL,
        imu=imu,
        force=generate_force_trajectory(spec),
        trajectory_kind=spec.trajectory.kind,
        nominal_duration=float(spec.duration_s),
    )


CORPUS_WANDER_LB = 1.5
DEFAULT_MIX = ("ramp", "sine", "square")


def corpus_spec(index, base_seed, kind, base=None, wander_lb=CORPUS_WANDER_LB):
    """Jittered spec for session ``index`` of a corpus; deterministic in its arguments."""
    base = base or SimulationSpec()
    rng = np.random.default_rng([base_seed, index])
    u = rng.uniform
    if kind == "ramp":
        params = {"start_lb": u(0.0, 2.0), "end_lb": u(14.0, 18.0)}
    elif kind == "sine":
        params = {"mean_lb": u(8.0, 10.0), "amplitude_lb": u(5.5, 7.0), "period_s": u(8.0, 12.0)}
    elif kind == "square":
        params = {"low_lb": u(1.0, 3.0), "high_lb": u(13.0, 16.0), "period_s": u(6.0, 10.0)}
    elif kind == "freeform":
        params = {"mean_lb": u(8.0, 14.0)}
    else:
        raise InvalidSpec(f"unknown trajectory kind {kind!r}")

    def offset():
        # whole samples, so injected lags are exact integers on the IMU grid
        return round(u(-0.3, 0.3) * base.imu_rate_hz) / base.imu_rate_hz

    accel_off, gyro_off = offset(), offset()
    dropout = Dropout(start_s=u(0.15, 0.85) * base.duration_s, duration_s=u(0.13, 0.2),
                      collapse_fraction=5e-4)
    return dataclasses.replace(
        base,
        seed=int(rng.integers(0, 2**31 - 1)),
        session_id=f"session_{index:03d}",
        trajectory=Trajectory(kind, {k: float(v) for k, v in params.items()}),
        accel_clock_offset_s=accel_off,
        gyro_clock_offset_s=gyro_off,
        dropouts=(dropout,),
        force_wander_lb=float(wander_lb),
    )


def make_corpus(out_dir, n_sessions=15, base_seed=7, trajectory_mix=DEFAULT_MIX, base=None,
                wander_lb=CORPUS_WANDER_LB):
    """Write ``n_sessions`` session bundles plus ``manifest.json``; returns the specs."""
    if n_sessions < 1:
        raise InvalidSpec("n_sessions must be >= 1")
    out_dir = Path(out_dir)
    specs = [corpus_spec(i, base_seed, trajectory_mix[i % len(trajectory_mix)], base, wander_lb)
             for i in range(n_sessions)]
    try:
        for spec in specs:
            save_session(synthesize_session(spec), out_dir / spec.session_id)
        manifest = {
            "schema_version": 1,
            "base_seed": base_seed,
            "n_sessions": n_sessions,
            "trajectory_mix": list(trajectory_mix),
            "wander_lb": wander_lb,
            "sessions": [{"session_id": s.session_id, "directory": s.session_id, "spec": s.to_dict()}
                         for s in specs],
        }
        atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write corpus to {out_dir}: {exc}") from exc
    return specs


def load_manifest(corpus_dir):
    data = json.loads((Path(corpus_dir) / "manifest.json").read_text())
    return {entry["session_id"]: SimulationSpec.from_dict(entry["spec"]) for entry in data["sessions"]}
