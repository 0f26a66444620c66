"""Pipeline configuration: every tunable of the signal chain in one place."""

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InvalidSpec, IoError

IMU_CHANNELS = ("accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z")
ACCEL_CHANNELS = IMU_CHANNELS[:3]
GYRO_CHANNELS = IMU_CHANNELS[3:]

NEWTONS_TO_POUNDS = 0.224809
NEWTONS_TO_POUNDS_MICRO = 224809

KINDS = ("absolute", "relative")


@dataclass(frozen=True)
class FilterConfig:
    center_hz: float = 136.0
    bandwidth_hz: float = 10.0
    prototype_order: int = 4


@dataclass(frozen=True)
class EnvelopeConfig:
    # None -> half a carrier period
    min_peak_spacing_s: float | None = None
    # band-limited upsampling factor applied before extrema picking
    upsample: int = 8


@dataclass(frozen=True)
class AlignmentConfig:
    accel_reference: str = "accel_x"
    gyro_reference: str = "gyro_y"
    max_lag_s: float = 2.0
    negate_envelope: bool = True
    # correlate ranks rather than values, so any monotone damping law peaks
    # at the true lag
    rank_transform: bool = True
    # envelope samples this close to either end carry filter transients
    edge_exclusion_s: float = 1.0
    # leave repaired spans out of the correlation
    exclude_repaired: bool = True


@dataclass(frozen=True)
class ArtifactParams:
    median_filter_enabled: bool = True
    median_kernel: int = 5
    deriv_sd_multiplier: float = 1.0
    min_duration_s: float = 0.12
    drop_ratio_threshold: float = 500.0
    recovery_extension_s: float = 0.02
    pre_window_s: float = 0.1

    def __post_init__(self):
        if self.median_kernel < 3 or self.median_kernel % 2 == 0:
            raise InvalidSpec(f"median_kernel must be odd and >= 3, got {self.median_kernel}")
        for name in ("deriv_sd_multiplier", "min_duration_s", "drop_ratio_threshold",
                     "recovery_extension_s", "pre_window_s"):
            if not getattr(self, name) > 0:
                raise InvalidSpec(f"{name} must be > 0")


@dataclass(frozen=True)
class ArtifactConfig:
    enabled: bool = True
    params: ArtifactParams = field(default_factory=ArtifactParams)
    # detection runs on the envelope of the high-passed raw signal, where a
    # collapse keeps its full depth
    detection_highpass_hz: float = 100.0
    detection_highpass_order: int = 2
    # plain sample extrema; interpolation filters smear the collapse edges
    detection_upsample: int = 1
    # margin added on both sides of a detected segment when repairing the
    # band-passed envelope; covers the band-pass transient
    repair_guard_s: float = 0.25


@dataclass(frozen=True)
class ModelConfig:
    ridge_lambda: float = 1.0


@dataclass(frozen=True)
class EvaluationConfig:
    outlier_sd_multiplier: float = 2.0
    # 0 = population SD, 1 = sample SD
    sd_ddof: int = 0


@dataclass(frozen=True)
class PipelineConfig:
    kind: str = "absolute"
    # None -> native IMU rate
    sample_rate_hz: float | None = None
    filter: FilterConfig = field(default_factory=FilterConfig)
    envelope: EnvelopeConfig = field(default_factory=EnvelopeConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    artifact: ArtifactConfig = field(default_factory=ArtifactConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.alignment.accel_reference not in ACCEL_CHANNELS:
            raise InvalidSpec(f"accel reference must be one of {ACCEL_CHANNELS}")
        if self.alignment.gyro_reference not in GYRO_CHANNELS:
            raise InvalidSpec(f"gyro reference must be one of {GYRO_CHANNELS}")
        if self.model.ridge_lambda < 0:
            raise InvalidSpec("ridge_lambda must be >= 0")

    @property
    def min_sample_rate(self):
        return 2.0 * (self.filter.center_hz + self.filter.bandwidth_hz / 2.0)

    def to_dict(self):
        return dataclasses.asdict(self)

    def canonical_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self):
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_dict(cls, data):
        return _build(cls, data or {})

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise IoError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)


def _build(cls, data):
    if not isinstance(data, dict):
        raise InvalidSpec(f"expected an object for {cls.__name__}, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise InvalidSpec(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        sub = _nested_type(known[name])
        kwargs[name] = _build(sub, value) if sub is not None else value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise InvalidSpec(str(exc)) from exc


def _nested_type(f):
    if f.default_factory is not dataclasses.MISSING:
        candidate = f.default_factory
        if dataclasses.is_dataclass(candidate):
            return candidate
    return None


def load_config(path=None, **overrides):
    """Read a config file (or defaults) and apply non-None top-level overrides."""
    config = PipelineConfig.load(path) if path else PipelineConfig()
    changes = {k: v for k, v in overrides.items() if v is not None}
    if "ridge_lambda" in changes:
        config = config.replace(model=ModelConfig(ridge_lambda=changes.pop("ridge_lambda")))
    return config.replace(**changes) if changes else config
