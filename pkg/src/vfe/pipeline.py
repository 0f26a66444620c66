"""Per-session signal chain: resample, filter, envelope, repair, align, featurize.

Dropout repair runs on the unaligned timeline before lag estimation. Both
steps act sample-locally, and integer shifting commutes with them, so the
order only matters in that it keeps collapses out of the correlation.
"""

from dataclasses import dataclass
from pathlib import Path

from .alignment import AlignedSession, align_session
from .artifacts import detect_dropouts, repair_dropouts, widen_segments
from .config import IMU_CHANNELS
from .dsp import BandpassSpec, design_bandpass, design_highpass, filter_zero_phase, full_envelope
from .errors import SessionPipelineError, VFEError
from .features import build_features
from .session import load_session, resample_imu_only, resample_to_uniform

STAGES = ("filtered", "envelope", "aligned", "repaired", "features")


@dataclass(frozen=True, eq=False)
class ProcessedSession:
    session_id: str
    uniform: object
    filtered: dict
    envelopes: dict
    detection_envelopes: dict
    segments: dict
    repair_spans: dict
    repaired: dict
    aligned: AlignedSession
    features: object

    @property
    def sample_rate(self):
        return self.uniform.sample_rate


def envelope_of(x, sample_rate, config):
    return full_envelope(
        x,
        sample_rate,
        min_peak_spacing=config.envelope.min_peak_spacing_s,
        center_hz=config.filter.center_hz,
        upsample=config.envelope.upsample,
    ).values


def process_session(session, config, use_force=True):
    """Run the whole chain on one SessionRecording.

    With ``use_force=False`` force is never touched: the IMU grid is used as
    is, alignment is skipped and the feature target is None.
    """
    if use_force:
        uniform = resample_to_uniform(session, config.sample_rate_hz, config.min_sample_rate)
    else:
        uniform = resample_imu_only(session, config.sample_rate_hz, config.min_sample_rate)
    fs = uniform.sample_rate
    n = len(uniform)
    fcfg = config.filter
    bandpass = design_bandpass(BandpassSpec(fs, fcfg.center_hz, fcfg.bandwidth_hz, fcfg.prototype_order))

    acfg = config.artifact
    if acfg.enabled:
        highpass = design_highpass(acfg.detection_highpass_hz, fs, acfg.detection_highpass_order)
        guard = int(round(acfg.repair_guard_s * fs))

    filtered, envelopes, detection, segments, spans, repaired = {}, {}, {}, {}, {}, {}
    for name in IMU_CHANNELS:
        raw = uniform.imu[name]
        filtered[name] = filter_zero_phase(raw, bandpass)
        envelopes[name] = envelope_of(filtered[name], fs, config)
        if acfg.enabled:
            detection[name] = full_envelope(
                filter_zero_phase(raw, highpass), fs, center_hz=fcfg.center_hz,
                upsample=acfg.detection_upsample,
            ).values
            segments[name] = detect_dropouts(detection[name], fs, acfg.params)
            spans[name] = widen_segments(segments[name], n, before=guard, after=guard)
            repaired[name] = repair_dropouts(envelopes[name], spans[name], fs, acfg.params)
        else:
            segments[name], spans[name] = [], []
            repaired[name] = envelopes[name]

    if use_force:
        aligned = align_session(uniform, repaired, config, spans)
    else:
        aligned = AlignedSession(session.session_id, fs, uniform.t, dict(repaired), None, None, None)
    features = build_features(aligned, config.kind)
    return ProcessedSession(session.session_id, uniform, filtered, envelopes, detection,
                            segments, spans, repaired, aligned, features)


def process_directory(path, config, use_force=True):
    """Load and process one bundle, attributing any failure to the session.

    Without ``use_force`` the bundle's force.csv is not read at all.
    """
    path = Path(path)
    try:
        session = load_session(path, with_force=use_force)
    except VFEError as exc:
        raise SessionPipelineError(path.name, exc) from exc
    try:
        return process_session(session, config, use_force=use_force)
    except VFEError as exc:
        raise SessionPipelineError(session.session_id, exc) from exc
