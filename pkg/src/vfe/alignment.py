"""Cross-correlation lag estimation and per-group alignment against force.

Sign convention: a positive lag means the IMU envelope lags the force signal
(``target[i + lag]`` pairs with ``reference[i]``), and it is shifted earlier.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal, stats

from .config import ACCEL_CHANNELS, GYRO_CHANNELS, IMU_CHANNELS
from .errors import ArraysTooShort, LagAtSearchBoundary, ZeroVariance


@dataclass(frozen=True)
class LagEstimate:
    lag_samples: int
    peak_correlation: float
    max_lag_searched: int


@dataclass(frozen=True, eq=False)
class AlignedSession:
    session_id: str
    sample_rate: float
    t: np.ndarray
    envelopes: dict
    force: np.ndarray | None
    accel_lag: LagEstimate | None
    gyro_lag: LagEstimate | None

    @property
    def common_length(self):
        return self.t.size


def _lagged_sum(a, b, max_lag):
    """``out[j] = sum_i a[i] * b[i + k]`` for ``k = lags[j]``, via FFT."""
    full = signal.correlate(b, a, mode="full", method="fft")
    mid = a.size - 1
    return full[mid - max_lag: mid + max_lag + 1]


def correlation_curve(reference, target, max_lag, ref_valid=None, tgt_valid=None):
    """Overlap-normalized Pearson correlation for every lag in ``[-max_lag, max_lag]``.

    Each lag uses only the pairs ``(reference[i], target[i + k])`` where both
    samples exist and are marked valid, with means and variances taken over
    those pairs alone.
    """
    ref = np.asarray(reference, dtype=float)
    tgt = np.asarray(target, dtype=float)
    n = min(ref.size, tgt.size)
    ref, tgt = ref[:n], tgt[:n]
    if n <= 2 * max_lag:
        raise ArraysTooShort(f"arrays of length {n} are too short for max_lag {max_lag}")
    wr = np.ones(n) if ref_valid is None else np.asarray(ref_valid[:n], dtype=float)
    wt = np.ones(n) if tgt_valid is None else np.asarray(tgt_valid[:n], dtype=float)
    if np.ptp(ref[wr > 0]) == 0 or np.ptp(tgt[wt > 0]) == 0:
        raise ZeroVariance("reference and target must both have nonzero variance")
    # centering on the valid means keeps the variance differences well conditioned
    ref = (ref - ref[wr > 0].mean()) * wr
    tgt = (tgt - tgt[wt > 0].mean()) * wt

    count = _lagged_sum(wr, wt, max_lag)
    sr = _lagged_sum(ref, wt, max_lag)
    st = _lagged_sum(wr, tgt, max_lag)
    srr = _lagged_sum(ref * ref, wt, max_lag)
    stt = _lagged_sum(wr, tgt * tgt, max_lag)
    srt = _lagged_sum(ref, tgt, max_lag)

    lags = np.arange(-max_lag, max_lag + 1)
    corr = np.zeros(lags.size)
    ok = count > 2.5
    m = np.where(ok, np.round(count), 1.0)
    cov = srt - sr * st / m
    vr = srr - sr * sr / m
    vt = stt - st * st / m
    # FFT round-off can leave tiny negative variances
    denom = np.sqrt(np.clip(vr, 0, None) * np.clip(vt, 0, None))
    good = ok & (denom > 1e-12 * max(1.0, float(np.max(denom))))
    corr[good] = np.clip(cov[good] / denom[good], -1.0, 1.0)
    return lags, corr


TIE_TOLERANCE = 1e-9


def estimate_lag(reference, target, max_lag, maximize_abs=False, ref_valid=None, tgt_valid=None):
    """Lag maximizing the normalized cross-correlation.

    Scores within ``TIE_TOLERANCE`` of the best count as ties (the FFT sums
    are not exact); ties go to the smallest ``|k|``, then to negative ``k``.
    With ``maximize_abs`` the search maximizes ``|correlation|`` and the
    signed peak value is recorded.
    """
    max_lag = int(max_lag)
    lags, corr = correlation_curve(reference, target, max_lag, ref_valid, tgt_valid)
    score = np.abs(corr) if maximize_abs else corr
    best = score.max()
    candidates = lags[score >= best - TIE_TOLERANCE]
    k = int(min(candidates, key=lambda v: (abs(v), v)))
    return LagEstimate(k, float(corr[k + max_lag]), max_lag)


def rank_series(x, valid=None):
    """Average ranks of ``x`` over the valid samples; invalid samples get 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.size)
    valid = np.ones(x.size, bool) if valid is None else np.asarray(valid, bool)
    out[valid] = stats.rankdata(x[valid])
    return out


def valid_mask(n, edge, spans=()):
    """True except within ``edge`` samples of either end and inside ``spans``."""
    mask = np.ones(n, bool)
    mask[:edge] = False
    mask[max(0, n - edge):] = False
    for seg in spans:
        mask[seg.start:seg.end] = False
    return mask


def shift_and_truncate(t, force, envelopes, group_lags):
    """Shift each channel earlier by its group's lag and cut to the common span.

    ``group_lags`` maps channel name to lag. Output index ``i`` pairs
    ``force[i0 + i]`` with ``env[i0 + i + lag]``.
    """
    n = t.size
    lags = list(group_lags.values()) + [0]
    i0 = max(0, -min(lags))
    length = n - (max(lags) - min(lags))
    out = {name: np.asarray(env[i0 + group_lags[name]: i0 + group_lags[name] + length])
           for name, env in envelopes.items()}
    return t[i0: i0 + length], force[i0: i0 + length], out


def align_session(uniform, envelopes, config, repaired_spans=None):
    """Estimate one lag per sensor group against force and apply it to the group.

    ``repaired_spans`` maps channel name to the segments that were
    interpolated; with ``exclude_repaired`` those samples (and the filter
    edges) do not take part in the correlation.
    """
    cfg = config.alignment
    fs = uniform.sample_rate
    max_lag = int(round(cfg.max_lag_s * fs))
    force = uniform.force_newtons
    n = force.size
    edge = int(round(cfg.edge_exclusion_s * fs))
    sign = -1.0 if cfg.negate_envelope else 1.0
    force_valid = valid_mask(n, edge)

    lags = {}
    for group, ref_name in (("accel", cfg.accel_reference), ("gyro", cfg.gyro_reference)):
        spans = (repaired_spans or {}).get(ref_name, ()) if cfg.exclude_repaired else ()
        env_valid = valid_mask(n, edge, spans)
        ref, tgt = force, sign * np.asarray(envelopes[ref_name], dtype=float)
        if cfg.rank_transform:
            ref, tgt = rank_series(ref, force_valid), rank_series(tgt, env_valid)
        est = estimate_lag(ref, tgt, max_lag, maximize_abs=True,
                           ref_valid=force_valid, tgt_valid=env_valid)
        if abs(est.lag_samples) == max_lag:
            raise LagAtSearchBoundary(
                f"{group} lag hit the search boundary ({max_lag} samples); alignment is unreliable"
            )
        lags[group] = est

    group_lags = {name: lags["accel"].lag_samples for name in ACCEL_CHANNELS}
    group_lags.update({name: lags["gyro"].lag_samples for name in GYRO_CHANNELS})
    t, f, env = shift_and_truncate(uniform.t, force, {c: envelopes[c] for c in IMU_CHANNELS}, group_lags)
    return AlignedSession(uniform.session_id, fs, t, env, f, lags["accel"], lags["gyro"])
