"""Detection and repair of transient dropouts (collapse toward zero) in envelopes."""

from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import median_filter

from .config import ArtifactParams
from .errors import OverlappingSegments, SegmentOutOfBounds, SignalTooShort

EPS = 1e-12


@dataclass(frozen=True)
class DropoutSegment:
    start: int
    end: int  # exclusive
    pre_amplitude: float
    in_amplitude: float

    def __post_init__(self):
        if not self.end > self.start:
            raise SegmentOutOfBounds(f"segment end {self.end} must exceed start {self.start}")

    @property
    def drop_ratio(self):
        return self.pre_amplitude / max(self.in_amplitude, EPS)

    def __len__(self):
        return self.end - self.start


def _runs(mask):
    """(first, last) index pairs of consecutive True runs."""
    if not mask.any():
        return []
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[0::2], edges[1::2] - 1))


def _edges(d, threshold, max_gap):
    """Signed edges ``(sign, first, last)`` over flagged derivative samples.

    Same-sign pieces separated by at most ``max_gap`` unflagged samples are
    one edge, so a noisy fall or rise is not split in two.
    """
    flagged = np.abs(d) > threshold
    pieces = []
    for first, last in _runs(flagged):
        # adjacent flagged samples of opposite sign form separate edges
        signs = np.sign(d[first:last + 1])
        boundaries = np.flatnonzero(np.diff(signs)) + 1
        for piece in np.split(np.arange(first, last + 1), boundaries):
            sign = 1 if d[piece[0]] > 0 else -1
            if pieces and pieces[-1][0] == sign and piece[0] - pieces[-1][2] <= max_gap + 1:
                pieces[-1] = (sign, pieces[-1][1], piece[-1])
            else:
                pieces.append((sign, piece[0], piece[-1]))
    return pieces


def _candidates(d, threshold, n, max_gap=2):
    """Pair each fall edge with the next rise edge.

    ``d[i] = y[i + 1] - y[i]``. A candidate spans from the first sample of
    the fall to the last sample of the rise, so ``y[start - 1]`` and
    ``y[end]`` lie outside the transition. A trailing unmatched fall extends
    to the end of the signal.
    """
    out = []
    pending = None
    for sign, first, last in _edges(d, threshold, max_gap):
        if sign < 0:
            pending = first + 1
        elif pending is not None:
            out.append((pending, last + 1))
            pending = None
    if pending is not None and pending < n:
        out.append((pending, n))
    return out


def detect_dropouts(signal, sample_rate, params=None):
    """Find collapse-toward-zero segments in a nonnegative envelope.

    Flags samples whose first difference (after optional median filtering)
    exceeds ``deriv_sd_multiplier`` standard deviations of the whole
    derivative, pairs fall and rise edges into candidates, and keeps those
    lasting at least ``min_duration_s`` whose amplitude drops by at least
    ``drop_ratio_threshold`` relative to the preceding window.
    """
    params = params or ArtifactParams()
    x = np.asarray(signal, dtype=float)
    n = x.size
    if n <= 2 * params.min_duration_s * sample_rate:
        raise SignalTooShort(f"signal of {n} samples is too short for dropout detection")
    y = median_filter(x, size=params.median_kernel, mode="nearest") if params.median_filter_enabled else x
    d = np.diff(y)
    threshold = params.deriv_sd_multiplier * d.std()
    if threshold == 0:
        return []

    min_len = params.min_duration_s * sample_rate
    window = max(1, int(round(params.pre_window_s * sample_rate)))
    segments = []
    for start, end in _candidates(d, threshold, n):
        if end - start < min_len - 1e-9 or start == 0:
            continue
        pre = float(np.median(y[max(0, start - window):start]))
        inside = float(np.median(y[start:end]))
        seg = DropoutSegment(int(start), int(end), pre, inside)
        if seg.drop_ratio >= params.drop_ratio_threshold:
            segments.append(seg)
    return segments


def check_segments(segments, n):
    prev_end = 0
    for seg in segments:
        if seg.start < 0 or seg.end > n:
            raise SegmentOutOfBounds(f"segment [{seg.start}, {seg.end}) outside [0, {n})")
        if seg.start < prev_end:
            raise OverlappingSegments(f"segment starting at {seg.start} overlaps the previous one")
        prev_end = seg.end


def widen_segments(segments, n, before=0, after=0):
    """Grow every segment by the given sample margins, clip to the array, merge overlaps."""
    out = []
    for seg in segments:
        start, end = max(0, seg.start - before), min(n, seg.end + after)
        if out and start <= out[-1].end:
            out[-1] = replace(out[-1], end=max(out[-1].end, end))
        else:
            out.append(replace(seg, start=start, end=end))
    return out


def repair_dropouts(signal, segments, sample_rate, params=None):
    """Replace each segment (end widened by the recovery extension) with a chord.

    The chord runs from the sample just before the segment to the sample just
    after the widened end. At an array boundary the surviving side is held flat.
    Samples outside the widened segments are returned untouched.
    """
    params = params or ArtifactParams()
    x = np.array(signal, dtype=float)
    n = x.size
    check_segments(segments, n)
    ext = int(round(params.recovery_extension_s * sample_rate))
    for seg in widen_segments(segments, n, after=ext):
        left, right = seg.start - 1, seg.end
        if left < 0 and right >= n:
            raise SegmentOutOfBounds("segment covers the whole signal; nothing to interpolate from")
        idx = np.arange(seg.start, seg.end)
        if left < 0:
            x[idx] = x[right]
        elif right >= n:
            x[idx] = x[left]
        else:
            x[idx] = x[left] + (x[right] - x[left]) * (idx - left) / (right - left)
    return x
