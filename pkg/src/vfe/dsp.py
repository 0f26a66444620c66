"""Band-pass filtering and full-envelope extraction for the vibration band."""

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import InvalidSpec, NoExtremaFound, SignalTooShort


@dataclass(frozen=True)
class BandpassSpec:
    sample_rate: float
    center_hz: float = 136.0
    bandwidth_hz: float = 10.0
    prototype_order: int = 4

    @property
    def low_hz(self):
        return self.center_hz - self.bandwidth_hz / 2.0

    @property
    def high_hz(self):
        return self.center_hz + self.bandwidth_hz / 2.0

    def validate(self):
        if self.prototype_order < 1:
            raise InvalidSpec("prototype_order must be >= 1")
        if not 0 < self.low_hz:
            raise InvalidSpec(f"lower band edge {self.low_hz} Hz must be > 0")
        if not self.high_hz < self.sample_rate / 2.0:
            raise InvalidSpec(
                f"upper band edge {self.high_hz} Hz must be below Nyquist ({self.sample_rate / 2.0} Hz)"
            )


@dataclass(frozen=True)
class FilterCoefficients:
    """Cascade of second-order sections ``(b0, b1, b2, a1, a2)`` times ``gain``."""

    sections: tuple
    gain: float
    prototype_order: int

    @classmethod
    def from_sos(cls, sos, prototype_order):
        sos = np.asarray(sos, dtype=float)
        gain = 1.0
        sections = []
        for b0, b1, b2, a0, a1, a2 in sos:
            b0, b1, b2, a1, a2 = b0 / a0, b1 / a0, b2 / a0, a1 / a0, a2 / a0
            # b0 is nonzero for every Butterworth band-pass section
            gain *= b0
            sections.append((1.0, b1 / b0, b2 / b0, a1, a2))
        return cls(tuple(sections), float(gain), prototype_order)

    @property
    def sos(self):
        """scipy-style ``(n_sections, 6)`` array with the gain folded into section 0."""
        rows = [[b0, b1, b2, 1.0, a1, a2] for b0, b1, b2, a1, a2 in self.sections]
        out = np.array(rows, dtype=float)
        out[0, :3] *= self.gain
        return out

    @property
    def order(self):
        return 2 * len(self.sections)

    @property
    def padlen(self):
        return 3 * (2 * self.prototype_order + 1)

    def pole_radii(self):
        radii = []
        for _, _, _, a1, a2 in self.sections:
            radii.extend(np.abs(np.roots([1.0, a1, a2])))
        return np.array(radii)

    def is_stable(self):
        return bool(np.all(self.pole_radii() < 1.0))


def design_bandpass(spec):
    """Butterworth band-pass with edges at ``center -/+ bandwidth/2``.

    A prototype order of N gives 2N poles, realized as N second-order sections.
    """
    spec.validate()
    sos = sps.butter(
        spec.prototype_order,
        [spec.low_hz, spec.high_hz],
        btype="bandpass",
        fs=spec.sample_rate,
        output="sos",
    )
    return FilterCoefficients.from_sos(sos, spec.prototype_order)


def design_highpass(cutoff_hz, sample_rate, order=2):
    if not 0 < cutoff_hz < sample_rate / 2.0:
        raise InvalidSpec(f"high-pass cutoff {cutoff_hz} Hz must lie in (0, Nyquist)")
    sos = sps.butter(order, cutoff_hz, btype="highpass", fs=sample_rate, output="sos")
    return FilterCoefficients.from_sos(sos, order)


def frequency_response(coeffs, freqs_hz, sample_rate):
    """Complex response of the section cascade evaluated on the unit circle."""
    z_inv = np.exp(-2j * np.pi * np.asarray(freqs_hz, dtype=float) / sample_rate)
    h = np.full(z_inv.shape, coeffs.gain, dtype=complex)
    for b0, b1, b2, a1, a2 in coeffs.sections:
        h *= (b0 + b1 * z_inv + b2 * z_inv**2) / (1.0 + a1 * z_inv + a2 * z_inv**2)
    return h


def filter_zero_phase(x, coeffs):
    """Forward-backward filtering with odd-reflected edge padding.

    Net phase is zero and the magnitude response is squared. Output length
    equals input length.
    """
    x = np.asarray(x, dtype=float)
    padlen = coeffs.padlen
    if x.size <= padlen:
        raise SignalTooShort(f"signal of length {x.size} needs more than {padlen} samples")
    return sps.sosfiltfilt(coeffs.sos, x, padtype="odd", padlen=padlen)


@dataclass(frozen=True, eq=False)
class Envelope:
    values: np.ndarray
    min_peak_spacing: float
    upsample: int
    n_maxima: int
    n_minima: int


def _refined_extrema(y, distance):
    """Parabolic-vertex refinement of local maxima of ``y``: (positions, values)."""
    peaks, _ = sps.find_peaks(y, distance=distance)
    peaks = peaks[(peaks > 0) & (peaks < y.size - 1)]
    if peaks.size == 0:
        return peaks.astype(float), peaks.astype(float)
    y0, y1, y2 = y[peaks - 1], y[peaks], y[peaks + 1]
    denom = y0 - 2.0 * y1 + y2
    safe = np.where(denom < 0, denom, -1.0)
    delta = np.where(denom < 0, 0.5 * (y0 - y2) / safe, 0.0)
    values = y1 - 0.25 * (y0 - y2) * delta
    return peaks + delta, values


def full_envelope(x, sample_rate, min_peak_spacing=None, center_hz=136.0, upsample=8):
    """Upper envelope plus the absolute lower envelope of an oscillatory signal.

    The signal is first upsampled (polyphase, band-limited) so that extrema of
    a carrier near Nyquist/1.5 are resolved; maxima and minima are refined by
    parabolic interpolation and joined by straight lines. Beyond the first and
    last extremum the envelope is held flat.
    """
    x = np.asarray(x, dtype=float)
    if min_peak_spacing is None:
        min_peak_spacing = 0.5 / center_hz
    # checked before upsampling, whose edge ripple can fake extrema on a ramp
    if sps.find_peaks(x)[0].size == 0 or sps.find_peaks(-x)[0].size == 0:
        raise NoExtremaFound("signal has no local maxima or no local minima")
    upsample = max(int(upsample), 1)
    y =sps.resample_poly(x, upsample, 1) if upsample > 1 else x
    fs_up = sample_rate * upsample
    distance = max(1, int(np.floor(min_peak_spacing * fs_up)))

    pos_max, val_max = _refined_extrema(y, distance)
    pos_min, val_min = _refined_extrema(-y, distance)
    if pos_max.size == 0 or pos_min.size == 0:
        raise NoExtremaFound("signal has no local maxima or no local minima")

    t = np.arange(x.size) * upsample
    upper = np.interp(t, pos_max, val_max)
    lower = -np.interp(t, pos_min, val_min)
    values = upper + np.abs(lower)
    return Envelope(values, float(min_peak_spacing), upsample, pos_max.size, pos_min.size)
