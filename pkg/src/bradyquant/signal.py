"""Per-movement distance signal, Savitzky-Golay smoothing, extrema and cycles."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .exceptions import DegenerateFrame, InvalidFilterConfig, NoCyclesDetected
from .landmarks import (
    INDEX_MCP,
    INDEX_TIP,
    MIDDLE_MCP,
    MIDDLE_TIP,
    PINKY_MCP,
    THUMB_CMC,
    THUMB_TIP,
    WRIST,
    MovementKind,
    Recording,
    Side,
)

MAX_CYCLES = 10

# (window, polyorder) per movement
FILTER_DEFAULTS = {
    MovementKind.FINGER_TAPPING: (7, 3),
    MovementKind.HAND_MOVEMENT: (7, 3),
    MovementKind.RAPID_AM: (5, 4),
}


@dataclass(frozen=True, eq=False)
class DistanceSeries:
    values: np.ndarray
    fps: float
    movement: MovementKind
    side: Side


@dataclass(frozen=True, eq=False)
class SmoothedSeries:
    values: np.ndarray
    window: int
    polyorder: int
    fps: float


@dataclass(frozen=True)
class ExtremaConfig:
    prominence_frac: float = 0.1
    min_separation: int = 3


@dataclass(frozen=True, eq=False)
class ExtremaSet:
    peaks: np.ndarray
    troughs: np.ndarray


@dataclass(frozen=True, eq=False)
class CycleSeries:
    amplitudes: np.ndarray
    intervals: np.ndarray
    peaks: np.ndarray

    @property
    def n_cycles(self) -> int:
        return len(self.amplitudes)


# -- distance signal ---------------------------------------------------------


def palm_length(points) -> float:
    """3-D distance between thumb_cmc (1) and middle_mcp (9) of one frame."""
    pts = np.asarray(getattr(points, "points", points), dtype=float)
    d = float(np.linalg.norm(pts[THUMB_CMC] - pts[MIDDLE_MCP]))
    if d < 1e-9:
        raise DegenerateFrame("thumb_cmc and middle_mcp coincide")
    return d


def palm_orientation(points: np.ndarray, side) -> np.ndarray:
    """+1 where the palm faces the camera, -1 where it faces the body.

    Uses the z component of (p5 - p0) x (p17 - p0), sign-flipped for the
    left hand.  ``points`` is ``(n_frames, 21, 3)``.
    """
    a = points[:, INDEX_MCP, :2] - points[:, WRIST, :2]
    b = points[:, PINKY_MCP, :2] - points[:, WRIST, :2]
    nz = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    if Side.parse(side) is Side.LEFT:
        nz = -nz
    return np.where(nz < 0, -1.0, 1.0)


def distance_signal(r: Recording, orientation: Optional[Callable] = None) -> DistanceSeries:
    """Palm-normalized per-frame distance for the recording's movement."""
    pts = r.points
    palm = np.linalg.norm(pts[:, THUMB_CMC] - pts[:, MIDDLE_MCP], axis=1)
    bad = np.flatnonzero(palm < 1e-9)
    if bad.size:
        raise DegenerateFrame("thumb_cmc and middle_mcp coincide", frame=int(bad[0]))
    if r.movement is MovementKind.FINGER_TAPPING:
        d = np.linalg.norm(pts[:, THUMB_TIP] - pts[:, INDEX_TIP], axis=1)
    elif r.movement is MovementKind.HAND_MOVEMENT:
        d = np.linalg.norm(pts[:, THUMB_CMC] - pts[:, MIDDLE_TIP], axis=1)
    else:
        d = np.linalg.norm(pts[:, INDEX_MCP, :2] - pts[:, PINKY_MCP, :2], axis=1)
        d = d * (orientation or palm_orientation)(pts, r.side)
    return DistanceSeries(values=d / palm, fps=r.fps, movement=r.movement, side=r.side)


# -- Savitzky-Golay ----------------------------------------------------------


def _check_filter(window, polyorder, n=None):
    if int(window) != window or window < 1 or window % 2 == 0:
        raise InvalidFilterConfig(f"window must be a positive odd integer, got {window}")
    if int(polyorder) != polyorder or polyorder < 0 or polyorder >= window:
        raise InvalidFilterConfig(f"need 0 <= polyorder < window, got {polyorder}, {window}")
    if n is not None and window > n:
        raise InvalidFilterConfig(f"window {window} longer than signal ({n} samples)")


def savgol_weights(window: int, polyorder: int, pos: Optional[int] = None) -> np.ndarray:
    """Weights that evaluate the least-squares polynomial fit at sample ``pos``.

    ``pos`` indexes the window (0..window-1); default is the centre.
    """
    _check_filter(window, polyorder)
    half = window // 2
    if pos is None:
        pos = half
    offsets = np.arange(window, dtype=float) - half
    vander = offsets[:, None] ** np.arange(polyorder + 1)
    at = float(pos - half) ** np.arange(polyorder + 1)
    return at @ np.linalg.pinv(vander)


def savgol_smooth(s, window: int, polyorder: int) -> SmoothedSeries:
    """Savitzky-Golay smoothing.

    Interior samples use the centred window.  The first and last ``window//2``
    samples are evaluated from the polynomial fitted to the first (last)
    ``window`` samples, so no padding values are invented.
    """
    y = np.asarray(getattr(s, "values", s), dtype=float)
    fps = getattr(s, "fps", float("nan"))
    _check_filter(window, polyorder, len(y))
    half = window // 2
    out = np.empty_like(y)
    out[half : len(y) - half] = np.correlate(y, savgol_weights(window, polyorder), "valid")
    for i in range(half):
        out[i] = savgol_weights(window, polyorder, i) @ y[:window]
        out[len(y) - half + i] = savgol_weights(window, polyorder, half + 1 + i) @ y[-window:]
    return SmoothedSeries(values=out, window=window, polyorder=polyorder, fps=fps)


# -- extrema -----------------------------------------------------------------


def _raw_extrema(v: np.ndarray):
    d = np.sign(np.diff(v))
    nz = np.flatnonzero(d)
    if nz.size == 0:
        return []
    # plateaus inherit the direction of the last non-flat step
    fill = np.maximum.accumulate(np.where(d != 0, np.arange(len(d)), -1))
    fill[fill < 0] = nz[0]
    d = d[fill]
    change = np.flatnonzero(d[1:] != d[:-1])
    return [(int(i) + 1, d[i] > 0) for i in change]


def detect_extrema(s, cfg: ExtremaConfig = ExtremaConfig()) -> ExtremaSet:
    """Local maxima/minima with false-extremum filtering.

    Small swings (peak-trough gap below ``prominence_frac`` of the signal
    range) are removed smallest-first; then same-type extrema closer than
    ``min_separation`` frames are merged, keeping the more extreme one.
    """
    v = np.asarray(getattr(s, "values", s), dtype=float)
    if len(v) < 3:
        raise NoCyclesDetected("signal shorter than 3 samples")
    ext = _raw_extrema(v)
    thresh = cfg.prominence_frac * (v.max() - v.min())

    while len(ext) > 1:
        gaps = np.abs(np.diff([v[i] for i, _ in ext]))
        j = int(np.argmin(gaps))
        if gaps[j] >= thresh:
            break
        if j == 0:
            del ext[0]
        elif j + 1 == len(ext) - 1:
            del ext[-1]
        else:
            del ext[j : j + 2]

    merged = True
    while merged:
        merged = False
        for j in range(len(ext) - 2):
            (a, is_peak), (b, _) = ext[j], ext[j + 2]
            if b - a < cfg.min_separation:
                keep_first = v[a] >= v[b] if is_peak else v[a] <= v[b]
                if keep_first:
                    del ext[j + 1 : j + 3]
                else:
                    del ext[j : j + 2]
                merged = True
                break

    peaks = np.array([i for i, p in ext if p], dtype=int)
    troughs = np.array([i for i, p in ext if not p], dtype=int)
    if len(peaks) < 2:
        raise NoCyclesDetected(f"only {len(peaks)} peak(s) survived filtering")
    return ExtremaSet(peaks=peaks, troughs=troughs)


def cycles(s: SmoothedSeries, e: ExtremaSet, max_cycles: int = MAX_CYCLES) -> CycleSeries:
    """Amplitude (peak minus preceding trough) and peak-to-peak interval.

    A first peak with no trough before it is measured against the clip start,
    or against the following trough when the clip starts at the peak.
    """
    v = np.asarray(s.values, dtype=float)
    peaks, amps = [], []
    for p in e.peaks:
        before = e.troughs[e.troughs < p]
        base = v[before[-1]] if before.size else v[0]
        if not before.size and v[p] - base <= 0:
            # clip opens on the peak itself; measure against the next trough
            after = e.troughs[e.troughs > p]
            base = v[after[0]] if after.size else base
        amp = v[p] - base
        if amp <= 0:
            continue
        peaks.append(int(p))
        amps.append(amp)
    if len(peaks) < 2:
        raise NoCyclesDetected("fewer than 2 peaks with positive amplitude")
    peaks = np.array(peaks[:max_cycles])
    return CycleSeries(
        amplitudes=np.array(amps[:max_cycles]),
        intervals=np.diff(peaks) / s.fps,
        peaks=peaks,
    )


@dataclass(frozen=True, eq=False)
class SignalTrace:
    """Everything the extraction produced for one recording."""

    raw: DistanceSeries
    smoothed: SmoothedSeries
    extrema: ExtremaSet
    cycles: CycleSeries


def extract_cycles(
    r: Recording,
    filters: Optional[dict] = None,
    extrema: ExtremaConfig = ExtremaConfig(),
    max_cycles: int = MAX_CYCLES,
) -> SignalTrace:
    raw = distance_signal(r)
    window, order = (filters or FILTER_DEFAULTS)[r.movement]
    sm = savgol_smooth(raw, window, order)
    ext = detect_extrema(sm, extrema)
    return SignalTrace(raw, sm, ext, cycles(sm, ext, max_cycles))


def debug_csv(trace: SignalTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["frame", "raw", "smoothed", "is_peak", "is_trough"])
    peaks = set(trace.extrema.peaks.tolist())
    troughs = set(trace.extrema.troughs.tolist())
    for i, (a, b) in enumerate(zip(trace.raw.values, trace.smoothed.values)):
        w.writerow([i, repr(float(a)), repr(float(b)), int(i in peaks), int(i in troughs)])
    return buf.getvalue()
