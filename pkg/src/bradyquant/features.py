"""Amplitude/interval summary statistics and the early-fatigue score."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import stats
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import InsufficientCycles, MalformedInput
from .landmarks import MovementKind, Side
from .signal import CycleSeries, ExtremaConfig, extract_cycles

FEATURE_NAMES = ("mean_amp", "rsd_amp", "mean_int", "rsd_int", "fatigue", "arrest")
CONTINUOUS_FEATURES = FEATURE_NAMES[:5]


@dataclass(frozen=True)
class FeatureVector:
    mean_amp: float
    rsd_amp: float
    mean_int: float
    rsd_int: float
    fatigue: float
    arrest: int = 0

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    def with_arrest(self, arrest: int) -> "FeatureVector":
        return FeatureVector(*astuple(self)[:5], int(arrest))

    def to_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, astuple(self)))


@dataclass(frozen=True)
class LocalSlope:
    beta: float
    p_value: float
    window_index: int
    loc_amp: float
    amp: float

    @property
    def contribution(self) -> float:
        return -(self.beta**3) / (math.sqrt(self.window_index + 1) * (self.loc_amp / self.amp) ** 2)


def summary_stats(c) -> tuple[float, float, float, float]:
    """(mean_amp, rsd_amp, mean_int, rsd_int); rsd uses the population sd."""
    amps = np.asarray(getattr(c, "amplitudes", c), dtype=float)
    ints = np.asarray(c.intervals, dtype=float) if hasattr(c, "intervals") else None
    if len(amps) < 2 or ints is None or len(ints) < 1:
        raise InsufficientCycles("need at least 2 amplitudes and 1 interval")
    ma, mi = amps.mean(), ints.mean()
    return float(ma), float(amps.std() / ma), float(mi), float(ints.std() / mi)


def local_slope(window, window_index: int, amp_mean: float) -> LocalSlope:
    """OLS slope of amplitude on cycle index with a two-sided t-test (df = n - 2)."""
    y = np.asarray(window, dtype=float)
    if y.ndim != 1 or len(y) < 3 or not np.isfinite(y).all() or (y <= 0).any():
        raise ValueError("window must hold at least 3 finite positive amplitudes")
    x = np.arange(len(y)) - (len(y) - 1) / 2.0
    sxx = float(x @ x)
    beta = float(x @ (y - y.mean())) / sxx
    resid = y - y.mean() - beta * x
    df = len(y) - 2
    s = math.sqrt(float(resid @ resid) / df)
    scale = max(1.0, float(np.abs(y).mean()))
    if s <= 1e-12 * scale:
        p = 1.0 if abs(beta) <= 1e-15 * scale else 0.0
    else:
        t = beta / (s / math.sqrt(sxx))
        p = float(2 * stats.t.sf(abs(t), df))
    return LocalSlope(beta, p, int(window_index), float(y.mean()), float(amp_mean))


def fatigue_slopes(amplitudes, window: int = 5) -> list[LocalSlope]:
    a = np.asarray(amplitudes, dtype=float)
    if len(a) < window:
        raise InsufficientCycles(f"need {window} amplitudes, got {len(a)}")
    amp = float(a.mean())
    return [local_slope(a[i : i + window], i, amp) for i in range(len(a) - window + 1)]


def fatigue_feature(amplitudes, window: int = 5, alpha: float = 0.1, strict: bool = False) -> float:
    """Sum of -beta^3 / (sqrt(i+1) * (loc_amp/amp)^2) over significant windows.

    Windows of ``window`` consecutive amplitudes slide with stride 1; a
    window contributes only when its slope p-value is below ``alpha``.
    With fewer than ``window`` amplitudes the score is 0 unless ``strict``.
    """
    if len(amplitudes) < window:
        if strict:
            raise InsufficientCycles(f"need {window} amplitudes, got {len(amplitudes)}")
        return 0.0
    total = 0.0
    for sl in fatigue_slopes(amplitudes, window):
        if sl.p_value < alpha:
            total += sl.contribution
    return total


def compute_features(
    c: CycleSeries, arrest: int = 0, window: int = 5, alpha: float = 0.1
) -> tuple[FeatureVector, list[str]]:
    """Feature vector plus data-quality flags for one cycle series."""
    flags = []
    if len(c.amplitudes) < window:
        flags.append("few_cycles_fatigue_zero")
    fv = FeatureVector(
        *summary_stats(c), fatigue=fatigue_feature(c.amplitudes, window, alpha), arrest=int(arrest)
    )
    if len(c.amplitudes) < 10:
        flags.append("short_recording")
    return fv, flags


class FeatureExtractor(TransformerMixin, BaseEstimator):
    """Recordings -> ``(n, 5)`` array of the continuous features.

    Columns follow ``CONTINUOUS_FEATURES``.  The arrest column is not
    produced here because it comes from the arrest classifier.
    """

    def __init__(self, filters=None, prominence_frac=0.1, min_separation=3,
                 fatigue_window=5, fatigue_alpha=0.1):
        self.filters = filters
        self.prominence_frac = prominence_frac
        self.min_separation = min_separation
        self.fatigue_window = fatigue_window
        self.fatigue_alpha = fatigue_alpha

    def fit(self, X, y=None):
        return self

    def cycles(self, recordings) -> list[CycleSeries]:
        cfg = ExtremaConfig(self.prominence_frac, self.min_separation)
        return [extract_cycles(r, self.filters, cfg).cycles for r in recordings]

    def transform(self, X):
        rows = []
        for c in self.cycles(X):
            fv, _ = compute_features(c, 0, self.fatigue_window, self.fatigue_alpha)
            rows.append(fv.as_array()[:5])
        return np.array(rows).reshape(-1, 5)


# -- feature CSV -------------------------------------------------------------

CSV_COLUMNS = ("subject_id", "movement", "side") + FEATURE_NAMES + ("score", "flags")
# files written before the flags column existed are still readable
_LEGACY_COLUMNS = CSV_COLUMNS[:-1]


@dataclass
class FeatureRow:
    subject_id: str
    movement: MovementKind
    side: Side
    features: FeatureVector
    score: Optional[int] = None
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.movement = MovementKind.parse(self.movement)
        self.side = Side.parse(self.side)


def write_feature_csv(rows: Iterable[FeatureRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        f = r.features
        w.writerow(
            [r.subject_id, r.movement.value, r.side.value]
            + [repr(float(v)) for v in astuple(f)[:5]]
            + [f.arrest, "" if r.score is None else r.score, ";".join(r.flags)]
        )
    return buf.getvalue()


def read_feature_csv(text: str) -> list[FeatureRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or tuple(reader.fieldnames) not in (CSV_COLUMNS, _LEGACY_COLUMNS):
        raise MalformedInput(f"feature CSV header must be {','.join(CSV_COLUMNS)}")
    rows = []
    for n, rec in enumerate(reader, 2):
        try:
            fv = FeatureVector(*(float(rec[k]) for k in CONTINUOUS_FEATURES), int(rec["arrest"]))
            score = int(rec["score"]) if rec["score"].strip() else None
        except ValueError as exc:
            raise MalformedInput(f"feature CSV row {n}: {exc}") from None
        flags = [f for f in (rec.get("flags") or "").split(";") if f]
        rows.append(FeatureRow(rec["subject_id"], MovementKind.parse(rec["movement"]),
                               Side.parse(rec["side"]), fv, score, flags))
    return rows
