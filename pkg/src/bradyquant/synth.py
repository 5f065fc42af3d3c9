"""Severity-parameterized synthetic hand motion with rule-derived scores.

An opening scalar ``s(t)`` (0 closed, 1 fully open) is built from raised
cosine cycles, an amplitude envelope, trough-level holds and Gaussian noise,
then mapped onto 21 landmarks by interpolating between two template poses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import InvalidProfile
from .landmarks import MovementKind, Recording, Side

# Slowing-factor cut points for the slowing channel: >= 1.15 -> 1, >= 1.35 -> 2, >= 1.6 -> 3
SLOWING_THRESHOLDS = (1.15, 1.35, 1.6)
# cycle index where the amplitude starts to decay
DECREMENT_START = {"end": 6, "middle": 4, "after_first": 1}
DECREMENT_LEVEL = {"none": 0, "end": 1, "middle": 2, "after_first": 3}
MIN_ENVELOPE = 0.15
FREEZE_FACTOR = 2.0


class Decrement(str, enum.Enum):
    NONE = "none"
    END = "end"
    MIDDLE = "middle"
    AFTER_FIRST = "after_first"


@dataclass(frozen=True)
class SeverityProfile:
    base_amplitude: float = 0.9
    base_interval: float = 0.4
    n_arrests: int = 0
    arrest_durations: tuple = ()
    has_freeze: bool = False
    decrement_onset: str = "none"
    slowing_factor: float = 1.0
    noise_sd: float = 0.0
    seed: int = 0
    decrement_rate: float = 0.07
    arrest_positions: Optional[tuple] = None
    tempo_jitter: float = 0.0  # relative sd of cycle-to-cycle period variation

    def validate(self) -> "SeverityProfile":
        if not (0 < self.base_amplitude <= 1):
            raise InvalidProfile("base_amplitude must lie in (0, 1]")
        if not self.base_interval > 0:
            raise InvalidProfile("base_interval must be positive")
        if self.n_arrests < 0 or len(self.arrest_durations) != self.n_arrests:
            raise InvalidProfile("need one duration per arrest")
        if any(not d > 0 for d in self.arrest_durations):
            raise InvalidProfile("arrest durations must be positive")
        longest = max(self.arrest_durations, default=0.0)
        if self.has_freeze != (longest >= FREEZE_FACTOR * self.base_interval):
            raise InvalidProfile("has_freeze must match an arrest of at least 2x base_interval")
        if self.decrement_onset not in DECREMENT_LEVEL:
            raise InvalidProfile(f"unknown decrement_onset {self.decrement_onset!r}")
        if not self.slowing_factor >= 1:
            raise InvalidProfile("slowing_factor must be >= 1")
        if not (0 <= self.noise_sd <= 0.2):
            raise InvalidProfile("noise_sd must lie in [0, 0.2]")
        if not (0 <= self.tempo_jitter <= 0.1):
            raise InvalidProfile("tempo_jitter must lie in [0, 0.1]")
        if not (0 < self.decrement_rate < 1):
            raise InvalidProfile("decrement_rate must lie in (0, 1)")
        if self.arrest_positions is not None:
            pos = self.arrest_positions
            if len(pos) != self.n_arrests or len(set(pos)) != len(pos) or min(pos, default=0) < 0:
                raise InvalidProfile("arrest_positions must be distinct cycle indices, one per arrest")
        elif self.n_arrests > 9:
            raise InvalidProfile("at most 9 arrests fit in the analyzed cycles")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arrest_durations"] = list(self.arrest_durations)
        if self.arrest_positions is not None:
            d["arrest_positions"] = list(self.arrest_positions)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SeverityProfile":
        d = dict(d)
        d["arrest_durations"] = tuple(d.get("arrest_durations", ()))
        if d.get("arrest_positions") is not None:
            d["arrest_positions"] = tuple(d["arrest_positions"])
        return cls(**d)


def arrest_category(p: SeverityProfile) -> int:
    if p.has_freeze or p.n_arrests > 5:
        return 3
    if p.n_arrests >= 3:
        return 2
    return 1 if p.n_arrests >= 1 else 0


def slowing_level(factor: float) -> int:
    return sum(factor >= t for t in SLOWING_THRESHOLDS)


def label_from_rules(p: SeverityProfile) -> tuple[int, int]:
    """(score, arrest_category): the score is the worst of the three channels."""
    arrest = arrest_category(p)
    score = max(arrest, slowing_level(p.slowing_factor), DECREMENT_LEVEL[p.decrement_onset])
    return min(score, 3), arrest


@dataclass
class SynthRecording:
    recording: Recording
    profile: SeverityProfile
    label: int
    arrest: int


# -- opening signal ----------------------------------------------------------


def envelope(p: SeverityProfile, n_cycles: int) -> np.ndarray:
    k = np.arange(n_cycles, dtype=float)
    env = np.ones(n_cycles)
    if p.decrement_onset != "none":
        start = DECREMENT_START[p.decrement_onset]
        decay = 1.0 - p.decrement_rate * (k - start + 1)
        env = np.where(k >= start, np.maximum(decay, MIN_ENVELOPE), 1.0)
    return p.base_amplitude * env


def arrest_slots(p: SeverityProfile, rng: np.random.Generator) -> list[int]:
    """Cycle indices after which a hold is inserted (distinct, within the first 9 gaps)."""
    if p.arrest_positions is not None:
        return list(p.arrest_positions)
    return sorted(rng.choice(9, size=p.n_arrests, replace=False).tolist())


def opening_signal(p: SeverityProfile, fps: float = 30.0, n_cycles: int = 12):
    """Sampled ``s(t)`` and the frame times.  Deterministic given ``p.seed``."""
    p.validate()
    rng = np.random.default_rng(p.seed)
    period = p.base_interval * p.slowing_factor
    amps = envelope(p, n_cycles)
    slots = arrest_slots(p, rng)
    # random order of holds unless the caller fixed the positions
    durations = list(p.arrest_durations)
    if p.arrest_positions is None:
        order = rng.permutation(len(durations))
        durations = [durations[i] for i in order]
    hold_after = dict(zip(slots, durations))

    periods = period * np.clip(1.0 + p.tempo_jitter * rng.standard_normal(n_cycles), 0.7, 1.3)
    starts, t = [], 0.0
    for k in range(n_cycles):
        starts.append(t)
        t += periods[k] + hold_after.get(k, 0.0)
    total = t
    n_frames = int(math.floor(total * fps)) + 1
    times = np.arange(n_frames) / fps
    starts = np.array(starts)
    k = np.clip(np.searchsorted(starts, times, "right") - 1, 0, n_cycles - 1)
    phase = (times - starts[k]) / periods[k]
    s = np.where(phase < 1.0, amps[k] * 0.5 * (1.0 - np.cos(2 * np.pi * np.minimum(phase, 1.0))), 0.0)
    if p.noise_sd > 0:
        s = s + rng.normal(0.0, p.noise_sd * p.base_amplitude, n_frames)
    return times, s


# -- landmark templates ------------------------------------------------------

_OPEN = np.array([
    [0.00, 0.00, 0.0],
    [-0.30, -0.25, 0.0], [-0.52, -0.42, 0.0], [-0.68, -0.60, 0.0], [-0.80, -0.78, 0.0],
    [-0.35, -1.00, 0.0], [-0.38, -1.35, 0.0], [-0.40, -1.62, 0.0], [-0.42, -1.85, 0.0],
    [-0.10, -1.05, 0.0], [-0.10, -1.45, 0.0], [-0.10, -1.75, 0.0], [-0.10, -2.00, 0.0],
    [0.15, -1.00, 0.0], [0.17, -1.38, 0.0], [0.19, -1.65, 0.0], [0.20, -1.88, 0.0],
    [0.38, -1.00, 0.0], [0.42, -1.28, 0.0], [0.45, -1.48, 0.0], [0.47, -1.65, 0.0],
])


def _pinch():
    closed = _OPEN.copy()
    closed[6] = [-0.50, -1.25, -0.10]
    closed[7] = [-0.68, -1.05, -0.10]
    closed[8] = [-0.82, -0.81, 0.00]
    return closed


def _fist():
    closed = _OPEN.copy()
    for mcp, x in ((5, -0.36), (9, -0.10), (13, 0.15), (17, 0.38)):
        closed[mcp + 1] = [x, -1.22, -0.30]
        closed[mcp + 2] = [x, -0.97, -0.45]
        closed[mcp + 3] = [x, -0.82, -0.30]
    closed[3] = [-0.58, -0.70, -0.15]
    closed[4] = [-0.45, -0.85, -0.30]
    return closed


TEMPLATES = {
    MovementKind.FINGER_TAPPING: (_pinch(), _OPEN),
    MovementKind.HAND_MOVEMENT: (_fist(), _OPEN),
}


def pose_sequence(s: np.ndarray, movement: MovementKind) -> np.ndarray:
    """Hand-local landmarks ``(n, 21, 3)`` for opening values ``s``.

    Finger tapping and hand movement interpolate closed -> open.  For rapid
    alternating movement the open hand turns about the vertical axis from
    palm-to-body (s = 0) to palm-to-camera (s = 1), so the sign rule flips
    every half cycle.
    """
    s = np.asarray(s, dtype=float)[:, None, None]
    if movement is MovementKind.RAPID_AM:
        phi = np.pi * (1.0 - s[:, :, 0])
        c, sn = np.cos(phi), np.sin(phi)
        x, y, z = _OPEN[:, 0], _OPEN[:, 1], _OPEN[:, 2]
        y = np.broadcast_to(y, (len(phi), len(y)))
        return np.stack([x * c + z * sn, y, -x * sn + z * c], axis=-1)
    closed, opened = TEMPLATES[movement]
    return closed + s * (opened - closed)


def to_pixels(local: np.ndarray, side: Side, scale: float, center=(320.0, 400.0)) -> np.ndarray:
    out = local * scale
    if side is Side.LEFT:
        out[..., 0] = -out[..., 0]
    out[..., 0] += center[0]
    out[..., 1] += center[1]
    return out


def generate(p: SeverityProfile, movement, fps: float = 30.0, n_cycles: int = 12,
             side="right", subject_id: Optional[str] = None) -> SynthRecording:
    movement = MovementKind.parse(movement)
    side = Side.parse(side)
    times, s = opening_signal(p, fps, n_cycles)
    rng = np.random.default_rng([p.seed, 1])
    scale = float(rng.uniform(100.0, 140.0))
    center = (float(rng.uniform(280.0, 360.0)), float(rng.uniform(380.0, 420.0)))
    pts = to_pixels(pose_sequence(s, movement), side, scale, center)
    label, arrest = label_from_rules(p)
    rec = Recording(
        movement=movement,
        side=side,
        fps=float(fps),
        times=times,
        points=pts,
        subject_id=subject_id or f"synth-{p.seed}",
        score=label,
        arrest=arrest,
        extra={"profile": p.to_dict()},
    )
    return SynthRecording(rec, p, label, arrest)


def from_recording(r: Recording) -> SynthRecording:
    """Rebuild the synthetic wrapper from a recording carrying its profile."""
    if "profile" not in r.extra:
        raise InvalidProfile(f"{r.subject_id}: no profile in metadata")
    p = SeverityProfile.from_dict(r.extra["profile"])
    label, arrest = label_from_rules(p)
    return SynthRecording(r, p, label, arrest)


# -- profile sampling --------------------------------------------------------

# slowing-factor draw per level, kept clear of the cut points
SLOWING_RANGES = ((1.0, 1.06), (1.20, 1.28), (1.42, 1.52), (1.70, 1.85))
ONSETS = ("none", "end", "middle", "after_first")


@dataclass(frozen=True)
class SamplerConfig:
    base_interval: tuple = (0.39, 0.41)
    base_amplitude: tuple = (0.85, 1.0)
    noise_sd: tuple = (0.0, 0.02)
    decrement_rate: tuple = (0.04, 0.12)
    tempo_jitter: tuple = (0.02, 0.05)


def _durations(category: int, n: int, base: float, slowing: float, rng) -> tuple[int, tuple, bool]:
    """Arrest count and durations for an arrest category.

    Holds are sized so that, without noise, an arrested interval exceeds
    1.8x an ordinary one.
    """
    period = base * slowing
    freeze_at = FREEZE_FACTOR * base
    below = 0.95 * freeze_at

    def moderate(k):
        return list(rng.uniform(0.9 * period, max(0.9 * period, 0.98 * below), size=k))

    if category == 0:
        return 0, (), False
    if category == 1:
        return n, tuple(moderate(n)), False
    if category == 2:
        if n <= 4:
            return n, tuple(moderate(n)), False
        # five holds: the median interval is arrested, so one hold must be long
        short = list(rng.uniform(0.35 * period, 0.45 * period, size=n - 1))
        longest = rng.uniform(1.7 * period, max(1.7 * period, 0.98 * below))
        return n, tuple(short + [longest]), False
    # category 3: many arrests, or a freeze among a few
    long_hold = max(rng.uniform(2.2 * period, 2.6 * period), rng.uniform(1.05, 1.3) * freeze_at)
    if n >= 6:
        short = list(rng.uniform(0.4 * period, 0.5 * period, size=n - 1))
        return n, tuple(short + [long_hold]), True
    return n, tuple(moderate(n - 1) + [long_hold]), True


def sample_profile(score: int, rng: np.random.Generator, cfg: SamplerConfig = SamplerConfig(),
                   seed: Optional[int] = None) -> SeverityProfile:
    """Random profile whose channels put the rule score at ``score``."""
    levels = [int(rng.integers(0, score + 1)) for _ in range(3)]
    levels[int(rng.integers(0, 3))] = score
    arrest_lv, slow_lv, dec_lv = levels
    base = float(rng.uniform(*cfg.base_interval))

    if arrest_lv == 2:
        n = int(rng.choice([3, 4, 5] if slow_lv == 0 else [3, 4]))
    elif arrest_lv == 3:
        n = int(rng.choice([6, 7])) if rng.random() < 0.5 else int(rng.choice([1, 2]))
    else:
        n = int(rng.choice([1, 2])) if arrest_lv == 1 else 0
    slowing = float(rng.uniform(*SLOWING_RANGES[slow_lv]))
    n, durations, freeze = _durations(arrest_lv, n, base, slowing, rng)
    return SeverityProfile(
        base_amplitude=float(rng.uniform(*cfg.base_amplitude)),
        base_interval=base,
        n_arrests=n,
        arrest_durations=tuple(float(d) for d in durations),
        has_freeze=freeze,
        decrement_onset=ONSETS[dec_lv],
        slowing_factor=slowing,
        noise_sd=float(rng.uniform(*cfg.noise_sd)),
        seed=int(rng.integers(2**31)) if seed is None else int(seed),
        decrement_rate=float(rng.uniform(*cfg.decrement_rate)),
        tempo_jitter=float(rng.uniform(*cfg.tempo_jitter)),
    )


def profile_for_score(score: int, seed: int, cfg: SamplerConfig = SamplerConfig(),
                      max_retries: int = 1000) -> SeverityProfile:
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        p = sample_profile(score, rng, cfg)
        try:
            p.validate()
        except InvalidProfile:
            continue
        if label_from_rules(p)[0] == score:
            return p
    raise InvalidProfile(f"no profile with score {score} after {max_retries} draws")


def generate_dataset(spec: dict, seed: int = 0, movements: Sequence = tuple(MovementKind),
                     fps: float = 30.0, n_cycles: int = 12,
                     cfg: SamplerConfig = SamplerConfig()) -> list[SynthRecording]:
    """``spec`` maps score -> count; each count is generated for every movement.

    Items get independent derived seeds, so the dataset does not depend on
    generation order.  Sides alternate right/left.
    """
    out = []
    for mi, movement in enumerate(movements):
        movement = MovementKind.parse(movement)
        for score in sorted(spec):
            count = int(spec[score])
            if count < 0:
                raise InvalidProfile("class counts must be >= 0")
            for i in range(count):
                item_seed = int(np.random.default_rng([seed, mi, int(score), i]).integers(2**31))
                p = profile_for_score(int(score), item_seed, cfg)
                side = "right" if i % 2 == 0 else "left"
                sid = f"s{seed}-{movement.short}-{score}-{i:04d}"
                out.append(generate(p, movement, fps, n_cycles, side, sid))
    return out


def clinical_mix_counts(total_per_movement: int) -> dict:
    """Score counts shaped like the clinical class imbalance (few 0s, many 2s)."""
    shape = np.array([120, 393, 520, 354], dtype=float)
    raw = shape / shape.sum() * total_per_movement
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: total_per_movement - counts.sum()]:
        counts[i] += 1
    return {k: int(c) for k, c in enumerate(counts)}
