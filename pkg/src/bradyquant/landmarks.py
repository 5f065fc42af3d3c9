"""Hand-landmark recordings: in-memory model, JSONL/CSV readers and writers.

File layout (JSONL): the first line is a header ``{"meta": {...}}`` with keys
``movement``, ``side``, ``fps``, ``subject_id`` and optionally ``score``,
``arrest``, ``image_width``, ``image_height``.  Every following line is one
frame ``{"frame": i, "t": seconds, "landmarks": [[x, y, z], ... 21 rows]}``.
``t`` may be omitted, in which case it is synthesized as ``i / fps``.

When ``image_width``/``image_height`` are present the landmarks are taken to
be image-normalized (0-1) and are rescaled on load: ``x *= W``, ``y *= H``,
``z *= W``.  Without them, coordinates are pixels and are stored unchanged.

The CSV variant has a header row ``frame,t,p0_x,p0_y,p0_z,...,p20_z`` and
the metadata in a sidecar ``<name>.meta.json`` holding the same object as the
JSONL ``meta`` field.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Optional, Union

import numpy as np

from .exceptions import (
    LandmarkCountError,
    MalformedInput,
    MissingMetadata,
    TimestampError,
)

N_LANDMARKS = 21

WRIST = 0
THUMB_CMC = 1
THUMB_TIP = 4
INDEX_MCP = 5
INDEX_TIP = 8
MIDDLE_MCP = 9
MIDDLE_TIP = 12
PINKY_MCP = 17


class MovementKind(str, enum.Enum):
    FINGER_TAPPING = "finger_tapping"
    HAND_MOVEMENT = "hand_movement"
    RAPID_AM = "rapid_am"

    @classmethod
    def parse(cls, value) -> "MovementKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {
            "fingertapping": "finger_tapping",
            "ft": "finger_tapping",
            "handmovement": "hand_movement",
            "hm": "hand_movement",
            "rapidam": "rapid_am",
            "ra": "rapid_am",
        }
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise MalformedInput(f"unknown movement kind {value!r}") from None

    @property
    def short(self) -> str:
        return {"finger_tapping": "FT", "hand_movement": "HM", "rapid_am": "RA"}[self.value]


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @classmethod
    def parse(cls, value) -> "Side":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise MalformedInput(f"unknown side {value!r}") from None


@dataclass(frozen=True)
class LandmarkFrame:
    t: float
    points: np.ndarray  # (21, 3)


@dataclass(frozen=True)
class Violation:
    rule: str
    frame: Optional[int] = None

    def __str__(self):
        if self.frame is None:
            return self.rule
        return f"frame {self.frame}: {self.rule}"


@dataclass(frozen=True, eq=False)
class Recording:
    """One hand performing one task.

    ``points`` is ``(n_frames, 21, 3)`` in pixel units and ``times`` is
    ``(n_frames,)`` seconds.  Both arrays are made read-only on construction.
    """

    movement: MovementKind
    side: Side
    fps: float
    times: np.ndarray
    points: np.ndarray
    subject_id: str = ""
    score: Optional[int] = None
    arrest: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        points = np.array(self.points, dtype=float)
        times.setflags(write=False)
        points.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "movement", MovementKind.parse(self.movement))
        object.__setattr__(self, "side", Side.parse(self.side))

    @property
    def n_frames(self) -> int:
        return int(self.points.shape[0])

    @property
    def frames(self) -> list[LandmarkFrame]:
        return [LandmarkFrame(float(t), p) for t, p in zip(self.times, self.points)]

    def meta(self) -> dict:
        meta = {
            "movement": self.movement.value,
            "side": self.side.value,
            "fps": self.fps,
            "subject_id": self.subject_id,
        }
        if self.score is not None:
            meta["score"] = self.score
        if self.arrest is not None:
            meta["arrest"] = self.arrest
        meta.update(self.extra)
        return meta

    def __eq__(self, other):
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.meta() == other.meta()
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.points, other.points)
        )


def validate_recording(r: Recording) -> list[Violation]:
    """Check every Recording invariant; never raises."""
    out: list[Violation] = []
    fps = r.fps
    if not (isinstance(fps, (int, float)) and math.isfinite(fps) and fps > 0):
        out.append(Violation("positive_fps"))
        fps = None
    for name, val in (("score_range", r.score), ("arrest_range", r.arrest)):
        if val is not None and val not in (0, 1, 2, 3):
            out.append(Violation(name))
    pts = np.asarray(r.points)
    times = np.asarray(r.times)
    if pts.ndim != 3 or pts.shape[0] == 0:
        out.append(Violation("nonempty"))
        return out
    if pts.shape[1:] != (N_LANDMARKS, 3):
        out.append(Violation("landmark_count"))
        return out
    if times.shape != (pts.shape[0],):
        out.append(Violation("timestamp_count"))
        return out
    bad = ~np.isfinite(pts).all(axis=(1, 2))
    out.extend(Violation("finite_coords", int(i)) for i in np.flatnonzero(bad))
    if not np.isfinite(times).all() or times[0] < 0:
        out.append(Violation("nonnegative_time", 0))
    dt = np.diff(times)
    out.extend(Violation("monotone_time", int(i) + 1) for i in np.flatnonzero(~(dt > 0)))
    if fps is not None:
        off = np.abs(dt - 1.0 / fps) > 0.5 / fps
        out.extend(
            Violation("frame_spacing", int(i) + 1)
            for i in np.flatnonzero(off & (dt > 0))
        )
    return out


# -- parsing -----------------------------------------------------------------


def _meta_fields(meta) -> dict:
    if not isinstance(meta, dict):
        raise MissingMetadata("header has no 'meta' object")
    missing = [k for k in ("movement", "side", "fps") if meta.get(k) is None]
    if missing:
        raise MissingMetadata(f"missing metadata: {', '.join(missing)}")
    try:
        fps = float(meta["fps"])
    except (TypeError, ValueError):
        raise MalformedInput(f"fps is not a number: {meta['fps']!r}") from None
    if not (math.isfinite(fps) and fps > 0):
        raise MalformedInput(f"fps must be positive, got {fps}")
    out = {
        "movement": MovementKind.parse(meta["movement"]),
        "side": Side.parse(meta["side"]),
        "fps": fps,
        "subject_id": str(meta.get("subject_id", "")),
        "score": meta.get("score"),
        "arrest": meta.get("arrest"),
    }
    for key in ("score", "arrest"):
        v = out[key]
        if v is not None and (isinstance(v, bool) or v not in (0, 1, 2, 3)):
            raise MalformedInput(f"{key} must be an integer 0-3, got {v!r}")
    scale = None
    w, h = meta.get("image_width"), meta.get("image_height")
    if w is not None or h is not None:
        if w is None or h is None:
            raise MissingMetadata("image_width and image_height must be given together")
        scale = np.array([float(w), float(h), float(w)])
    out["scale"] = scale
    known = {"movement", "side", "fps", "subject_id", "score", "arrest",
             "image_width", "image_height"}
    out["extra"] = {k: v for k, v in meta.items() if k not in known}
    return out


def _build(meta: dict, frame_ids, times, points) -> Recording:
    if not points:
        raise MalformedInput("recording has no frames")
    fps = meta["fps"]
    pts = np.asarray(points, dtype=float)
    if not np.isfinite(pts).all():
        i = int(np.flatnonzero(~np.isfinite(pts).all(axis=(1, 2)))[0])
        raise MalformedInput(f"frame {frame_ids[i]}: non-finite coordinate")
    if meta["scale"] is not None:
        pts = pts * meta["scale"]
    t = np.array(
        [fid / fps if ti is None else ti for fid, ti in zip(frame_ids, times)],
        dtype=float,
    )
    if not np.isfinite(t).all() or t[0] < 0:
        raise TimestampError(frame_ids[0], "timestamps must be finite and >= 0")
    dt = np.diff(t)
    for i in range(len(dt)):
        if not dt[i] > 0:
            raise TimestampError(frame_ids[i + 1], "timestamps not strictly increasing")
        if abs(dt[i] - 1.0 / fps) > 0.5 / fps:
            raise TimestampError(
                frame_ids[i + 1], f"frame spacing {dt[i]:.6g}s inconsistent with fps {fps}"
            )
    return Recording(
        movement=meta["movement"],
        side=meta["side"],
        fps=fps,
        times=t,
        points=pts,
        subject_id=meta["subject_id"],
        score=meta["score"],
        arrest=meta["arrest"],
        extra=meta["extra"],
    )


def _check_points(frame_id, landmarks):
    if not isinstance(landmarks, list):
        raise MalformedInput(f"frame {frame_id}: 'landmarks' must be a list")
    if len(landmarks) != N_LANDMARKS:
        raise LandmarkCountError(frame_id, len(landmarks))
    for p in landmarks:
        if not isinstance(p, (list, tuple)) or len(p) != 3:
            raise MalformedInput(f"frame {frame_id}: each landmark must be [x, y, z]")
        for c in p:
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise MalformedInput(f"frame {frame_id}: non-numeric coordinate {c!r}")
    return landmarks


def _as_text(raw) -> str:
    if isinstance(raw, (bytes, bytearray)):
        raw = bytes(raw)
    elif hasattr(raw, "read"):
        raw = raw.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedInput(f"input is not UTF-8: {exc}") from None
    return raw


def _parse_jsonl(text: str) -> Recording:
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), 1) if ln.strip()]
    if not lines:
        raise MalformedInput("empty input")
    objs = []
    for lineno, line in lines:
        try:
            objs.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"line {lineno}: {exc.msg}") from None
    head = objs[0]
    if not isinstance(head, dict) or "meta" not in head:
        raise MissingMetadata("first line must be a {'meta': {...}} header")
    meta = _meta_fields(head["meta"])
    ids, times, pts = [], [], []
    for k, obj in enumerate(objs[1:]):
        if not isinstance(obj, dict) or "landmarks" not in obj:
            raise MalformedInput(f"line {lines[k + 1][0]}: frame object needs 'landmarks'")
        fid = obj.get("frame", k)
        if isinstance(fid, bool) or not isinstance(fid, int):
            raise MalformedInput(f"line {lines[k + 1][0]}: 'frame' must be an integer")
        t = obj.get("t")
        if t is not None and (isinstance(t, bool) or not isinstance(t, (int, float))):
            raise MalformedInput(f"frame {fid}: 't' must be a number")
        ids.append(fid)
        times.append(None if t is None else float(t))
        pts.append(_check_points(fid, obj["landmarks"]))
    return _build(meta, ids, times, pts)


def _csv_columns() -> list[str]:
    cols = ["frame", "t"]
    for i in range(N_LANDMARKS):
        cols += [f"p{i}_x", f"p{i}_y", f"p{i}_z"]
    return cols


def _parse_csv(text: str, meta) -> Recording:
    meta = _meta_fields(meta)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedInput("empty CSV") from None
    header = [h.strip() for h in header]
    point_cols = [h for h in header if h.startswith("p") and h[-2:] in ("_x", "_y", "_z")]
    if header[:2] != ["frame", "t"] or len(point_cols) % 3:
        raise MalformedInput("CSV header must start with 'frame,t' followed by pN_x,pN_y,pN_z")
    ids, times, pts = [], [], []
    for rowno, row in enumerate(reader, 2):
        if not row:
            continue
        try:
            fid = int(row[0])
            t = float(row[1]) if row[1].strip() else None
            vals = [float(v) for v in row[2:]]
        except ValueError as exc:
            raise MalformedInput(f"CSV row {rowno}: {exc}") from None
        if len(vals) % 3:
            raise MalformedInput(f"CSV row {rowno}: coordinate count not a multiple of 3")
        if len(vals) // 3 != N_LANDMARKS:
            raise LandmarkCountError(fid, len(vals) // 3)
        ids.append(fid)
        times.append(t)
        pts.append(np.reshape(vals, (N_LANDMARKS, 3)).tolist())
    return _build(meta, ids, times, pts)


def parse_recording(raw: Union[bytes, str, IO], format: str = "jsonl", meta=None) -> Recording:
    """Parse one recording from a byte/text stream.

    ``meta`` is required for ``format="csv"`` (the sidecar contents) and
    ignored for JSONL, whose header carries it.
    """
    text = _as_text(raw)
    if format == "jsonl":
        return _parse_jsonl(text)
    if format == "csv":
        if meta is None:
            raise MissingMetadata("CSV recordings need sidecar metadata")
        return _parse_csv(text, meta)
    raise ValueError(f"unknown format {format!r}")


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def load_recording(path) -> Recording:
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".csv":
        side = sidecar_path(path)
        if not side.exists():
            raise MissingMetadata(f"no sidecar {side.name} next to {path.name}")
        try:
            meta = json.loads(side.read_text())
        except json.JSONDecodeError as exc:
            raise MalformedInput(f"{side.name}: {exc.msg}") from None
        return parse_recording(data, "csv", meta=meta)
    return parse_recording(data, "jsonl")


# -- serialization -----------------------------------------------------------


def _jsonl_lines(r: Recording) -> Iterator[str]:
    yield json.dumps({"meta": r.meta()})
    for i, (t, p) in enumerate(zip(r.times, r.points)):
        yield json.dumps({"frame": i, "t": float(t), "landmarks": p.tolist()})


def serialize_recording(r: Recording, format: str = "jsonl") -> bytes:
    """Inverse of :func:`parse_recording` (pixel coordinates, explicit ``t``).

    For CSV the sidecar metadata is available as ``r.meta()``.
    """
    if format == "jsonl":
        return ("\n".join(_jsonl_lines(r)) + "\n").encode()
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_csv_columns())
        for i, (t, p) in enumerate(zip(r.times, r.points)):
            w.writerow([i, repr(float(t))] + [repr(float(v)) for v in p.ravel()])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {format!r}")


def save_recording(r: Recording, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        path.write_bytes(serialize_recording(r, "csv"))
        sidecar_path(path).write_text(json.dumps(r.meta()))
    else:
        path.write_bytes(serialize_recording(r, "jsonl"))
