"""OpenPose keypoint ingestion: JSON documents, JSON-lines streams, CSV replay.

Also hosts the keypoint-domain preprocessing applied before classification:
confidence-weighted temporal smoothing and region-of-interest gating.

CSV replay layout (one row per frame and person)::

    frame_index,person_id,kp00_x,kp00_y,kp00_c,...,kp17_x,kp17_y,kp17_c
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

from .skeleton import (
    DEFAULT_EPSILON, NECK, NUM_KEYPOINTS, ConfigError, FormatError, SkeletonFrame,
    frame_from_matrix, stack_frames,
)

KEYPOINT_VALUES = NUM_KEYPOINTS * 3
CSV_HEADER = ["frame_index", "person_id"] + [
    f"kp{i:02d}_{c}" for i in range(NUM_KEYPOINTS) for c in ("x", "y", "c")
]


class ParseError(FormatError):
    """Malformed JSON. ``offset`` is the byte offset of the failure."""

    def __init__(self, message: str, offset: int):
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class PersonRecord:
    pose_keypoints_2d: tuple[float, ...]

    def matrix(self) -> np.ndarray:
        return np.asarray(self.pose_keypoints_2d, dtype=np.float64).reshape(NUM_KEYPOINTS, 3)


@dataclass(frozen=True)
class OpenPoseDocument:
    version: float = 1.3
    people: tuple[PersonRecord, ...] = field(default_factory=tuple)


def parse_openpose_json(text: bytes | str) -> OpenPoseDocument:
    """Parse one OpenPose COCO-18 JSON document.

    Unknown fields are ignored. Raises :class:`ParseError` on malformed JSON and
    :class:`FormatError` when a person's ``pose_keypoints_2d`` does not hold
    exactly 54 numbers.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"input is not UTF-8 (byte {e.start})", e.start) from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[:e.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON at byte {offset}: {e.msg}", offset) from None
    return document_from_obj(raw)


def document_from_obj(raw) -> OpenPoseDocument:
    if not isinstance(raw, dict):
        raise FormatError("OpenPose document must be a JSON object")
    people_raw = raw.get("people", [])
    if not isinstance(people_raw, list):
        raise FormatError("'people' must be a list")
    people = []
    for i, p in enumerate(people_raw):
        kps = p.get("pose_keypoints_2d") if isinstance(p, dict) else None
        if not isinstance(kps, list):
            raise FormatError(f"person {i}: missing pose_keypoints_2d list")
        if len(kps) != KEYPOINT_VALUES:
            raise FormatError(
                f"person {i}: pose_keypoints_2d has {len(kps)} values, expected {KEYPOINT_VALUES}")
        try:
            values = tuple(float(v) for v in kps)
        except (TypeError, ValueError):
            raise FormatError(f"person {i}: pose_keypoints_2d holds a non-numeric value") from None
        people.append(PersonRecord(values))
    version = raw.get("version", 1.3)
    try:
        version = float(version)
    except (TypeError, ValueError):
        raise FormatError(f"version must be numeric, got {version!r}") from None
    return OpenPoseDocument(version, tuple(people))


def serialize_openpose_json(doc: OpenPoseDocument) -> str:
    """Single-line JSON in OpenPose's output layout. Floats round-trip exactly."""
    obj = {
        "version": doc.version,
        "people": [
            {"person_id": [-1], "pose_keypoints_2d": list(p.pose_keypoints_2d),
             "face_keypoints_2d": [], "hand_left_keypoints_2d": [],
             "hand_right_keypoints_2d": []}
            for p in doc.people
        ],
    }
    return json.dumps(obj, separators=(",", ":"))


def document_from_frames(frames: Sequence[SkeletonFrame], version: float = 1.3) -> OpenPoseDocument:
    """One document whose people are ``frames`` in order (positional identity)."""
    return OpenPoseDocument(version, tuple(
        PersonRecord(tuple(float(v) for v in f.matrix.reshape(-1))) for f in frames))


def load_sequence(source, fps: float) -> dict[int, list[SkeletonFrame]]:
    """Split an ordered series of documents into per-person frame sequences.

    ``source`` is an iterable of :class:`OpenPoseDocument` or a text stream of
    JSON lines. Frame indices follow document position; person ids follow the
    position within each document's ``people`` list.
    """
    if fps <= 0:
        raise ConfigError(f"fps must be positive, got {fps}")
    if hasattr(source, "read"):
        source = iter_jsonl(source)
    out: dict[int, list[SkeletonFrame]] = {}
    for frame_index, doc in enumerate(source):
        for pid, person in enumerate(doc.people):
            frame = frame_from_matrix(person.matrix(), frame_index, fps, person_id=pid)
            out.setdefault(pid, []).append(frame)
    return out


def iter_jsonl(stream: IO[str]) -> Iterator[OpenPoseDocument]:
    for lineno, line in enumerate(stream, 1):
        if not line.strip():
            continue
        try:
            yield parse_openpose_json(line)
        except ParseError as e:
            raise ParseError(f"line {lineno}: {e}", e.offset) from None
        except FormatError as e:
            raise FormatError(f"line {lineno}: {e}") from None


def read_json_dir(path: str | os.PathLike) -> list[OpenPoseDocument]:
    """Per-frame OpenPose JSON files in lexicographic filename order."""
    files = sorted(p for p in Path(path).iterdir() if p.suffix == ".json")
    docs = []
    for p in files:
        try:
            docs.append(parse_openpose_json(p.read_bytes()))
        except FormatError as e:
            raise FormatError(f"{p.name}: {e}") from None
    return docs


def write_json_dir(docs: Iterable[OpenPoseDocument], path: str | os.PathLike,
                   stem: str = "frame") -> list[Path]:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for i, doc in enumerate(docs):
        p = out / f"{stem}_{i:012d}_keypoints.json"
        p.write_text(serialize_openpose_json(doc) + "\n", encoding="utf-8")
        written.append(p)
    return written


def write_jsonl(docs: Iterable[OpenPoseDocument], stream: IO[str]) -> None:
    for doc in docs:
        stream.write(serialize_openpose_json(doc))
        stream.write("\n")


def documents_from_sequences(sequences: dict[int, Sequence[SkeletonFrame]]) -> list[OpenPoseDocument]:
    """Inverse of :func:`load_sequence` for gap-free, position-aligned inputs.

    Persons missing at a frame are dropped from that document only when they
    are the trailing entries; an interior gap cannot be expressed positionally.
    """
    if not sequences:
        return []
    by_frame: dict[int, dict[int, SkeletonFrame]] = {}
    for pid, frames in sequences.items():
        for f in frames:
            by_frame.setdefault(f.frame_index, {})[pid] = f
    n = max(by_frame) + 1
    docs = []
    for i in range(n):
        row = by_frame.get(i, {})
        people = []
        for pid in range(max(row) + 1 if row else 0):
            if pid not in row:
                raise FormatError(f"frame {i}: person {pid} missing but person {max(row)} present")
            people.append(row[pid])
        docs.append(document_from_frames(people))
    return docs


def write_csv(sequences: dict[int, Sequence[SkeletonFrame]], stream: IO[str]) -> None:
    rows = sorted((f.frame_index, pid, f) for pid, frames in sequences.items() for f in frames)
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for frame_index, pid, f in rows:
        w.writerow([frame_index, pid] + [repr(float(v)) for v in f.matrix.reshape(-1)])


def read_csv(stream: IO[str], fps: float) -> dict[int, list[SkeletonFrame]]:
    if fps <= 0:
        raise ConfigError(f"fps must be positive, got {fps}")
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        return {}
    if [h.strip() for h in header] != CSV_HEADER:
        raise FormatError("CSV header does not match frame_index,person_id,kp00_x,...,kp17_c")
    out: dict[int, list[SkeletonFrame]] = {}
    for lineno, row in enumerate(reader, 2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise FormatError(f"CSV line {lineno}: {len(row)} fields, expected {len(CSV_HEADER)}")
        try:
            frame_index, pid = int(row[0]), int(row[1])
            values = np.array(row[2:], dtype=np.float64).reshape(NUM_KEYPOINTS, 3)
        except ValueError:
            raise FormatError(f"CSV line {lineno}: non-numeric field") from None
        try:
            frame = frame_from_matrix(values, frame_index, fps, person_id=pid)
        except ValueError as e:
            raise FormatError(f"CSV line {lineno}: {e}") from None
        seq = out.setdefault(pid, [])
        if seq and frame_index <= seq[-1].frame_index:
            raise FormatError(f"CSV line {lineno}: frame_index not increasing for person {pid}")
        seq.append(frame)
    return out


def detect_format(path: str | os.PathLike | None, head: str = "") -> str:
    """Pick ``json`` (directory or single file), ``jsonl`` or ``csv``."""
    if path is not None and str(path) != "-":
        p = Path(path)
        if p.is_dir():
            return "json"
        suffix = p.suffix.lower()
        if suffix in (".jsonl", ".ndjson"):
            return "jsonl"
        if suffix == ".csv":
            return "csv"
        if suffix == ".json":
            return "json"
    return "jsonl" if head.lstrip().startswith("{") else "csv"


def read_input(path: str | os.PathLike | None, fps: float, fmt: str = "auto",
               stream: IO[str] | None = None) -> dict[int, list[SkeletonFrame]]:
    """Read a whole input into per-person sequences.

    ``path`` of ``None`` or ``"-"`` reads ``stream`` (standard input).
    """
    if fps <= 0:
        raise ConfigError(f"fps must be positive, got {fps}")
    from_stream = path is None or str(path) == "-"
    if from_stream:
        text = stream.read()
        if fmt == "auto":
            fmt = detect_format(None, text)
        src: IO[str] = io.StringIO(text)
    else:
        if fmt == "auto":
            fmt = detect_format(path)
        if fmt == "json":
            p = Path(path)
            docs = read_json_dir(p) if p.is_dir() else [parse_openpose_json(p.read_bytes())]
            return load_sequence(docs, fps)
        src = open(path, encoding="utf-8", newline="")
    try:
        if fmt == "csv":
            return read_csv(src, fps)
        if fmt in ("jsonl", "json"):
            return load_sequence(iter_jsonl(src), fps)
        raise ConfigError(f"unknown input format {fmt!r}")
    finally:
        src.close()


# ---------------------------------------------------------------------------
# keypoint-domain preprocessing

def _smooth_dense(kp: np.ndarray, radius: int, epsilon: float) -> np.ndarray:
    """Confidence-weighted moving average over a dense (T, 18, 3) block.

    Missing frames are all-zero rows. Averages are accumulated as offsets from
    the centre sample, so a constant track comes back bit-identical.
    """
    T = kp.shape[0]
    conf = kp[..., 2]
    w = np.where(conf >= epsilon, conf, 0.0)
    pad = ((radius, radius), (0, 0))
    wp = np.pad(w, pad)
    xp = np.pad(kp[..., 0], pad)
    yp = np.pad(kp[..., 1], pad)
    x0, y0 = kp[..., 0], kp[..., 1]
    num_x = np.zeros_like(x0)
    num_y = np.zeros_like(y0)
    den = np.zeros_like(x0)
    for k in range(2 * radius + 1):
        wk = wp[k:k + T]
        num_x += wk * (xp[k:k + T] - x0)
        num_y += wk * (yp[k:k + T] - y0)
        den += wk
    out = kp.copy()
    ok = (conf >= epsilon) & (den > 0)
    out[..., 0] = np.where(ok, x0 + num_x / np.where(ok, den, 1.0), x0)
    out[..., 1] = np.where(ok, y0 + num_y / np.where(ok, den, 1.0), y0)
    return out


def _densify(frames: Sequence[SkeletonFrame]) -> tuple[np.ndarray, np.ndarray]:
    idx = np.array([f.frame_index for f in frames], dtype=np.int64)
    dense = np.zeros((int(idx[-1] - idx[0]) + 1, NUM_KEYPOINTS, 3))
    dense[idx - idx[0]] = stack_frames(frames)
    return dense, idx - idx[0]


def smooth(sequence: Sequence[SkeletonFrame], radius: int = 1,
           epsilon: float = DEFAULT_EPSILON) -> list[SkeletonFrame]:
    """De-noise keypoint tracks of one person.

    Each valid keypoint becomes the confidence-weighted mean of its valid
    samples within ``[t - radius, t + radius]`` (by frame index). Confidences
    and invalid keypoints are left untouched.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if radius == 0 or not sequence:
        return list(sequence)
    dense, pos = _densify(sequence)
    out = _smooth_dense(dense, radius, epsilon)[pos]
    return [f.with_matrix(m) for f, m in zip(sequence, out)]


class StreamSmoother:
    """Incremental :func:`smooth`; output lags input by ``radius`` frames.

    Emits exactly the frames :func:`smooth` returns for the same sequence.
    """

    def __init__(self, radius: int = 1, epsilon: float = DEFAULT_EPSILON):
        if radius < 0:
            raise ValueError(f"radius must be >= 0, got {radius}")
        self.radius = radius
        self.epsilon = epsilon
        self._buf: deque[SkeletonFrame] = deque()   # context, oldest first
        self._pending: deque[SkeletonFrame] = deque()

    def push(self, frame: SkeletonFrame) -> list[SkeletonFrame]:
        if self.radius == 0:
            return [frame]
        self._buf.append(frame)
        self._pending.append(frame)
        return self._release(frame.frame_index)

    def flush(self) -> list[SkeletonFrame]:
        if self.radius == 0:
            return []
        return self._release(None)

    def _release(self, newest: int | None) -> list[SkeletonFrame]:
        out = []
        r = self.radius
        while self._pending and (newest is None or newest >= self._pending[0].frame_index + r):
            centre = self._pending.popleft()
            lo = centre.frame_index - r
            block = np.zeros((2 * r + 1, NUM_KEYPOINTS, 3))
            for f in self._buf:
                if lo <= f.frame_index <= centre.frame_index + r:
                    block[f.frame_index - lo] = f.matrix
            out.append(centre.with_matrix(_smooth_dense(block, r, self.epsilon)[r]))
            if self._pending:
                keep_from = self._pending[0].frame_index - r
                while self._buf and self._buf[0].frame_index < keep_from:
                    self._buf.popleft()
        return out


@dataclass(frozen=True)
class RoiGate:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    mode: str = "require_neck_inside"

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ConfigError(f"empty ROI rectangle ({self.x_min}, {self.y_min})-({self.x_max}, {self.y_max})")
        if self.mode not in ("require_neck_inside", "require_all_valid_inside"):
            raise ConfigError(f"unknown ROI mode {self.mode!r}")

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


def roi_filter(frame: SkeletonFrame, gate: RoiGate, epsilon: float = DEFAULT_EPSILON) -> bool:
    """Whether ``frame`` belongs to an occupant of the gated region (edges inclusive)."""
    m = frame.matrix
    if gate.mode == "require_neck_inside":
        return bool(m[NECK, 2] >= epsilon) and gate.contains(m[NECK, 0], m[NECK, 1])
    ok = m[:, 2] >= epsilon
    xs, ys = m[ok, 0], m[ok, 1]
    return bool(np.all((xs >= gate.x_min) & (xs <= gate.x_max)
                       & (ys >= gate.y_min) & (ys <= gate.y_max)))
