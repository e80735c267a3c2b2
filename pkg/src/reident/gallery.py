"""Embedding records, match scoring, and gallery file formats.

A gallery is an ordered list of embedding records with one fixed vector
dimension. Vectors are held at 32-bit precision (matching the binary format)
while all dot products accumulate at 64-bit. Record order is preserved from
file so every downstream pipeline stage is deterministic.
"""

from __future__ import annotations

import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    EmptyGalleryError,
    GalleryParseError,
    ZeroNormVectorError,
)

BINARY_MAGIC = b"EGAL"
BINARY_VERSION = 1

_FLAG_TRACK = 1
_FLAG_FRAME = 2
_FLAG_QUALITY = 4
_FLAG_COLOR = 8

# Row-block size for pairwise scoring. Fixed (never derived from the worker
# count) so results are bit-identical no matter how many threads run.
_SCORE_BLOCK = 512


@dataclass
class ColorAttr:
    """Opaque per-record color attribute from an upstream classifier."""

    name: str
    score: float


@dataclass
class EmbeddingRecord:
    """One detection: identity, make/model label, optional video metadata."""

    id: str
    make: str
    model: str
    vector: np.ndarray
    track_id: str | None = None
    frame: int | None = None
    quality: float | None = None
    color: ColorAttr | None = None

    def label(self) -> str:
        """Combined class label, `make/model`."""
        return f"{self.make}/{self.model}"


@dataclass
class Gallery:
    """Ordered, immutable-by-convention set of records with one dimension."""

    dimension: int
    records: list[EmbeddingRecord] = field(default_factory=list)

    @classmethod
    def from_records(cls, records: list[EmbeddingRecord]) -> "Gallery":
        """Build a gallery, enforcing all record invariants."""
        if not records:
            raise EmptyGalleryError("gallery has no records")
        dim = len(records[0].vector)
        seen: set[str] = set()
        for rec in records:
            _validate_record(rec, dim)
            if rec.id in seen:
                raise DuplicateIdError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
        return cls(dimension=dim, records=records)

    def __len__(self) -> int:
        return len(self.records)

    def vectors(self) -> np.ndarray:
        """All vectors stacked as an (N, D) float32 matrix."""
        return np.stack([r.vector for r in self.records])

    def labels(self) -> list[str]:
        return [r.label() for r in self.records]


def _validate_record(rec: EmbeddingRecord, dim: int) -> None:
    vec = np.asarray(rec.vector, dtype=np.float32)
    if vec.ndim != 1 or len(vec) != dim:
        raise DimensionMismatchError(
            f"record {rec.id!r}: vector has dimension {len(vec)}, gallery uses {dim}"
        )
    if not np.all(np.isfinite(vec)):
        raise GalleryParseError(f"record {rec.id!r}: vector has non-finite entries")
    rec.vector = vec
    if rec.frame is not None and rec.frame < 0:
        raise GalleryParseError(f"record {rec.id!r}: negative frame")
    if rec.quality is not None and not 0.0 <= rec.quality <= 1.0:
        raise GalleryParseError(f"record {rec.id!r}: quality outside [0,1]")
    if rec.color is not None and not 0.0 <= rec.color.score <= 1.0:
        raise GalleryParseError(f"record {rec.id!r}: color score outside [0,1]")


# ---------------------------------------------------------------------------
# Similarity


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of two vectors, clamped to [-1, 1] against rounding.

    Raises DimensionMismatchError on length disagreement and
    ZeroNormVectorError when either norm is zero.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) != len(b):
        raise DimensionMismatchError(f"vector lengths differ: {len(a)} vs {len(b)}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        raise ZeroNormVectorError("cannot score a zero-norm vector")
    c = float(np.dot(a, b)) / (na * nb)
    return min(1.0, max(-1.0, c))


def match_score(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity rescaled to [0, 1] so thresholds share one axis."""
    return (cosine_similarity(a, b) + 1.0) / 2.0


def pairwise_match_scores(
    vectors: np.ndarray,
    ids: list[str] | None = None,
    threads: int = 1,
) -> np.ndarray:
    """All-pairs match-score matrix for an (N, D) stack of vectors.

    Exactly symmetric with a unit diagonal. Rows are scored in fixed-size
    blocks; the optional thread pool only changes wall time, never values.
    """
    v = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(v, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if len(zero):
        i = int(zero[0])
        name = ids[i] if ids is not None else f"row {i}"
        raise ZeroNormVectorError(f"cannot score zero-norm vector ({name})")
    unit = v / norms[:, None]
    n = len(unit)
    cos = np.empty((n, n), dtype=np.float64)
    blocks = range(0, n, _SCORE_BLOCK)

    def fill(start: int) -> None:
        stop = min(start + _SCORE_BLOCK, n)
        cos[start:stop] = unit[start:stop] @ unit.T

    if threads > 1 and n > _SCORE_BLOCK:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, blocks))
    else:
        for start in blocks:
            fill(start)
    # Mirror the upper triangle so the matrix is symmetric to the bit.
    iu = np.triu_indices(n, 1)
    cos[(iu[1], iu[0])] = cos[iu]
    np.clip(cos, -1.0, 1.0, out=cos)
    scores = (cos + 1.0) / 2.0
    np.fill_diagonal(scores, 1.0)
    return scores


# ---------------------------------------------------------------------------
# JSONL format

_JSONL_KEYS = {"id", "make", "model", "track_id", "frame", "quality", "color", "vec"}


def _record_to_obj(rec: EmbeddingRecord) -> dict:
    obj: dict = {"id": rec.id, "make": rec.make, "model": rec.model}
    if rec.track_id is not None:
        obj["track_id"] = rec.track_id
    if rec.frame is not None:
        obj["frame"] = rec.frame
    if rec.quality is not None:
        obj["quality"] = rec.quality
    if rec.color is not None:
        obj["color"] = {"name": rec.color.name, "score": rec.color.score}
    obj["vec"] = [float(x) for x in rec.vector]
    return obj


def _record_from_obj(obj: dict, line_no: int) -> EmbeddingRecord:
    def fail(msg: str) -> GalleryParseError:
        return GalleryParseError(f"line {line_no}: {msg}")

    if not isinstance(obj, dict):
        raise fail("record is not a JSON object")
    unknown = set(obj) - _JSONL_KEYS
    if unknown:
        raise fail(f"unknown fields {sorted(unknown)}")
    try:
        rec_id, make, model = obj["id"], obj["make"], obj["model"]
        vec = obj["vec"]
    except KeyError as exc:
        raise fail(f"missing field {exc.args[0]!r}") from None
    if not all(isinstance(s, str) for s in (rec_id, make, model)):
        raise fail("id/make/model must be strings")
    if not isinstance(vec, list) or not vec:
        raise fail("vec must be a non-empty array")
    color = None
    if "color" in obj:
        cobj = obj["color"]
        if not isinstance(cobj, dict) or "name" not in cobj or "score" not in cobj:
            raise fail("color must be {name, score}")
        color = ColorAttr(name=str(cobj["name"]), score=float(cobj["score"]))
    frame = obj.get("frame")
    if frame is not None and not isinstance(frame, int):
        raise fail("frame must be an integer")
    try:
        vector = np.asarray(vec, dtype=np.float32)
    except (TypeError, ValueError):
        raise fail("vec entries must be numbers") from None
    return EmbeddingRecord(
        id=rec_id,
        make=make,
        model=model,
        vector=vector,
        track_id=obj.get("track_id"),
        frame=frame,
        quality=float(obj["quality"]) if "quality" in obj else None,
        color=color,
    )


def _load_jsonl(path: Path) -> Gallery:
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GalleryParseError(f"line {line_no}: invalid JSON ({exc.msg})") from None
            records.append(_record_from_obj(obj, line_no))
    return Gallery.from_records(records)


def _save_jsonl(gallery: Gallery, path: Path) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in gallery.records:
            fh.write(json.dumps(_record_to_obj(rec), separators=(",", ":")))
            fh.write("\n")


# ---------------------------------------------------------------------------
# Binary format
#
# magic "EGAL" | u32 version | u32 D | u64 count, then per record:
#   u16+id, u16+make, u16+model (UTF-8), u8 flags, optional fields in flag
#   order (track: u16+str, frame: u32, quality: f64, color: u16+str f64),
#   then D little-endian f32. All integers little-endian.


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise GalleryParseError(f"string field longer than 65535 bytes: {s[:32]!r}...")
    return struct.pack("<H", len(raw)) + raw


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise GalleryParseError(f"truncated file at byte {self.pos}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        n = self.u16()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError:
            raise GalleryParseError(f"invalid UTF-8 at byte {self.pos - n}") from None


def _save_binary(gallery: Gallery, path: Path) -> None:
    parts = [
        BINARY_MAGIC,
        struct.pack("<I", BINARY_VERSION),
        struct.pack("<I", gallery.dimension),
        struct.pack("<Q", len(gallery.records)),
    ]
    for rec in gallery.records:
        parts.append(_pack_str(rec.id))
        parts.append(_pack_str(rec.make))
        parts.append(_pack_str(rec.model))
        flags = 0
        if rec.track_id is not None:
            flags |= _FLAG_TRACK
        if rec.frame is not None:
            flags |= _FLAG_FRAME
        if rec.quality is not None:
            flags |= _FLAG_QUALITY
        if rec.color is not None:
            flags |= _FLAG_COLOR
        parts.append(struct.pack("<B", flags))
        if rec.track_id is not None:
            parts.append(_pack_str(rec.track_id))
        if rec.frame is not None:
            parts.append(struct.pack("<I", rec.frame))
        if rec.quality is not None:
            parts.append(struct.pack("<d", rec.quality))
        if rec.color is not None:
            parts.append(_pack_str(rec.color.name))
            parts.append(struct.pack("<d", rec.color.score))
        parts.append(rec.vector.astype("<f4").tobytes())
    path.write_bytes(b"".join(parts))


def _load_binary(path: Path) -> Gallery:
    rd = _Reader(path.read_bytes())
    if rd.take(4) != BINARY_MAGIC:
        raise GalleryParseError("bad magic, not a gallery file")
    version = rd.u32()
    if version != BINARY_VERSION:
        raise GalleryParseError(f"unsupported version {version}")
    dim = rd.u32()
    count = rd.u64()
    records = []
    for _ in range(count):
        rec_id = rd.string()
        make = rd.string()
        model = rd.string()
        flags = rd.u8()
        track_id = rd.string() if flags & _FLAG_TRACK else None
        frame = rd.u32() if flags & _FLAG_FRAME else None
        quality = rd.f64() if flags & _FLAG_QUALITY else None
        color = None
        if flags & _FLAG_COLOR:
            name = rd.string()
            color = ColorAttr(name=name, score=rd.f64())
        vector = np.frombuffer(rd.take(4 * dim), dtype="<f4").astype(np.float32)
        records.append(
            EmbeddingRecord(
                id=rec_id,
                make=make,
                model=model,
                vector=vector,
                track_id=track_id,
                frame=frame,
                quality=quality,
                color=color,
            )
        )
    if rd.pos != len(rd.data):
        raise GalleryParseError(f"trailing bytes at offset {rd.pos}")
    return Gallery.from_records(records)


# ---------------------------------------------------------------------------
# Entry points


def infer_format(path: str | Path) -> str:
    """Map a file suffix to a gallery format. `.jsonl` is text, the rest binary."""
    return "jsonl" if Path(path).suffix == ".jsonl" else "binary"


def load_gallery(path: str | Path, fmt: str | None = None) -> Gallery:
    """Load a gallery file, enforcing all invariants. Order = file order."""
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt == "jsonl":
        return _load_jsonl(path)
    if fmt == "binary":
        return _load_binary(path)
    raise ValueError(f"unknown gallery format {fmt!r}")


def save_gallery(gallery: Gallery, path: str | Path, fmt: str | None = None) -> None:
    """Write a gallery; binary round-trips bit-exactly, jsonl within 1e-9."""
    path = Path(path)
    fmt = fmt or infer_format(path)
    if fmt == "jsonl":
        _save_jsonl(gallery, path)
    elif fmt == "binary":
        _save_binary(gallery, path)
    else:
        raise ValueError(f"unknown gallery format {fmt!r}")
