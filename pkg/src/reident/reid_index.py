"""Persisted re-identification index: best-shot classifications per track.

Classification happens once, at build time. The index file is a plain JSON
document; queries are metadata filters over the in-memory structure, so a
serving process stays read-only. Rebuilds write to a temporary file and
rename over the target, so a concurrently serving process never observes a
partial index.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

from .clustering import base_model
from .errors import BadQueryError, UnknownTrackError
from .gallery import Gallery
from .head import HeadModel
from .evaluation import best_shots

INDEX_FORMAT = "reident-index"
INDEX_VERSION = 1

DEFAULT_SEARCH_LIMIT = 50


@dataclass(frozen=True)
class MemberRecord:
    """One detection inside a track, as exposed by track detail."""

    id: str
    frame: int | None
    quality: float | None


@dataclass(frozen=True)
class TrackEntry:
    """Best-shot classification of one track plus its member detections."""

    track_id: str
    record_id: str
    predicted_make: str
    predicted_model: str
    shape_score: float
    quality: float
    color_name: str | None
    color_score: float | None
    members: tuple[MemberRecord, ...]


@dataclass(frozen=True)
class ReidIndex:
    dimension: int
    head_variant: str
    gallery_count: int
    tracks: tuple[TrackEntry, ...]
    by_track: dict[str, TrackEntry] = field(repr=False, default_factory=dict)

    @property
    def track_count(self) -> int:
        return len(self.tracks)


@dataclass(frozen=True)
class SearchQuery:
    """Filter set for a best-shot search; at least one filter is required."""

    make: str | None = None
    model: str | None = None
    color: str | None = None
    min_score: float = 0.0
    limit: int = DEFAULT_SEARCH_LIMIT

    def validate(self) -> None:
        if self.make is None and self.model is None and self.color is None:
            raise BadQueryError("at least one of make/model/color must be given")
        if not 0.0 <= self.min_score <= 1.0:
            raise BadQueryError(f"min_score must be in [0, 1], got {self.min_score}")
        if self.limit < 1:
            raise BadQueryError(f"limit must be positive, got {self.limit}")


def _split_label(label: str) -> tuple[str, str]:
    make, _, model = label.partition("/")
    return make, model


def build_index(gallery: Gallery, head: HeadModel) -> ReidIndex:
    """Classify each track's best shot and assemble the searchable index.

    Predicted models are reported at base granularity: a head trained on
    refined labels predicts "model#3", but investigators search by model,
    so the cluster suffix is stripped here.
    """
    shots = best_shots(gallery, head)
    by_track_records: dict[str, list] = {}
    for rec in gallery.records:
        by_track_records.setdefault(rec.track_id, []).append(rec)

    entries = []
    for shot in shots:
        rec = by_track_records[shot.track_id]
        members = tuple(
            MemberRecord(id=r.id, frame=r.frame, quality=r.quality)
            for r in sorted(
                rec, key=lambda r: (r.frame is None, r.frame if r.frame is not None else 0, r.id)
            )
        )
        best = next(r for r in rec if r.id == shot.record_id)
        make, model = _split_label(shot.predicted_label)
        entries.append(
            TrackEntry(
                track_id=shot.track_id,
                record_id=shot.record_id,
                predicted_make=make,
                predicted_model=base_model(model),
                shape_score=shot.score,
                quality=shot.quality,
                color_name=best.color.name if best.color is not None else None,
                color_score=best.color.score if best.color is not None else None,
                members=members,
            )
        )
    entries.sort(key=lambda e: e.track_id)
    return ReidIndex(
        dimension=head.dimension,
        head_variant=head.variant,
        gallery_count=len(gallery.records),
        tracks=tuple(entries),
        by_track={e.track_id: e for e in entries},
    )


def search(index: ReidIndex, query: SearchQuery) -> list[TrackEntry]:
    """Filtered best-shots, score-descending, ties by track id ascending."""
    query.validate()
    hits = []
    for entry in index.tracks:
        if query.make is not None and entry.predicted_make.lower() != query.make.lower():
            continue
        if query.model is not None and entry.predicted_model.lower() != query.model.lower():
            continue
        if query.color is not None:
            if entry.color_name is None or entry.color_name.lower() != query.color.lower():
                continue
        if entry.shape_score < query.min_score:
            continue
        hits.append(entry)
    hits.sort(key=lambda e: (-e.shape_score, e.track_id))
    return hits[: query.limit]


def track_detail(index: ReidIndex, track_id: str) -> TrackEntry:
    try:
        return index.by_track[track_id]
    except KeyError:
        raise UnknownTrackError(f"unknown track id: {track_id!r}") from None


# ---------------------------------------------------------------------------
# Persistence

def _entry_to_dict(entry: TrackEntry) -> dict:
    d = {
        "trackId": entry.track_id,
        "recordId": entry.record_id,
        "predictedMake": entry.predicted_make,
        "predictedModel": entry.predicted_model,
        "shapeScore": entry.shape_score,
        "quality": entry.quality,
        "members": [
            {"id": m.id, "frame": m.frame, "quality": m.quality} for m in entry.members
        ],
    }
    if entry.color_name is not None:
        d["colorName"] = entry.color_name
        d["colorScore"] = entry.color_score
    return d


def save_index(index: ReidIndex, path: str) -> None:
    """Write the index as canonical JSON, atomically."""
    doc = {
        "format": INDEX_FORMAT,
        "version": INDEX_VERSION,
        "dimension": index.dimension,
        "headVariant": index.head_variant,
        "galleryCount": index.gallery_count,
        "trackCount": index.track_count,
        "tracks": [_entry_to_dict(e) for e in index.tracks],
    }
    payload = json.dumps(doc, sort_keys=True, indent=1).encode("utf-8") + b"\n"
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".index-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_index(path: str) -> ReidIndex:
    with open(path, "rb") as f:
        doc = json.load(f)
    if doc.get("format") != INDEX_FORMAT or doc.get("version") != INDEX_VERSION:
        raise ValueError(f"not a {INDEX_FORMAT} v{INDEX_VERSION} file: {path}")
    entries = []
    for e in doc["tracks"]:
        entries.append(
            TrackEntry(
                track_id=e["trackId"],
                record_id=e["recordId"],
                predicted_make=e["predictedMake"],
                predicted_model=e["predictedModel"],
                shape_score=float(e["shapeScore"]),
                quality=float(e["quality"]),
                color_name=e.get("colorName"),
                color_score=e.get("colorScore"),
                members=tuple(
                    MemberRecord(id=m["id"], frame=m["frame"], quality=m["quality"])
                    for m in e["members"]
                ),
            )
        )
    return ReidIndex(
        dimension=int(doc["dimension"]),
        head_variant=doc["headVariant"],
        gallery_count=int(doc["galleryCount"]),
        tracks=tuple(entries),
        by_track={e.track_id: e for e in entries},
    )
