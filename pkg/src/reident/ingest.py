"""Gallery cleansing: exact/near duplicate removal and quality filtering.

All passes are greedy scans in file order, so output is deterministic and
survivors keep their relative input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gallery import Gallery, match_score

DEFAULT_NEAR_THRESHOLD = 0.995

REASON_EXACT = "exact-duplicate"
REASON_NEAR = "near-duplicate"
REASON_QUALITY = "low-quality"


@dataclass
class CleansingReport:
    """Counts and per-record reasons for one or more cleansing passes."""

    input_count: int = 0
    exact_duplicates_removed: int = 0
    near_duplicates_removed: int = 0
    low_quality_removed: int = 0
    output_count: int = 0
    removed_ids: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "exact_duplicates_removed": self.exact_duplicates_removed,
            "near_duplicates_removed": self.near_duplicates_removed,
            "low_quality_removed": self.low_quality_removed,
            "output_count": self.output_count,
            "removed_ids": [[rid, reason] for rid, reason in self.removed_ids],
        }


def _surviving(gallery: Gallery, keep: list[bool]) -> Gallery:
    records = [r for r, k in zip(gallery.records, keep) if k]
    return Gallery(dimension=gallery.dimension, records=records)


def dedup_exact(gallery: Gallery) -> tuple[Gallery, CleansingReport]:
    """Drop records whose vector bytes match an earlier record's exactly."""
    report = CleansingReport(input_count=len(gallery))
    seen: set[bytes] = set()
    keep = []
    for rec in gallery.records:
        key = rec.vector.tobytes()
        if key in seen:
            keep.append(False)
            report.removed_ids.append((rec.id, REASON_EXACT))
        else:
            seen.add(key)
            keep.append(True)
    report.exact_duplicates_removed = len(report.removed_ids)
    report.output_count = report.input_count - report.exact_duplicates_removed
    return _surviving(gallery, keep), report


def dedup_near(
    gallery: Gallery, sim_threshold: float = DEFAULT_NEAR_THRESHOLD
) -> tuple[Gallery, CleansingReport]:
    """Drop records scoring >= `sim_threshold` against a kept record of the
    same make/model. Cross-class near-duplicates are informative hard
    negatives and stay.
    """
    if not 0.0 <= sim_threshold <= 1.0:
        raise ValueError("sim_threshold must be in [0,1]")
    report = CleansingReport(input_count=len(gallery))
    kept: dict[tuple[str, str], list[np.ndarray]] = {}
    keep = []
    for rec in gallery.records:
        group = kept.setdefault((rec.make, rec.model), [])
        if any(match_score(rec.vector, other) >= sim_threshold for other in group):
            keep.append(False)
            report.removed_ids.append((rec.id, REASON_NEAR))
        else:
            group.append(rec.vector)
            keep.append(True)
    report.near_duplicates_removed = len(report.removed_ids)
    report.output_count = report.input_count - report.near_duplicates_removed
    return _surviving(gallery, keep), report


def filter_quality(
    gallery: Gallery, min_quality: float
) -> tuple[Gallery, CleansingReport]:
    """Keep records with quality >= `min_quality`. Records without a quality
    field are kept: absence is not evidence of a bad detection.
    """
    report = CleansingReport(input_count=len(gallery))
    keep = []
    for rec in gallery.records:
        ok = rec.quality is None or rec.quality >= min_quality
        keep.append(ok)
        if not ok:
            report.removed_ids.append((rec.id, REASON_QUALITY))
    report.low_quality_removed = len(report.removed_ids)
    report.output_count = report.input_count - report.low_quality_removed
    return _surviving(gallery, keep), report


def cleanse(
    gallery: Gallery,
    near_threshold: float = DEFAULT_NEAR_THRESHOLD,
    min_quality: float = 0.0,
) -> tuple[Gallery, CleansingReport]:
    """Full ingestion pass: exact dedup, then near dedup, then quality filter."""
    out, exact = dedup_exact(gallery)
    out, near = dedup_near(out, near_threshold)
    out, lowq = filter_quality(out, min_quality)
    report = CleansingReport(
        input_count=exact.input_count,
        exact_duplicates_removed=exact.exact_duplicates_removed,
        near_duplicates_removed=near.near_duplicates_removed,
        low_quality_removed=lowq.low_quality_removed,
        output_count=lowq.output_count,
        removed_ids=exact.removed_ids + near.removed_ids + lowq.removed_ids,
    )
    return out, report
