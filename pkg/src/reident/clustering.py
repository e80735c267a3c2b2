"""Label refinement by iterative density-peak extraction.

Each make/model group is split into sub-clusters: repeatedly find the record
whose neighborhood (match score >= threshold) over the still-unassigned set
is largest, carve that neighborhood out as a cluster, and continue until
nothing is left. Clusters below the minimum size are discarded rather than
kept as noisy classes.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingAssignmentError
from .gallery import EmbeddingRecord, Gallery, pairwise_match_scores

# Cluster index of records that ended up in a sub-minimum cluster.
DISCARDED = -1

DEFAULT_SIM_THRESHOLD = 0.75
DEFAULT_MIN_CLUSTER_SIZE = 20


@dataclass
class ClusterParams:
    """Neighborhood threshold on match score and minimum accepted size."""

    sim_threshold: float = DEFAULT_SIM_THRESHOLD
    min_cluster_size: int = DEFAULT_MIN_CLUSTER_SIZE

    def __post_init__(self) -> None:
        if not 0.0 <= self.sim_threshold <= 1.0:
            raise ValueError("sim_threshold must be in [0,1]")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


@dataclass
class ClusterAssignment:
    """Refined label for one record: (make, model, cluster_index)."""

    record_id: str
    make: str
    model: str
    cluster_index: int  # >= 0, or DISCARDED

    @property
    def discarded(self) -> bool:
        return self.cluster_index == DISCARDED


@dataclass
class ClusteringResult:
    """Assignments plus before/after class accounting."""

    assignments: list[ClusterAssignment] = field(default_factory=list)
    cluster_count: int = 0
    discarded_count: int = 0
    class_count_before: int = 0
    class_count_after: int = 0

    def by_record_id(self) -> dict[str, ClusterAssignment]:
        return {a.record_id: a for a in self.assignments}

    def to_report_dict(self) -> dict:
        groups: dict[str, dict] = {}
        for a in self.assignments:
            g = groups.setdefault(f"{a.make}/{a.model}", {"cluster_sizes": {}, "discarded": 0})
            if a.discarded:
                g["discarded"] += 1
            else:
                sizes = g["cluster_sizes"]
                sizes[a.cluster_index] = sizes.get(a.cluster_index, 0) + 1
        for g in groups.values():
            sizes = g["cluster_sizes"]
            g["cluster_sizes"] = [sizes[k] for k in sorted(sizes)]
        return {
            "class_count_before": self.class_count_before,
            "class_count_after": self.class_count_after,
            "cluster_count": self.cluster_count,
            "discarded_count": self.discarded_count,
            "groups": groups,
        }


def pairwise_scores(
    records: list[EmbeddingRecord], threads: int = 1
) -> np.ndarray:
    """Symmetric match-score matrix for one make/model group, unit diagonal."""
    vectors = np.stack([r.vector for r in records])
    return pairwise_match_scores(vectors, ids=[r.id for r in records], threads=threads)


def extract_density_clusters(
    records: list[EmbeddingRecord],
    params: ClusterParams,
    threads: int = 1,
) -> ClusteringResult:
    """Cluster one make/model group by iterative density-peak extraction.

    Round by round over the unassigned set: each record's density is the
    number of unassigned records within the similarity threshold (itself
    included); the densest record wins (ties to the lowest input index) and
    its threshold ball becomes the next cluster. Accepted clusters are
    numbered in extraction order; sub-minimum clusters are discarded.
    """
    if not records:
        return ClusteringResult()
    scores = pairwise_scores(records, threads=threads)
    neighbors = scores >= params.sim_threshold
    n = len(records)
    unassigned = np.ones(n, dtype=bool)
    extraction: list[np.ndarray] = []
    while unassigned.any():
        active = np.nonzero(unassigned)[0]
        sub = neighbors[np.ix_(active, active)]
        density = sub.sum(axis=1)
        peak = int(np.argmax(density))  # first max = lowest input index
        members = active[sub[peak]]
        extraction.append(members)
        unassigned[members] = False

    assignments: list[ClusterAssignment] = []
    accepted = 0
    discarded = 0
    for members in extraction:
        if len(members) >= params.min_cluster_size:
            index = accepted
            accepted += 1
        else:
            index = DISCARDED
            discarded += len(members)
        for i in members:
            rec = records[int(i)]
            assignments.append(
                ClusterAssignment(
                    record_id=rec.id, make=rec.make, model=rec.model, cluster_index=index
                )
            )
    return ClusteringResult(
        assignments=assignments,
        cluster_count=accepted,
        discarded_count=discarded,
        class_count_before=1,
        class_count_after=accepted,
    )


def cluster_gallery(
    gallery: Gallery, params: ClusterParams, threads: int = 1
) -> ClusteringResult:
    """Run density-peak extraction per (make, model) group and merge.

    Groups are independent; the merged result is ordered by group key, then
    extraction order, so identical input always yields identical output.
    """
    groups: OrderedDict[tuple[str, str], list[EmbeddingRecord]] = OrderedDict()
    for rec in gallery.records:
        groups.setdefault((rec.make, rec.model), []).append(rec)

    merged = ClusteringResult(class_count_before=len(groups))
    for key in sorted(groups):
        part = extract_density_clusters(groups[key], params, threads=threads)
        merged.assignments.extend(part.assignments)
        merged.cluster_count += part.cluster_count
        merged.discarded_count += part.discarded_count
        merged.class_count_after += part.class_count_after
    return merged


def relabel_gallery(
    gallery: Gallery, result: ClusteringResult, drop_discarded: bool = True
) -> Gallery:
    """Rewrite model labels to `model#k` per cluster assignment.

    Discarded records are removed when `drop_discarded` (the default for
    training input) or kept under their original label otherwise. Record
    order follows the input gallery.
    """
    by_id = result.by_record_id()
    records = []
    for rec in gallery.records:
        a = by_id.get(rec.id)
        if a is None:
            raise MissingAssignmentError(f"record {rec.id!r} has no cluster assignment")
        if a.discarded:
            if drop_discarded:
                continue
            model = rec.model
        else:
            model = f"{rec.model}#{a.cluster_index}"
        records.append(
            EmbeddingRecord(
                id=rec.id,
                make=rec.make,
                model=model,
                vector=rec.vector,
                track_id=rec.track_id,
                frame=rec.frame,
                quality=rec.quality,
                color=rec.color,
            )
        )
    return Gallery.from_records(records)


def base_model(model: str) -> str:
    """Strip a `#k` cluster suffix, recovering the original model label."""
    head, sep, tail = model.rpartition("#")
    if sep and tail.isdigit():
        return head
    return model
