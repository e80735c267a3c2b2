"""Score densities, FAR/FRR threshold curves, rank-1 accuracy, best shots.

Client scores pair records of the same class (make/model, or the same
refined cluster); impostor scores pair records of different models. Error
rates are computed from exact pair scores -- the 256-bin histograms exist
only for plotting, so threshold selection carries no binning bias.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import base_model
from .errors import (
    EmptyDensityError,
    MissingQualityError,
    MissingTrackIdError,
    NoClientPairsError,
    NoImpostorPairsError,
    UnsatisfiableThresholdError,
)
from .gallery import Gallery, pairwise_match_scores
from .head import HeadModel, predict_batch

NUM_BINS = 256
DEFAULT_GRID_SIZE = 1001

PAIRING_MODEL = "model"
PAIRING_CLUSTER = "cluster"

GRANULARITY_MAKE = "make"
GRANULARITY_MAKE_MODEL = "make-model"


@dataclass
class ScoreDensities:
    """Client/impostor histograms plus the exact scores behind them."""

    bin_edges: np.ndarray  # 257 uniform edges on [0,1]
    client_counts: np.ndarray  # 256 ints
    impostor_counts: np.ndarray
    client_total: int
    impostor_total: int
    client_scores: np.ndarray = field(repr=False, default=None)
    impostor_scores: np.ndarray = field(repr=False, default=None)


@dataclass
class ErrorRates:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    eer: float
    eer_threshold: float


@dataclass
class TrackBestShot:
    """Per-track representative: the highest-quality detection, classified."""

    track_id: str
    record_id: str
    quality: float
    predicted_label: str
    score: float


def score_densities(
    gallery: Gallery, pairing: str = PAIRING_MODEL, threads: int = 1
) -> ScoreDensities:
    """Histogram all unordered pair scores into client and impostor densities.

    `pairing` decides what counts as a client pair: same make/model
    (cluster suffixes stripped), or same refined cluster. Impostor pairs are
    cross-model under both pairings, so in the clustered view a same-model /
    different-cluster pair belongs to neither density.
    """
    if pairing not in (PAIRING_MODEL, PAIRING_CLUSTER):
        raise ValueError(f"unknown pairing {pairing!r}")
    n = len(gallery)
    if n < 2:
        raise NoClientPairsError("need at least two records to form pairs")
    base_keys = [(r.make, base_model(r.model)) for r in gallery.records]
    cluster_keys = [(r.make, r.model) for r in gallery.records]
    base_codes = _codes(base_keys)
    cluster_codes = _codes(cluster_keys)

    scores = pairwise_match_scores(
        gallery.vectors(), ids=[r.id for r in gallery.records], threads=threads
    )
    iu = np.triu_indices(n, 1)
    pair_scores = scores[iu]
    same_base = base_codes[iu[0]] == base_codes[iu[1]]
    if pairing == PAIRING_CLUSTER:
        client = cluster_codes[iu[0]] == cluster_codes[iu[1]]
    else:
        client = same_base
    impostor = ~same_base

    client_scores = pair_scores[client]
    impostor_scores = pair_scores[impostor]
    if len(client_scores) == 0:
        raise NoClientPairsError("no same-class pair in gallery")
    if len(impostor_scores) == 0:
        raise NoImpostorPairsError("no cross-model pair in gallery")

    edges = np.linspace(0.0, 1.0, NUM_BINS + 1)
    client_counts, _ = np.histogram(client_scores, bins=edges)
    impostor_counts, _ = np.histogram(impostor_scores, bins=edges)
    return ScoreDensities(
        bin_edges=edges,
        client_counts=client_counts,
        impostor_counts=impostor_counts,
        client_total=int(len(client_scores)),
        impostor_total=int(len(impostor_scores)),
        client_scores=np.sort(client_scores),
        impostor_scores=np.sort(impostor_scores),
    )


def _codes(keys: list) -> np.ndarray:
    mapping: dict = {}
    out = np.empty(len(keys), dtype=np.int64)
    for i, k in enumerate(keys):
        out[i] = mapping.setdefault(k, len(mapping))
    return out


def error_rates(densities: ScoreDensities, grid_size: int = DEFAULT_GRID_SIZE) -> ErrorRates:
    """FAR/FRR over a uniform threshold grid, from exact scores.

    FAR(t) counts impostor scores >= t, FRR(t) counts client scores < t.
    The equal-error point is the grid threshold minimizing |FAR - FRR|,
    ties resolved toward the lower threshold.
    """
    if densities.client_total <= 0 or densities.impostor_total <= 0:
        raise EmptyDensityError("both score populations must be non-empty")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    thresholds = np.linspace(0.0, 1.0, grid_size)
    imp = densities.impostor_scores
    cli = densities.client_scores
    far = (len(imp) - np.searchsorted(imp, thresholds, side="left")) / len(imp)
    frr = np.searchsorted(cli, thresholds, side="left") / len(cli)
    eer_idx = int(np.argmin(np.abs(far - frr)))
    return ErrorRates(
        thresholds=thresholds,
        far=far,
        frr=frr,
        eer=float((far[eer_idx] + frr[eer_idx]) / 2.0),
        eer_threshold=float(thresholds[eer_idx]),
    )


def pick_threshold(rates: ErrorRates, policy: str, limit: float | None = None) -> float:
    """Select an operating threshold.

    `eer` takes the equal-error threshold; `far` the smallest threshold with
    FAR <= limit; `frr` the largest threshold with FRR <= limit.
    """
    if policy == "eer":
        return rates.eer_threshold
    if policy == "far":
        if limit is None:
            raise ValueError("far policy needs a limit")
        ok = np.nonzero(rates.far <= limit)[0]
        if len(ok) == 0:
            raise UnsatisfiableThresholdError(f"no threshold reaches FAR <= {limit}")
        return float(rates.thresholds[ok[0]])
    if policy == "frr":
        if limit is None:
            raise ValueError("frr policy needs a limit")
        ok = np.nonzero(rates.frr <= limit)[0]
        if len(ok) == 0:
            raise UnsatisfiableThresholdError(f"no threshold reaches FRR <= {limit}")
        return float(rates.thresholds[ok[-1]])
    raise ValueError(f"unknown policy {policy!r}")


def _label_at(make: str, model: str, granularity: str) -> str:
    if granularity == GRANULARITY_MAKE:
        return make
    if granularity == GRANULARITY_MAKE_MODEL:
        return f"{make}/{base_model(model)}"
    raise ValueError(f"unknown granularity {granularity!r}")


def _split_label(label: str) -> tuple[str, str]:
    make, _, model = label.partition("/")
    return make, model


def rank1_accuracy(
    model: HeadModel,
    gallery: Gallery,
    threshold: float | None = None,
    granularity: str = GRANULARITY_MAKE_MODEL,
) -> tuple[float, float]:
    """Rank-1 accuracy and coverage at a label granularity.

    Without a threshold, coverage is 1 and accuracy is the fraction of
    records whose top prediction matches the truth. With one, records
    scoring below it are rejected first; accuracy is over the accepted
    records and NaN when nothing is accepted.
    """
    winners, scores = predict_batch(model, gallery.vectors())
    pred = [
        _label_at(*_split_label(model.class_labels[k]), granularity) for k in winners
    ]
    truth = [_label_at(r.make, r.model, granularity) for r in gallery.records]
    correct = np.array([p == t for p, t in zip(pred, truth)])
    accepted = np.ones(len(gallery), dtype=bool) if threshold is None else scores >= threshold
    coverage = float(accepted.mean())
    if not accepted.any():
        return math.nan, coverage
    return float(correct[accepted].mean()), coverage


def best_shots(gallery: Gallery, model: HeadModel) -> list[TrackBestShot]:
    """Pick and classify the best detection of every track.

    Best = maximal quality; quality ties go to the lowest frame (records
    without a frame sort last), then to the lexicographically smallest id.
    One entry per track, ordered by track id.
    """
    for rec in gallery.records:
        if rec.track_id is None:
            raise MissingTrackIdError(f"record {rec.id!r} has no track_id")
        if rec.quality is None:
            raise MissingQualityError(f"record {rec.id!r} has no quality")
    tracks: dict[str, list] = {}
    for rec in gallery.records:
        tracks.setdefault(rec.track_id, []).append(rec)
    chosen = [
        min(
            tracks[track_id],
            key=lambda r: (-r.quality, r.frame if r.frame is not None else math.inf, r.id),
        )
        for track_id in sorted(tracks)
    ]
    winners, scores = predict_batch(model, np.stack([r.vector for r in chosen]))
    return [
        TrackBestShot(
            track_id=rec.track_id,
            record_id=rec.id,
            quality=rec.quality,
            predicted_label=model.class_labels[int(w)],
            score=float(s),
        )
        for rec, w, s in zip(chosen, winners, scores)
    ]


def emit_error_rates_csv(rates: ErrorRates, path: str | Path) -> None:
    """One row per grid threshold: threshold,far,frr."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "far", "frr"])
        for t, a, r in zip(rates.thresholds, rates.far, rates.frr):
            writer.writerow([repr(float(t)), repr(float(a)), repr(float(r))])


def emit_densities_csv(densities: ScoreDensities, path: str | Path) -> None:
    """One row per histogram bin: bin_lo,bin_hi,client_count,impostor_count."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "client_count", "impostor_count"])
        for i in range(NUM_BINS):
            writer.writerow(
                [
                    repr(float(densities.bin_edges[i])),
                    repr(float(densities.bin_edges[i + 1])),
                    int(densities.client_counts[i]),
                    int(densities.impostor_counts[i]),
                ]
            )
