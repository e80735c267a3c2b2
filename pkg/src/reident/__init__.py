"""Embedding-gallery vehicle re-identification toolkit.

Pipeline: ingest (dedup + quality filter) → density-peak label refinement →
prior-free classification head → FAR/FRR threshold optimization → best-shot
search index → HTTP service.
"""

__version__ = "0.1.0"

from .errors import (
    BadQueryError,
    DimensionMismatchError,
    DuplicateIdError,
    EmptyClassError,
    EmptyDensityError,
    EmptyGalleryError,
    GalleryParseError,
    MissingAssignmentError,
    MissingQualityError,
    MissingTrackIdError,
    NoClientPairsError,
    NoImpostorPairsError,
    ReidentError,
    SingleClassError,
    UnknownTrackError,
    UnsatisfiableThresholdError,
    ZeroNormVectorError,
)
from .gallery import (
    ColorAttr,
    EmbeddingRecord,
    Gallery,
    cosine_similarity,
    load_gallery,
    match_score,
    pairwise_match_scores,
    save_gallery,
)
from .ingest import CleansingReport, cleanse, dedup_exact, dedup_near, filter_quality
from .clustering import (
    DISCARDED,
    ClusterParams,
    ClusteringResult,
    base_model,
    cluster_gallery,
    extract_density_clusters,
    relabel_gallery,
)
from .head import (
    VARIANT_BIASED,
    VARIANT_PRIOR_FREE,
    HeadModel,
    TrainConfig,
    gradient_check,
    load_head,
    predict,
    predict_batch,
    reinit_classification_layer,
    save_head,
    train_head,
)
from .evaluation import (
    ErrorRates,
    ScoreDensities,
    TrackBestShot,
    best_shots,
    error_rates,
    pick_threshold,
    rank1_accuracy,
    score_densities,
)
from .reid_index import (
    ReidIndex,
    SearchQuery,
    TrackEntry,
    build_index,
    load_index,
    save_index,
    search,
    track_detail,
)

__all__ = [
    "__version__",
    # errors
    "ReidentError",
    "DimensionMismatchError",
    "ZeroNormVectorError",
    "GalleryParseError",
    "DuplicateIdError",
    "EmptyGalleryError",
    "MissingAssignmentError",
    "SingleClassError",
    "EmptyClassError",
    "NoClientPairsError",
    "NoImpostorPairsError",
    "EmptyDensityError",
    "UnsatisfiableThresholdError",
    "MissingTrackIdError",
    "MissingQualityError",
    "UnknownTrackError",
    "BadQueryError",
    # gallery
    "ColorAttr",
    "EmbeddingRecord",
    "Gallery",
    "cosine_similarity",
    "match_score",
    "pairwise_match_scores",
    "load_gallery",
    "save_gallery",
    # ingest
    "CleansingReport",
    "cleanse",
    "dedup_exact",
    "dedup_near",
    "filter_quality",
    # clustering
    "DISCARDED",
    "ClusterParams",
    "ClusteringResult",
    "extract_density_clusters",
    "cluster_gallery",
    "relabel_gallery",
    "base_model",
    # head
    "VARIANT_BIASED",
    "VARIANT_PRIOR_FREE",
    "HeadModel",
    "TrainConfig",
    "train_head",
    "predict",
    "predict_batch",
    "reinit_classification_layer",
    "gradient_check",
    "save_head",
    "load_head",
    # evaluation
    "ScoreDensities",
    "ErrorRates",
    "TrackBestShot",
    "score_densities",
    "error_rates",
    "pick_threshold",
    "rank1_accuracy",
    "best_shots",
    # index
    "ReidIndex",
    "SearchQuery",
    "TrackEntry",
    "build_index",
    "search",
    "track_detail",
    "save_index",
    "load_index",
]
