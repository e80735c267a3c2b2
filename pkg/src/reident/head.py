"""Linear classification head over fixed embeddings.

Two variants share one model shape:

* ``biased``     -- plain affine layer, logits = centroids @ x + bias.
* ``prior-free`` -- no bias, centroid rows and the input are L2-normalized,
  so each logit is the cosine of the input with a class prototype. Training
  keeps rows on the unit sphere by projecting after every batch update
  (hard normalization), which strips the class-frequency prior an imbalanced
  training set would otherwise bake into the layer.

Training is plain mini-batch gradient descent on softmax cross-entropy so
the analytic gradients stay hand-verifiable against finite differences.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyClassError,
    GalleryParseError,
    SingleClassError,
    ZeroNormVectorError,
)
from .gallery import Gallery

VARIANT_BIASED = "biased"
VARIANT_PRIOR_FREE = "prior-free"

HEAD_MAGIC = b"EHED"
HEAD_VERSION = 1

_UNIT_NORM_TOL = 1e-6
_INIT_STD = 0.01


@dataclass
class HeadModel:
    """Centroid matrix (one row per class) with optional bias."""

    class_labels: list[str]
    centroids: np.ndarray  # (C, D) float64
    bias: np.ndarray | None  # (C,) float64, biased variant only
    variant: str
    seed: int = 0

    def __post_init__(self) -> None:
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)
        self.validate()

    @property
    def num_classes(self) -> int:
        return len(self.class_labels)

    @property
    def dimension(self) -> int:
        return self.centroids.shape[1]

    def validate(self) -> None:
        if len(set(self.class_labels)) != len(self.class_labels):
            raise ValueError("class labels must be unique")
        if self.centroids.shape[0] != len(self.class_labels):
            raise ValueError("centroid rows must match class count")
        if self.variant == VARIANT_PRIOR_FREE:
            if self.bias is not None:
                raise ValueError("prior-free model must not carry a bias")
            norms = np.linalg.norm(self.centroids, axis=1)
            if np.any(np.abs(norms - 1.0) > _UNIT_NORM_TOL):
                raise ValueError("prior-free centroid rows must have unit norm")
        elif self.variant == VARIANT_BIASED:
            if self.bias is None or self.bias.shape != (self.num_classes,):
                raise ValueError("biased model requires a bias of length C")
        else:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 30
    batch_size: int = 32
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.l2 < 0:
            raise ValueError("l2 must be non-negative")


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroNormVectorError("cannot normalize a zero-norm row")
    return m / norms


def _normalize_input(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).ravel()
    if len(x) != dim:
        raise DimensionMismatchError(f"input has dimension {len(x)}, model uses {dim}")
    norm = np.linalg.norm(x)
    if norm == 0.0:
        raise ZeroNormVectorError("cannot classify a zero-norm input")
    return x / norm


def logits(model: HeadModel, x: np.ndarray) -> np.ndarray:
    """Class scores for one input.

    Biased: centroids @ x + bias. Prior-free: cosine of the normalized input
    with each (normalized) centroid row.
    """
    if model.variant == VARIANT_PRIOR_FREE:
        return _normalize_rows(model.centroids) @ _normalize_input(x, model.dimension)
    x = np.asarray(x, dtype=np.float64).ravel()
    if len(x) != model.dimension:
        raise DimensionMismatchError(
            f"input has dimension {len(x)}, model uses {model.dimension}"
        )
    return model.centroids @ x + model.bias


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict(model: HeadModel, x: np.ndarray) -> tuple[str, float]:
    """Rank-1 label and its score; ties go to the lowest class index.

    Biased models report the winner's softmax probability. Prior-free models
    report (cosine + 1) / 2 so the score lives on the match-score axis and
    one threshold mechanism serves classification and re-identification.
    """
    z = logits(model, x)
    k = int(np.argmax(z))
    if model.variant == VARIANT_PRIOR_FREE:
        score = (min(1.0, max(-1.0, float(z[k]))) + 1.0) / 2.0
    else:
        score = float(_softmax(z)[k])
    return model.class_labels[k], score


def predict_batch(model: HeadModel, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized rank-1 prediction: (class indices, scores) per row."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.shape[1] != model.dimension:
        raise DimensionMismatchError(
            f"inputs have dimension {x.shape[1]}, model uses {model.dimension}"
        )
    if model.variant == VARIANT_PRIOR_FREE:
        z = _normalize_rows(np.asarray(x)) @ _normalize_rows(model.centroids).T
        winners = np.argmax(z, axis=1)
        cos = np.clip(z[np.arange(len(z)), winners], -1.0, 1.0)
        scores = (cos + 1.0) / 2.0
    else:
        z = x @ model.centroids.T + model.bias
        winners = np.argmax(z, axis=1)
        scores = _softmax(z)[np.arange(len(z)), winners]
    return winners, scores


# ---------------------------------------------------------------------------
# Training


def _loss_and_grads(
    centroids: np.ndarray,
    bias: np.ndarray | None,
    x: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray | None]:
    """Mean softmax cross-entropy and analytic gradients for one batch."""
    z = x @ centroids.T
    if bias is not None:
        z = z + bias
    zmax = z.max(axis=1, keepdims=True)
    logsumexp = zmax.ravel() + np.log(np.exp(z - zmax).sum(axis=1))
    n = len(x)
    loss = float(np.mean(logsumexp - z[np.arange(n), y]))
    loss += 0.5 * l2 * float(np.sum(centroids * centroids))
    p = _softmax(z)
    p[np.arange(n), y] -= 1.0
    p /= n
    grad_w = p.T @ x + l2 * centroids
    grad_b = p.sum(axis=0) if bias is not None else None
    return loss, grad_w, grad_b


def _training_inputs(model_variant: str, vectors: np.ndarray) -> np.ndarray:
    x = np.asarray(vectors, dtype=np.float64)
    if model_variant == VARIANT_PRIOR_FREE:
        return _normalize_rows(x)
    return x


def train_head(
    gallery: Gallery,
    variant: str,
    cfg: TrainConfig,
    init: HeadModel | None = None,
    class_labels: list[str] | None = None,
) -> HeadModel:
    """Train a head on a labeled gallery by mini-batch gradient descent.

    Classes default to the sorted distinct labels of the gallery; passing
    `class_labels` pins an explicit label space, and a class without samples
    is a hard error rather than a silent drop. A warm-start `init` model
    contributes centroid rows for textually matching labels. Deterministic
    for a fixed seed: the same rng drives initialization and the per-epoch
    shuffle sequence.
    """
    seen_labels = sorted(set(gallery.labels()))
    labels = class_labels if class_labels is not None else seen_labels
    if len(labels) < 2:
        raise SingleClassError(f"training needs >= 2 classes, got {len(labels)}")
    index_of = {label: i for i, label in enumerate(labels)}
    missing = [l for l in seen_labels if l not in index_of]
    if missing:
        raise ValueError(f"gallery labels not in class_labels: {missing[:5]}")
    counts = np.zeros(len(labels), dtype=int)
    y = np.empty(len(gallery), dtype=int)
    for i, rec in enumerate(gallery.records):
        y[i] = index_of[rec.label()]
        counts[y[i]] += 1
    empty = [labels[i] for i in np.nonzero(counts == 0)[0]]
    if empty:
        raise EmptyClassError(f"classes without samples: {empty[:5]}")

    dim = gallery.dimension
    rng = np.random.default_rng(cfg.seed)
    if init is not None:
        start = reinit_classification_layer(init, labels, seed=cfg.seed)
        start = _coerce_variant(start, variant)
        centroids = start.centroids.copy()
        bias = None if start.bias is None else start.bias.copy()
    else:
        centroids = rng.normal(0.0, _INIT_STD, size=(len(labels), dim))
        bias = np.zeros(len(labels)) if variant == VARIANT_BIASED else None
    if variant == VARIANT_PRIOR_FREE:
        centroids = _normalize_rows(centroids)

    x = _training_inputs(variant, gallery.vectors())
    for _ in range(cfg.epochs):
        perm = rng.permutation(len(x))
        for lo in range(0, len(x), cfg.batch_size):
            batch = perm[lo : lo + cfg.batch_size]
            _, grad_w, grad_b = _loss_and_grads(centroids, bias, x[batch], y[batch], cfg.l2)
            centroids -= cfg.learning_rate * grad_w
            if bias is not None:
                bias -= cfg.learning_rate * grad_b
            if variant == VARIANT_PRIOR_FREE:
                centroids = _normalize_rows(centroids)
        if variant == VARIANT_PRIOR_FREE:
            norms = np.linalg.norm(centroids, axis=1)
            assert np.all(np.abs(norms - 1.0) <= _UNIT_NORM_TOL)

    return HeadModel(
        class_labels=list(labels), centroids=centroids, bias=bias, variant=variant, seed=cfg.seed
    )


def _coerce_variant(model: HeadModel, variant: str) -> HeadModel:
    if model.variant == variant:
        return model
    if variant == VARIANT_PRIOR_FREE:
        return HeadModel(
            class_labels=model.class_labels,
            centroids=_normalize_rows(model.centroids),
            bias=None,
            variant=variant,
            seed=model.seed,
        )
    return HeadModel(
        class_labels=model.class_labels,
        centroids=model.centroids,
        bias=np.zeros(model.num_classes),
        variant=variant,
        seed=model.seed,
    )


def reinit_classification_layer(
    old: HeadModel, new_labels: list[str], seed: int = 0
) -> HeadModel:
    """New classification layer for `new_labels`, warm-started from `old`.

    Rows for labels the old model already knows are copied verbatim; the rest
    get a fresh small-variance random init (unit-normalized for prior-free).
    The fresh rows are drawn before copying so the draw does not depend on
    which labels overlap.
    """
    if not new_labels:
        raise ValueError("new_labels must be non-empty")
    rng = np.random.default_rng(seed)
    centroids = rng.normal(0.0, _INIT_STD, size=(len(new_labels), old.dimension))
    if old.variant == VARIANT_PRIOR_FREE:
        centroids = _normalize_rows(centroids)
    bias = np.zeros(len(new_labels)) if old.variant == VARIANT_BIASED else None
    old_index = {label: i for i, label in enumerate(old.class_labels)}
    for i, label in enumerate(new_labels):
        j = old_index.get(label)
        if j is not None:
            centroids[i] = old.centroids[j]
            if bias is not None and old.bias is not None:
                bias[i] = old.bias[j]
    return HeadModel(
        class_labels=list(new_labels),
        centroids=centroids,
        bias=bias,
        variant=old.variant,
        seed=seed,
    )


def gradient_check(
    model: HeadModel,
    vectors: np.ndarray,
    labels: np.ndarray,
    l2: float = 0.0,
    h: float = 1e-5,
) -> float:
    """Max relative error of analytic vs central finite-difference gradients.

    The step is scaled per entry (h * max(1, |w|)). For prior-free models the
    comparison is of the projected gradient, the component tangent to the
    unit sphere, since training never moves along a row's radial direction.
    Relative error is floored at parameter scale (1e-4) so negligible
    components do not dominate.
    """
    x = _training_inputs(model.variant, np.asarray(vectors, dtype=np.float64))
    y = np.asarray(labels, dtype=int)
    w = model.centroids.copy()
    b = None if model.bias is None else model.bias.copy()
    _, grad_w, grad_b = _loss_and_grads(w, b, x, y, l2)

    def loss_at(wp: np.ndarray, bp: np.ndarray | None) -> float:
        return _loss_and_grads(wp, bp, x, y, l2)[0]

    fd_w = np.zeros_like(w)
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            step = h * max(1.0, abs(w[i, j]))
            wp = w.copy()
            wp[i, j] += step
            wm = w.copy()
            wm[i, j] -= step
            fd_w[i, j] = (loss_at(wp, b) - loss_at(wm, b)) / (2 * step)

    if model.variant == VARIANT_PRIOR_FREE:
        grad_w = _tangent(grad_w, w)
        fd_w = _tangent(fd_w, w)

    worst = _max_rel_error(grad_w, fd_w)
    if b is not None:
        fd_b = np.zeros_like(b)
        for i in range(len(b)):
            step = h * max(1.0, abs(b[i]))
            bp = b.copy()
            bp[i] += step
            bm = b.copy()
            bm[i] -= step
            fd_b[i] = (loss_at(w, bp) - loss_at(w, bm)) / (2 * step)
        worst = max(worst, _max_rel_error(grad_b, fd_b))
    return worst


def _tangent(grad: np.ndarray, w: np.ndarray) -> np.ndarray:
    unit = _normalize_rows(w)
    radial = np.sum(grad * unit, axis=1, keepdims=True)
    return grad - radial * unit


def _max_rel_error(a: np.ndarray, f: np.ndarray) -> float:
    scale = np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-4)
    return float(np.max(np.abs(a - f) / scale))


# ---------------------------------------------------------------------------
# Model file: magic "EHED", u32 version, u32 header length, JSON header,
# then C*D little-endian f32 centroids and, for biased models, C f32 bias.


def save_head(model: HeadModel, path: str | Path) -> None:
    header = json.dumps(
        {
            "labels": model.class_labels,
            "dim": model.dimension,
            "classes": model.num_classes,
            "variant": model.variant,
            "seed": model.seed,
        },
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    parts = [
        HEAD_MAGIC,
        struct.pack("<I", HEAD_VERSION),
        struct.pack("<I", len(header)),
        header,
        model.centroids.astype("<f4").tobytes(),
    ]
    if model.bias is not None:
        parts.append(model.bias.astype("<f4").tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_head(path: str | Path) -> HeadModel:
    data = Path(path).read_bytes()
    if data[:4] != HEAD_MAGIC:
        raise GalleryParseError("bad magic, not a head model file")
    version = struct.unpack("<I", data[4:8])[0]
    if version != HEAD_VERSION:
        raise GalleryParseError(f"unsupported head model version {version}")
    header_len = struct.unpack("<I", data[8:12])[0]
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise GalleryParseError("corrupt head model header") from None
    c, d = header["classes"], header["dim"]
    pos = 12 + header_len
    need = 4 * c * d
    if len(data) < pos + need:
        raise GalleryParseError(f"truncated centroid block at byte {pos}")
    centroids = np.frombuffer(data[pos : pos + need], dtype="<f4").reshape(c, d)
    pos += need
    bias = None
    if header["variant"] == VARIANT_BIASED:
        if len(data) < pos + 4 * c:
            raise GalleryParseError(f"truncated bias block at byte {pos}")
        bias = np.frombuffer(data[pos : pos + 4 * c], dtype="<f4").astype(np.float64)
        pos += 4 * c
    if pos != len(data):
        raise GalleryParseError(f"trailing bytes at offset {pos}")
    return HeadModel(
        class_labels=list(header["labels"]),
        centroids=centroids.astype(np.float64),
        bias=bias,
        variant=header["variant"],
        seed=int(header.get("seed", 0)),
    )
