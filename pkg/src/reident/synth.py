"""Seeded synthetic galleries for demos and end-to-end verification.

Every generator models the same situation: a make/model class is really a
mixture of a few well-separated appearance modes (released years, camera
views), and only the coarse label is known. Modes are mutually orthogonal
directions; samples are a mode direction plus isotropic noise, so match
scores concentrate near 1 within a mode and near 0.5 across modes.
"""

from __future__ import annotations

import numpy as np

from .gallery import ColorAttr, EmbeddingRecord, Gallery

DEMO_DIM = 32

_COLORS = ["white", "black", "silver", "red", "blue"]


def orthonormal_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """`count` mutually orthogonal unit directions in `dim` dimensions."""
    if count > dim:
        raise ValueError("cannot fit more orthogonal directions than dimensions")
    q, _ = np.linalg.qr(rng.normal(size=(dim, count)))
    return q.T


def bundle(
    rng: np.random.Generator, direction: np.ndarray, sigma: float, count: int
) -> np.ndarray:
    """Noisy samples around one mode direction, float32."""
    pts = direction[None, :] + sigma * rng.normal(size=(count, len(direction)))
    return pts.astype(np.float32)


def _records(
    vectors: np.ndarray,
    make: str,
    model: str,
    id_prefix: str,
    quality: float | None = None,
) -> list[EmbeddingRecord]:
    return [
        EmbeddingRecord(
            id=f"{id_prefix}-{i:04d}",
            make=make,
            model=model,
            vector=v,
            quality=quality,
        )
        for i, v in enumerate(vectors)
    ]


def seven_bundle_gallery(
    seed: int = 0, per_bundle: int = 25, dim: int = DEMO_DIM, sigma: float = 0.08
) -> Gallery:
    """One make/model hiding seven tight, well-separated bundles."""
    rng = np.random.default_rng(seed)
    dirs = orthonormal_directions(rng, 7, dim)
    records = []
    for b in range(7):
        vecs = bundle(rng, dirs[b], sigma, per_bundle)
        records.extend(_records(vecs, "make0", "model0", f"b{b}"))
    return Gallery.from_records(records)


def two_mode_gallery(
    seed: int = 0,
    models: int = 6,
    per_mode: int = 25,
    dim: int = DEMO_DIM,
    sigma: float = 0.08,
) -> Gallery:
    """Several models, each split across two modes the labels do not see."""
    rng = np.random.default_rng(seed)
    dirs = orthonormal_directions(rng, 2 * models, dim)
    records = []
    for m in range(models):
        for mode in range(2):
            vecs = bundle(rng, dirs[2 * m + mode], sigma, per_mode)
            records.extend(_records(vecs, "make0", f"model{m}", f"m{m}x{mode}"))
    return Gallery.from_records(records)


def imbalanced_pair(
    seed: int = 0,
    dim: int = 8,
    majority: int = 180,
    minority: int = 20,
    test_per_class: int = 100,
    sigma: float = 0.6,
    mode_cos: float = -0.5,
) -> tuple[Gallery, Gallery]:
    """A 0.9/0.1-prior training set and a balanced test set.

    Both classes have identical conditional noise; only the training priors
    differ, so any skew a head shows on the balanced test set was learned
    from the class frequencies. The class directions are obtuse and the
    noise large, so the classes overlap through noise rather than through
    direction.
    """
    rng = np.random.default_rng(seed)
    base = orthonormal_directions(rng, 2, dim)
    d0 = base[0]
    d1 = mode_cos * base[0] + np.sqrt(1.0 - mode_cos**2) * base[1]
    train = _records(bundle(rng, d0, sigma, majority), "make0", "model0", "tr0")
    train += _records(bundle(rng, d1, sigma, minority), "make0", "model1", "tr1")
    test = _records(bundle(rng, d0, sigma, test_per_class), "make0", "model0", "te0")
    test += _records(bundle(rng, d1, sigma, test_per_class), "make0", "model1", "te1")
    return Gallery.from_records(train), Gallery.from_records(test)


def confusable_multi_mode_split(
    seed: int = 0,
    dim: int = DEMO_DIM,
    per_mode_train: int = 25,
    per_mode_test: int = 10,
    sigma: float = 0.1,
    confuser_cos: float = 0.8,
) -> tuple[Gallery, Gallery]:
    """Train/test galleries where single-centroid training must fail.

    Two models own three modes each; two single-mode models sit close
    (cosine `confuser_cos`) to one mode of a multi-mode model. A head trained
    on the raw labels parks one centroid in the middle of each mode triple
    and loses that contested mode to the nearby single-mode class; refined
    labels give every mode its own centroid.
    """
    rng = np.random.default_rng(seed)
    base = orthonormal_directions(rng, 8, dim)
    multi = {"model0": base[0:3], "model2": base[3:6]}
    confusers = {
        "model1": confuser_cos * base[0] + np.sqrt(1 - confuser_cos**2) * base[6],
        "model3": confuser_cos * base[3] + np.sqrt(1 - confuser_cos**2) * base[7],
    }
    train: list[EmbeddingRecord] = []
    test: list[EmbeddingRecord] = []
    for model, dirs in multi.items():
        for mode, d in enumerate(dirs):
            train += _records(
                bundle(rng, d, sigma, per_mode_train), "make0", model, f"tr-{model}-{mode}"
            )
            test += _records(
                bundle(rng, d, sigma, per_mode_test), "make0", model, f"te-{model}-{mode}"
            )
    for model, d in confusers.items():
        train += _records(bundle(rng, d, sigma, per_mode_train), "make0", model, f"tr-{model}")
        test += _records(bundle(rng, d, sigma, per_mode_test), "make0", model, f"te-{model}")
    return Gallery.from_records(train), Gallery.from_records(test)


def noisy_track_galleries(
    seed: int = 0,
    classes: int = 6,
    tracks_per_class: int = 6,
    dim: int = 16,
    train_per_class: int = 40,
    train_sigma: float = 0.1,
) -> tuple[Gallery, Gallery]:
    """A clean training gallery plus a video gallery of noisy tracks.

    Each track carries five detections whose noise grows as quality drops,
    so the best shot is also the most classifiable detection.
    """
    rng = np.random.default_rng(seed)
    dirs = orthonormal_directions(rng, classes, dim)
    train: list[EmbeddingRecord] = []
    for c in range(classes):
        train += _records(
            bundle(rng, dirs[c], train_sigma, train_per_class), "make0", f"model{c}", f"tr{c}"
        )
    qualities = [0.95, 0.75, 0.55, 0.35, 0.15]
    video: list[EmbeddingRecord] = []
    t = 0
    for c in range(classes):
        for _ in range(tracks_per_class):
            track_id = f"track{t:03d}"
            color = _COLORS[int(rng.integers(len(_COLORS)))]
            for frame, q in enumerate(qualities):
                sigma = 0.08 + 1.6 * (1.0 - q) ** 2
                vec = bundle(rng, dirs[c], sigma, 1)[0]
                video.append(
                    EmbeddingRecord(
                        id=f"v{t:03d}-{frame}",
                        make="make0",
                        model=f"model{c}",
                        vector=vec,
                        track_id=track_id,
                        frame=frame,
                        quality=q,
                        color=ColorAttr(name=color, score=float(rng.uniform(0.6, 0.99))),
                    )
                )
            t += 1
    return Gallery.from_records(train), Gallery.from_records(video)


# ---------------------------------------------------------------------------
# Demo dataset: everything the full pipeline needs, from one seed.

_DEMO_MAKES = {
    "falken": {"vista": 3, "gt": 1},
    "mistral": {"m3": 2},
    "oreion": {"axis": 2},
    "tarpan": {"rove": 1},
}


def demo_galleries(seed: int = 7, dim: int = DEMO_DIM) -> dict[str, Gallery]:
    """Raw, held-out, and video galleries for the end-to-end demo.

    The raw gallery carries exact duplicates, near duplicates, and
    low-quality junk for the ingestion stage; several models hide multiple
    modes for the clustering stage; the video gallery has tracks with
    quality-graded noise and colors for best shots and the search index.
    """
    rng = np.random.default_rng(seed)
    total_modes = sum(n for models in _DEMO_MAKES.values() for n in models.values())
    dirs = orthonormal_directions(rng, total_modes + 1, dim)
    mode_dirs: dict[tuple[str, str, int], np.ndarray] = {}
    mode_index = 0
    for make, models in _DEMO_MAKES.items():
        for model, mode_count in models.items():
            for mode in range(mode_count):
                mode_dirs[(make, model, mode)] = dirs[mode_index]
                mode_index += 1
    # The single-mode gt sits close to vista's first mode: a head trained on
    # raw labels parks vista's lone centroid mid-triple and loses that mode
    # to gt, which refined labels recover.
    mode_dirs[("falken", "gt", 0)] = (
        0.8 * mode_dirs[("falken", "vista", 0)] + 0.6 * dirs[total_modes]
    )

    raw: list[EmbeddingRecord] = []
    held: list[EmbeddingRecord] = []
    video: list[EmbeddingRecord] = []
    track = 0
    for make, models in _DEMO_MAKES.items():
        for model, mode_count in models.items():
            for mode in range(mode_count):
                d = mode_dirs[(make, model, mode)]
                prefix = f"{make}-{model}-{mode}"
                train_vecs = bundle(rng, d, 0.09, 30)
                for i, v in enumerate(train_vecs):
                    raw.append(
                        EmbeddingRecord(
                            id=f"{prefix}-r{i:03d}",
                            make=make,
                            model=model,
                            vector=v,
                            quality=float(rng.uniform(0.5, 1.0)),
                        )
                    )
                held_vecs = bundle(rng, d, 0.09, 8)
                held += _records(held_vecs, make, model, f"{prefix}-h")
                # Two video tracks per mode, five detections each.
                for _ in range(2):
                    color = _COLORS[int(rng.integers(len(_COLORS)))]
                    track_id = f"track{track:03d}"
                    track += 1
                    for frame, q in enumerate([0.9, 0.7, 0.5, 0.3, 0.15]):
                        sigma = 0.08 + 1.4 * (1.0 - q) ** 2
                        video.append(
                            EmbeddingRecord(
                                id=f"{track_id}-f{frame}",
                                make=make,
                                model=model,
                                vector=bundle(rng, d, sigma, 1)[0],
                                track_id=track_id,
                                frame=frame,
                                quality=q,
                                color=ColorAttr(
                                    name=color, score=float(rng.uniform(0.6, 0.99))
                                ),
                            )
                        )

    # Junk for the ingestion stage: exact copies, near copies, bad detections.
    originals = [raw[i] for i in rng.choice(len(raw), size=6, replace=False)]
    for i, src in enumerate(originals[:3]):
        raw.append(
            EmbeddingRecord(
                id=f"dup-exact-{i}",
                make=src.make,
                model=src.model,
                vector=src.vector.copy(),
                quality=src.quality,
            )
        )
    for i, src in enumerate(originals[3:]):
        jitter = src.vector + 1e-3 * rng.normal(size=dim).astype(np.float32)
        raw.append(
            EmbeddingRecord(
                id=f"dup-near-{i}",
                make=src.make,
                model=src.model,
                vector=jitter.astype(np.float32),
                quality=src.quality,
            )
        )
    for i in range(4):
        raw.append(
            EmbeddingRecord(
                id=f"junk-{i}",
                make="falken",
                model="vista",
                vector=rng.normal(size=dim).astype(np.float32),
                quality=float(rng.uniform(0.02, 0.2)),
            )
        )
    return {
        "raw": Gallery.from_records(raw),
        "held_out": Gallery.from_records(held),
        "video": Gallery.from_records(video),
    }
