import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from fastapi.testclient import TestClient

from reident.errors import BadQueryError, MissingTrackIdError, UnknownTrackError
from reident.gallery import ColorAttr, EmbeddingRecord, Gallery
from reident.head import VARIANT_PRIOR_FREE, HeadModel
from reident.reid_index import (
    MemberRecord,
    ReidIndex,
    SearchQuery,
    TrackEntry,
    build_index,
    load_index,
    save_index,
    search,
    track_detail,
)
from reident.service import IndexHolder, create_app

HEAD = HeadModel(
    class_labels=["falken/vista#2", "falken/gt", "mistral/m3"],
    centroids=np.eye(3),
    bias=None,
    variant=VARIANT_PRIOR_FREE,
)


def _rec(id, vec, track_id, frame, quality, color=None, make="falken", model="vista"):
    return EmbeddingRecord(
        id=id,
        make=make,
        model=model,
        vector=np.asarray(vec, dtype=np.float32),
        track_id=track_id,
        frame=frame,
        quality=quality,
        color=color,
    )


def _track_gallery():
    return Gallery.from_records(
        [
            _rec("a1", [1.0, 0.0, 0.0], "alpha", 2, 0.5),
            _rec("a2", [1.0, 0.0, 0.0], "alpha", 1, 0.9, color=ColorAttr("red", 0.88)),
            _rec("a3", [1.0, 0.0, 0.0], "alpha", None, 0.2),
            _rec("b1", [0.6, 0.8, 0.0], "bravo", 0, 0.7, model="gt"),
            _rec("c1", [0.0, 0.0, 1.0], "charlie", 0, 0.8, color=ColorAttr("blue", 0.7), make="mistral", model="m3"),
            _rec("d1", [0.8, 0.6, 0.0], "delta", 0, 0.6),
        ]
    )


@pytest.fixture()
def index():
    return build_index(_track_gallery(), HEAD)


# ---------------------------------------------------------------------------
# build_index


def test_index_classifies_each_track_once(index):
    assert [e.track_id for e in index.tracks] == ["alpha", "bravo", "charlie", "delta"]
    assert index.gallery_count == 6
    assert index.track_count == 4
    assert index.dimension == 3
    assert index.head_variant == VARIANT_PRIOR_FREE


def test_index_entry_uses_best_shot_and_base_model(index):
    alpha = index.by_track["alpha"]
    assert alpha.record_id == "a2"  # highest quality detection
    assert alpha.quality == 0.9
    assert alpha.predicted_make == "falken"
    assert alpha.predicted_model == "vista"  # #2 suffix stripped
    assert alpha.shape_score == pytest.approx(1.0)
    assert (alpha.color_name, alpha.color_score) == ("red", 0.88)
    bravo = index.by_track["bravo"]
    assert (bravo.predicted_make, bravo.predicted_model) == ("falken", "gt")
    assert bravo.shape_score == pytest.approx(0.9)
    assert bravo.color_name is None


def test_index_members_sorted_by_frame_missing_last(index):
    assert [m.id for m in index.by_track["alpha"].members] == ["a2", "a1", "a3"]
    assert index.by_track["alpha"].members[2].frame is None


def test_index_requires_track_ids():
    g = Gallery.from_records([_rec("x", [1.0, 0.0, 0.0], None, 0, 0.5)])
    with pytest.raises(MissingTrackIdError):
        build_index(g, HEAD)


def test_rebuild_is_byte_identical(tmp_path, index):
    again = build_index(_track_gallery(), HEAD)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_index(index, str(p1))
    save_index(again, str(p2))
    assert p1.read_bytes() == p2.read_bytes()


def test_save_load_round_trip(tmp_path, index):
    path = tmp_path / "index.json"
    save_index(index, str(path))
    loaded = load_index(str(path))
    assert loaded == index
    assert [t.name for t in tmp_path.iterdir()] == ["index.json"]  # no temp litter
    doc = json.loads(path.read_text())
    assert doc["format"] == "reident-index"
    assert doc["version"] == 1
    assert doc["trackCount"] == 4


def test_load_rejects_foreign_documents(tmp_path):
    path = tmp_path / "other.json"
    path.write_text('{"format": "something-else", "version": 1}')
    with pytest.raises(ValueError, match="reident-index"):
        load_index(str(path))


# ---------------------------------------------------------------------------
# search


def reference_search(index, query):
    hits = [
        e
        for e in index.tracks
        if (query.make is None or e.predicted_make.lower() == query.make.lower())
        and (query.model is None or e.predicted_model.lower() == query.model.lower())
        and (query.color is None or (e.color_name or "").lower() == query.color.lower())
        and e.shape_score >= query.min_score
    ]
    hits.sort(key=lambda e: (-e.shape_score, e.track_id))
    return hits[: query.limit]


def _random_index(seed, n=40):
    rng = np.random.default_rng(seed)
    makes = ["falken", "mistral", "oreion"]
    models = ["vista", "gt", "m3"]
    colors = ["red", "blue", None]
    entries = []
    for i in range(n):
        color = colors[int(rng.integers(3))]
        entries.append(
            TrackEntry(
                track_id=f"t{i:03d}",
                record_id=f"r{i:03d}",
                predicted_make=makes[int(rng.integers(3))],
                predicted_model=models[int(rng.integers(3))],
                shape_score=float(rng.integers(0, 5)) / 4.0,  # coarse grid forces ties
                quality=0.5,
                color_name=color,
                color_score=0.9 if color else None,
                members=(MemberRecord(id=f"r{i:03d}", frame=0, quality=0.5),),
            )
        )
    entries.sort(key=lambda e: e.track_id)
    return ReidIndex(
        dimension=3,
        head_variant=VARIANT_PRIOR_FREE,
        gallery_count=n,
        tracks=tuple(entries),
        by_track={e.track_id: e for e in entries},
    )


@pytest.mark.parametrize("seed", range(5))
def test_search_matches_filter_reference(seed):
    idx = _random_index(seed)
    rng = np.random.default_rng(seed + 100)
    for _ in range(30):
        query = SearchQuery(
            make=rng.choice(["falken", "mistral", None]),
            model=rng.choice(["vista", "gt", None]),
            color=rng.choice(["red", "blue", None]),
            min_score=float(rng.choice([0.0, 0.3, 0.6])),
            limit=int(rng.choice([1, 3, 100])),
        )
        if query.make is None and query.model is None and query.color is None:
            continue
        assert search(idx, query) == reference_search(idx, query)


def test_search_is_case_insensitive_and_sorted(index):
    hits = search(index, SearchQuery(make="FALKEN"))
    assert [h.track_id for h in hits] == ["alpha", "bravo", "delta"]  # 1.0, then 0.9 ties by id
    assert search(index, SearchQuery(color="Red")) == search(index, SearchQuery(color="red"))


def test_search_min_score_and_limit(index):
    assert [h.track_id for h in search(index, SearchQuery(make="falken", min_score=0.95))] == [
        "alpha"
    ]
    assert [h.track_id for h in search(index, SearchQuery(make="falken", limit=2))] == [
        "alpha",
        "bravo",
    ]


def test_search_raising_min_score_never_adds_hits():
    idx = _random_index(11)
    previous = None
    for t in (0.0, 0.25, 0.5, 0.75, 1.0):
        ids = {h.track_id for h in search(idx, SearchQuery(make="falken", min_score=t, limit=1000))}
        if previous is not None:
            assert ids <= previous
        previous = ids


def test_search_validation(index):
    with pytest.raises(BadQueryError, match="make/model/color"):
        search(index, SearchQuery())
    with pytest.raises(BadQueryError, match="min_score"):
        search(index, SearchQuery(make="falken", min_score=1.5))
    with pytest.raises(BadQueryError, match="limit"):
        search(index, SearchQuery(make="falken", limit=0))


def test_search_misses_return_empty(index):
    assert search(index, SearchQuery(make="velocette")) == []


def test_track_detail_unknown_id(index):
    assert track_detail(index, "alpha").record_id == "a2"
    with pytest.raises(UnknownTrackError, match="ghost"):
        track_detail(index, "ghost")


# ---------------------------------------------------------------------------
# HTTP API


@pytest.fixture()
def client(tmp_path, index):
    path = tmp_path / "index.json"
    save_index(index, str(path))
    holder = IndexHolder(str(path))
    app = create_app(holder)
    with TestClient(app) as c:
        c.holder = holder
        c.index_path = str(path)
        yield c


def test_api_search_returns_summaries_in_rank_order(client):
    r = client.get("/api/search", params={"make": "falken"})
    assert r.status_code == 200
    entries = r.json()["entries"]
    assert [e["trackId"] for e in entries] == ["alpha", "bravo", "delta"]
    assert entries[0] == {
        "trackId": "alpha",
        "recordId": "a2",
        "predictedMake": "falken",
        "predictedModel": "vista",
        "shapeScore": 1.0,
        "colorName": "red",
        "colorScore": 0.88,
    }
    assert "colorName" not in entries[1]


def test_api_search_query_parsing_failures(client):
    for params in (
        {},  # no filters
        {"make": "falken", "min_score": "abc"},
        {"make": "falken", "min_score": "1.5"},
        {"make": "falken", "limit": "0"},
        {"make": "falken", "limit": "2.5"},
    ):
        r = client.get("/api/search", params=params)
        assert r.status_code == 400
        body = r.json()
        assert body["code"] == "BadQuery"
        assert body["message"]


def test_api_search_identical_queries_identical_bytes(client):
    a = client.get("/api/search", params={"make": "falken"})
    b = client.get("/api/search", params={"make": "falken"})
    assert a.content == b.content


def test_api_track_detail_and_404(client):
    r = client.get("/api/track/alpha")
    assert r.status_code == 200
    body = r.json()
    assert body["trackId"] == "alpha"
    assert body["bestShotId"] == "a2"
    assert [m["id"] for m in body["members"]] == ["a2", "a1", "a3"]
    assert body["members"][2]["frame"] is None
    assert body["bestShotId"] in {m["id"] for m in body["members"]}

    r = client.get("/api/track/ghost")
    assert r.status_code == 404
    assert r.json()["code"] == "UnknownTrack"


def test_api_meta(client):
    r = client.get("/api/meta")
    assert r.json() == {
        "galleryCount": 6,
        "trackCount": 4,
        "headVariant": "prior-free",
        "dimension": 3,
    }


def test_api_default_min_score_applies_when_param_absent(tmp_path, index):
    path = tmp_path / "index.json"
    save_index(index, str(path))
    app = create_app(IndexHolder(str(path)), default_min_score=0.95)
    with TestClient(app) as c:
        implied = c.get("/api/search", params={"make": "falken"}).json()["entries"]
        assert [e["trackId"] for e in implied] == ["alpha"]
        explicit = c.get("/api/search", params={"make": "falken", "min_score": "0"}).json()[
            "entries"
        ]
        assert [e["trackId"] for e in explicit] == ["alpha", "bravo", "delta"]


def test_api_reload_swaps_snapshot(client):
    smaller = build_index(
        Gallery.from_records(
            [
                _rec("a1", [1.0, 0.0, 0.0], "alpha", 1, 0.9),
                _rec("b1", [0.6, 0.8, 0.0], "bravo", 0, 0.7, model="gt"),
            ]
        ),
        HEAD,
    )
    save_index(smaller, client.index_path)
    assert client.get("/api/meta").json()["trackCount"] == 4  # old snapshot still live
    r = client.post("/api/reload")
    assert r.status_code == 200
    assert r.json() == {"trackCount": 2, "galleryCount": 2}
    assert client.get("/api/meta").json()["trackCount"] == 2


def test_concurrent_queries_see_whole_snapshots(tmp_path, index):
    path = tmp_path / "index.json"
    save_index(index, str(path))
    holder = IndexHolder(str(path))
    app = create_app(holder)

    smaller = build_index(
        Gallery.from_records([_rec("a1", [1.0, 0.0, 0.0], "alpha", 1, 0.9)]), HEAD
    )

    with TestClient(app) as probe:
        body_full = probe.get("/api/search", params={"make": "falken"}).content
        save_index(smaller, str(path))
        holder.reload()
        body_small = probe.get("/api/search", params={"make": "falken"}).content
    save_index(index, str(path))
    holder.reload()

    def hammer(_):
        with TestClient(app) as c:
            seen = []
            for _ in range(25):
                seen.append(c.get("/api/search", params={"make": "falken"}).content)
            return seen

    with ThreadPoolExecutor(max_workers=4) as pool:
        futures = [pool.submit(hammer, i) for i in range(3)]
        for flip in range(10):
            save_index(smaller if flip % 2 == 0 else index, str(path))
            holder.reload()
        results = [f.result() for f in futures]

    allowed = {body_full, body_small}
    for batch in results:
        for body in batch:
            assert body in allowed
