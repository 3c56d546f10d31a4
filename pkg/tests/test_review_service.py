import json

import pytest
from fastapi.testclient import TestClient

from faceveil.errors import CorruptEventLog
from faceveil.review_service import ReviewStore, StudyRoster, create_app

VIDEOS = ["v1", "v2", "v3"]
RATERS = ["r1", "r2", "r3"]


def _roster(tmp_path, with_files=False, order_seed=0):
    videos = []
    for vid in VIDEOS:
        entry = {"video_id": vid}
        if with_files:
            p = tmp_path / f"{vid}.bin"
            p.write_bytes(bytes(range(100)))
            entry["syn_path"] = str(p)
        videos.append(entry)
    return StudyRoster(videos=videos, raters=RATERS, clinicians=RATERS,
                       required_raters=3, order_seed=order_seed)


@pytest.fixture()
def client(tmp_path):
    store = ReviewStore(_roster(tmp_path, with_files=True),
                        tmp_path / "events.jsonl")
    return TestClient(create_app(store))


def _rate_all(client, option="A"):
    for rater in RATERS:
        for vid in VIDEOS:
            r = client.post("/api/ratings", json={
                "rater_id": rater, "video_id": vid, "option": option})
            assert r.status_code == 200


class TestRatings:
    def test_submit_returns_score(self, client):
        r = client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": "v1", "option": "B"})
        assert r.status_code == 200
        assert r.json() == {"stored": True, "score": 2}

    def test_resubmission_replaces_not_duplicates(self, client):
        for option in ("C", "A"):
            client.post("/api/ratings", json={
                "rater_id": "r1", "video_id": "v1", "option": option})
        store = client.app.state.store
        assert store.ratings["v1"] == {"r1": "A"}

    def test_unknown_rater_404(self, client):
        r = client.post("/api/ratings", json={
            "rater_id": "ghost", "video_id": "v1", "option": "A"})
        assert r.status_code == 404
        assert r.json()["error"] == "UnknownRater"

    def test_unknown_video_404(self, client):
        r = client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": "nope", "option": "A"})
        assert r.status_code == 404

    def test_bad_option_400(self, client):
        r = client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": "v1", "option": "D"})
        assert r.status_code == 400


class TestJudgments:
    def test_only_gated_pairs_served(self, client):
        _rate_all(client, "A")
        client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": "v2", "option": "B"})
        gate = client.get("/api/gate").json()
        assert sorted(gate["selected"]) == ["v1", "v3"]
        task = client.get("/api/tasks/next",
                          params={"rater": "r1", "kind": "paired"}).json()
        assert task["pair_id"] in ("v1", "v3")

    def test_submit_judgment_with_placement(self, client):
        _rate_all(client)
        r = client.post("/api/judgments", json={
            "clinician_id": "r1", "pair_id": "v1", "answer": "yes",
            "placement": {"left": "real", "right": "syn"}})
        assert r.json() == {"stored": True, "score": 1}
        store = client.app.state.store
        assert store.judgments["v1"]["r1"]["placement"]["left"] == "real"

    def test_answer_case_insensitive(self, client):
        _rate_all(client)
        r = client.post("/api/judgments", json={
            "clinician_id": "r1", "pair_id": "v1", "answer": "No"})
        assert r.json()["score"] == 0

    def test_invalid_answer_400(self, client):
        _rate_all(client)
        r = client.post("/api/judgments", json={
            "clinician_id": "r1", "pair_id": "v1", "answer": "maybe"})
        assert r.status_code == 400


class TestTaskQueue:
    def test_idempotent_until_submission(self, client):
        params = {"rater": "r1", "kind": "realism"}
        first = client.get("/api/tasks/next", params=params).json()
        again = client.get("/api/tasks/next", params=params).json()
        assert first == again
        client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": first["video_id"], "option": "A"})
        moved = client.get("/api/tasks/next", params=params).json()
        assert moved["video_id"] != first["video_id"]

    def test_exhaustion_reports_done(self, client):
        for vid in VIDEOS:
            client.post("/api/ratings", json={
                "rater_id": "r1", "video_id": vid, "option": "A"})
        task = client.get("/api/tasks/next",
                          params={"rater": "r1", "kind": "realism"}).json()
        assert task == {"done": True, "completed": 3}

    def test_order_differs_between_raters(self, tmp_path):
        store = ReviewStore(_roster(tmp_path, order_seed=3),
                            tmp_path / "e.jsonl")
        orders = {r: store._rater_order(r, VIDEOS * 4) for r in RATERS}
        assert len({tuple(o) for o in orders.values()}) > 1

    def test_order_stable_across_instances(self, tmp_path):
        a = ReviewStore(_roster(tmp_path, order_seed=3), tmp_path / "a.jsonl")
        b = ReviewStore(_roster(tmp_path, order_seed=3), tmp_path / "b.jsonl")
        assert a._rater_order("r1", VIDEOS) == b._rater_order("r1", VIDEOS)

    def test_unknown_kind_400(self, client):
        r = client.get("/api/tasks/next",
                       params={"rater": "r1", "kind": "wat"})
        assert r.status_code == 400


class TestReports:
    def test_realism_report_complete_items_only(self, client):
        _rate_all(client, "A")
        client.post("/api/ratings", json={
            "rater_id": "r1", "video_id": "v1", "option": "B"})
        rep = client.get("/api/reports/realism").json()
        assert rep["n_items"] == 3
        assert rep["per_video"]["v1"] == {"A": 2, "B": 1, "C": 0}

    def test_realism_report_empty(self, client):
        rep = client.get("/api/reports/realism").json()
        assert rep["n_items"] == 0

    def test_paired_report_kappa_needs_two_raters(self, client):
        _rate_all(client)
        client.post("/api/judgments", json={
            "clinician_id": "r1", "pair_id": "v1", "answer": "yes"})
        rep = client.get("/api/reports/paired").json()
        assert rep["kappa"] is None
        client.post("/api/judgments", json={
            "clinician_id": "r2", "pair_id": "v1", "answer": "no"})
        rep = client.get("/api/reports/paired").json()
        assert rep["kappa"] is not None
        assert rep["mean_score"] == pytest.approx(0.5)


class TestDurability:
    def test_restart_replays_event_log(self, tmp_path):
        roster = _roster(tmp_path)
        log = tmp_path / "events.jsonl"
        store = ReviewStore(roster, log)
        store.submit_rating("r1", "v1", "A")
        store.submit_rating("r1", "v1", "B")
        store.submit_judgment("r1", "v1", "yes", {"left": "syn"})

        revived = ReviewStore(_roster(tmp_path), log)
        assert revived.ratings == {"v1": {"r1": "B"}}
        assert revived.judgments["v1"]["r1"]["answer"] == "yes"

    def test_corrupt_log_raises_with_location(self, tmp_path):
        log = tmp_path / "events.jsonl"
        log.write_text(json.dumps({"type": "rating", "rater_id": "r1",
                                   "video_id": "v1", "option": "A"})
                       + "\n{broken\n")
        with pytest.raises(CorruptEventLog) as exc:
            ReviewStore(_roster(tmp_path), log)
        assert ":2:" in str(exc.value)


class TestStreaming:
    def test_full_body_when_no_range(self, client):
        r = client.get("/api/videos/v1/stream")
        assert r.status_code == 200
        assert r.content == bytes(range(100))
        assert r.headers["accept-ranges"] == "bytes"

    def test_range_request_returns_206(self, client):
        r = client.get("/api/videos/v1/stream",
                       headers={"Range": "bytes=10-19"})
        assert r.status_code == 206
        assert r.content == bytes(range(10, 20))
        assert r.headers["content-range"] == "bytes 10-19/100"

    def test_open_ended_range(self, client):
        r = client.get("/api/videos/v1/stream",
                       headers={"Range": "bytes=90-"})
        assert r.status_code == 206
        assert r.content == bytes(range(90, 100))

    def test_invalid_range_416(self, client):
        r = client.get("/api/videos/v1/stream",
                       headers={"Range": "bytes=50-10"})
        assert r.status_code == 416

    def test_missing_file_404(self, tmp_path):
        store = ReviewStore(_roster(tmp_path, with_files=False),
                            tmp_path / "e.jsonl")
        client = TestClient(create_app(store))
        assert client.get("/api/videos/v1/stream").status_code == 404
