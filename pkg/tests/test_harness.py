import json
import threading

import pytest
from fastapi.testclient import TestClient

from percomp import pipeline as pl
from percomp.config import PipelineConfig
from percomp.harness.server import create_app
from percomp.harness.store import (
    AnnotationStore,
    ConflictError,
    NotInitializedError,
    PairSpec,
    UnknownPairError,
    build_pairs,
)
from percomp.preference import (
    BTTConfig,
    Dimension,
    Judgment,
    Outcome,
    fit_rewards,
    load_judgments_jsonl,
)

PAIRS = [
    PairSpec("pA", "s1", "s2", 8, 8),
    PairSpec("pB", "s1", "s3", 8, 8),
    PairSpec("pC", "s2", "s3", 8, 8),
]


def judge(pair, dim, who, outcome=Outcome.TIE, ts=0.0):
    spec = {p.pair_id: p for p in PAIRS}[pair]
    return Judgment(pair, spec.seq_a, spec.seq_b, dim, outcome, who, ts)


@pytest.fixture()
def store(tmp_path):
    s = AnnotationStore(tmp_path / "j.jsonl", PAIRS)
    yield s
    s.close()


class TestQueue:
    def test_three_distinct_tasks_then_done(self, store):
        seen = []
        for _ in range(3):
            task = store.next_pair(Dimension.VQ, "ann")
            seen.append(task.pair_id)
            store.submit_judgment(judge(task.pair_id, Dimension.VQ, "ann"))
        assert sorted(seen) == ["pA", "pB", "pC"]
        assert store.next_pair(Dimension.VQ, "ann") is None

    def test_done_per_dimension(self, store):
        for pair in ("pA", "pB", "pC"):
            store.submit_judgment(judge(pair, Dimension.VQ, "ann"))
        assert store.next_pair(Dimension.VQ, "ann") is None
        assert store.next_pair(Dimension.MQ, "ann") is not None

    def test_independent_annotators(self, store):
        t1 = store.next_pair(Dimension.CA, "ann1")
        store.submit_judgment(judge(t1.pair_id, Dimension.CA, "ann1"))
        t2 = store.next_pair(Dimension.CA, "ann2")
        assert t2 is not None  # same pair may go to another annotator

    def test_least_judged_first(self, store):
        store.submit_judgment(judge("pA", Dimension.VQ, "ann1"))
        task = store.next_pair(Dimension.VQ, "ann2")
        assert task.pair_id == "pB"  # pA already has one judgment

    def test_pending_dimensions(self, store):
        store.submit_judgment(judge("pA", Dimension.VQ, "ann"))
        store.submit_judgment(judge("pA", Dimension.MQ, "ann"))
        task = store.next_pair(Dimension.CA, "ann")
        assert task.pair_id == "pA" and task.dimensions_pending == ["CA"]

    def test_requires_pairs(self, tmp_path):
        with pytest.raises(NotInitializedError):
            AnnotationStore(tmp_path / "x.jsonl", [])


class TestSubmit:
    def test_first_submission_appends_line(self, store):
        store.submit_judgment(judge("pA", Dimension.VQ, "ann"))
        lines = store.path.read_text().strip().split("\n")
        assert len(lines) == 1
        assert json.loads(lines[0])["pair_id"] == "pA"

    def test_duplicate_conflict_store_unchanged(self, store):
        j = judge("pB", Dimension.CA, "ann")
        store.submit_judgment(j)
        before = store.path.read_bytes()
        with pytest.raises(ConflictError):
            store.submit_judgment(j)
        assert store.path.read_bytes() == before

    def test_unknown_pair(self, store):
        with pytest.raises(UnknownPairError):
            store.submit_judgment(
                Judgment("nope", "s1", "s2", Dimension.VQ, Outcome.TIE, "a", 0.0)
            )

    def test_bad_outcome_rejected_at_construction(self):
        with pytest.raises(ValueError):
            Judgment("pA", "s1", "s2", Dimension.VQ, "MAYBE", "a", 0.0)

    def test_valid_jsonl_after_every_append(self, store):
        for i, (pair, dim) in enumerate(
            [("pA", Dimension.VQ), ("pB", Dimension.MQ), ("pC", Dimension.CA)]
        ):
            store.submit_judgment(judge(pair, dim, f"ann{i}"))
            for line in store.path.read_text().strip().split("\n"):
                json.loads(line)  # every prefix of appends parses

    def test_supersede(self, store):
        first = judge("pA", Dimension.VQ, "ann", Outcome.A_WINS)
        store.submit_judgment(first)
        fixed = judge("pA", Dimension.VQ, "ann", Outcome.B_WINS, ts=1.0)
        store.supersede(fixed)
        effective = store.export_judgments()
        assert effective == [fixed]
        raw_lines = store.path.read_text().strip().split("\n")
        assert len(raw_lines) == 3  # original + tombstone + replacement

    def test_replay_after_reopen(self, store, tmp_path):
        store.submit_judgment(judge("pA", Dimension.VQ, "ann"))
        store.close()
        reopened = AnnotationStore(store.path, PAIRS)
        assert len(reopened.export_judgments()) == 1
        with pytest.raises(ConflictError):
            reopened.submit_judgment(judge("pA", Dimension.VQ, "ann"))
        reopened.close()


class TestProgress:
    def test_empty(self, store):
        prog = store.progress()
        for dim in ("VQ", "MQ", "CA"):
            assert prog[dim]["judged"] == 0
            assert prog[dim]["total"] == 3

    def test_histogram(self, store):
        store.submit_judgment(judge("pA", Dimension.CA, "a1", Outcome.A_WINS))
        store.submit_judgment(judge("pB", Dimension.CA, "a1", Outcome.A_WINS))
        store.submit_judgment(judge("pC", Dimension.CA, "a1", Outcome.TIE))
        hist = store.progress()["CA"]["histogram"]
        assert hist == {"A_WINS": 2, "TIE": 1, "B_WINS": 0}


class TestConcurrency:
    def test_exactly_one_judgment_per_key(self, store):
        accepted, conflicts = [], []
        lock = threading.Lock()

        def submit(i):
            j = judge("pA", Dimension.MQ, "racer", Outcome.A_WINS, ts=float(i))
            try:
                store.submit_judgment(j)
                with lock:
                    accepted.append(i)
            except ConflictError:
                with lock:
                    conflicts.append(i)

        threads = [threading.Thread(target=submit, args=(i,)) for i in range(32)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(accepted) == 1
        assert len(conflicts) == 31
        assert len(store.path.read_text().strip().split("\n")) == 1


class TestExportRefit:
    def test_export_refits_identically(self, store, tmp_path):
        outcomes = [Outcome.A_WINS, Outcome.TIE, Outcome.B_WINS]
        for i, pair in enumerate(("pA", "pB", "pC")):
            for k, who in enumerate(("a1", "a2", "a3")):
                store.submit_judgment(
                    judge(pair, Dimension.VQ, who, outcomes[(i + k) % 3], ts=float(k))
                )
        exported = tmp_path / "export.jsonl"
        store.export_jsonl(exported)
        in_memory = fit_rewards(store.export_judgments(), BTTConfig())
        from_disk = fit_rewards(load_judgments_jsonl(exported), BTTConfig())
        assert in_memory.to_json() == from_disk.to_json()


@pytest.fixture(scope="module")
def served(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    cfg = PipelineConfig(
        seed=1, count=2, variants=2, frames=6, steps=4,
        width=96, height=96, fx=96.0, fy=96.0,
    )
    manifest = pl.build_dataset(cfg, out)
    pairs = build_pairs(manifest, out)
    store = AnnotationStore(out / "judgments.jsonl", pairs)
    app = create_app(store, out)
    yield TestClient(app), store, pairs
    store.close()


class TestHttpApi:
    def test_pairing_requires_identical_first_frames(self, served):
        _, _, pairs = served
        assert len(pairs) == 2  # one pair per scene, variants share frame 0

    def test_next_then_204(self, served):
        client, _, pairs = served
        for _ in pairs:
            r = client.get(
                "/api/pairs/next", params={"dimension": "VQ", "annotator": "w1"}
            )
            assert r.status_code == 200
            body = r.json()
            post = client.post(
                "/api/judgments",
                json={
                    "pair_id": body["pair_id"],
                    "item_a": body["seq_a"],
                    "item_b": body["seq_b"],
                    "dimension": "VQ",
                    "outcome": "TIE",
                    "annotator_id": "w1",
                },
            )
            assert post.status_code == 201
        done = client.get(
            "/api/pairs/next", params={"dimension": "VQ", "annotator": "w1"}
        )
        assert done.status_code == 204

    def test_conflict_409(self, served):
        client, _, pairs = served
        payload = {
            "pair_id": pairs[0].pair_id,
            "item_a": pairs[0].seq_a,
            "item_b": pairs[0].seq_b,
            "dimension": "MQ",
            "outcome": "A_WINS",
            "annotator_id": "w2",
        }
        assert client.post("/api/judgments", json=payload).status_code == 201
        assert client.post("/api/judgments", json=payload).status_code == 409

    def test_bad_requests_400(self, served):
        client, _, pairs = served
        bad_outcome = {
            "pair_id": pairs[0].pair_id,
            "item_a": pairs[0].seq_a,
            "item_b": pairs[0].seq_b,
            "dimension": "MQ",
            "outcome": "DRAW",
            "annotator_id": "w3",
        }
        assert client.post("/api/judgments", json=bad_outcome).status_code == 400
        assert client.post("/api/judgments", json={"pair_id": "x"}).status_code == 400
        unknown_pair = dict(bad_outcome, outcome="TIE", pair_id="ghost")
        assert client.post("/api/judgments", json=unknown_pair).status_code == 400

    def test_progress_endpoint(self, served):
        client, _, _ = served
        body = client.get("/api/progress").json()
        assert set(body) == {"VQ", "MQ", "CA"}
        assert body["VQ"]["total"] == 2

    def test_frames_endpoint(self, served):
        client, _, pairs = served
        r = client.get(f"/api/frames/{pairs[0].seq_a}/0")
        assert r.status_code == 200
        assert r.headers["content-type"] == "image/png"
        assert r.content[:8] == b"\x89PNG\r\n\x1a\n"
        assert client.get(f"/api/frames/{pairs[0].seq_a}/9999").status_code == 404

    def test_guidelines_endpoint(self, served):
        client, _, _ = served
        text = client.get("/api/guidelines").text
        for needle in (
            "Visual Quality", "Motion Quality", "Composition Aesthetic",
            "Layering Complexity", "Geometric Harmony", "Color Relationships",
            "Frame Utilization", "Visual Rhythm", "Juxtaposition Development",
            "Compositional Reasonableness", "Compositional Safety",
        ):
            assert needle in text
