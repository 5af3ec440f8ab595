"""Labeling/monitoring service tests over a synthetic corpus.

Exercises the HTTP contract (pagination, frames, labels, calibration,
region export, reports), the append-only label-log replay invariant, the
CLI/API calibration identity, and the per-step monitor stream against the
in-process verdict oracle.
"""

import json
import os

import numpy as np
import pytest
from fastapi.testclient import TestClient

from susguard import jsonfmt
from susguard.conformal import Dissimilarity, calibrate
from susguard.errors import ConfigError
from susguard.geometry import build_region, region_contains
from susguard.harness.cli import main as cli_main
from susguard.monitor import verdict_stream
from susguard.quad import TrajectoryRecord, save_corpus
from susguard.service import create_app

N_UNSAFE, N_SAFE = 4, 6


def make_record(rid, label, rng, n=10):
    states = rng.normal(scale=0.6, size=(n + 1, 9))
    states[:, 2] += 1.5
    actions = rng.normal(size=(n, 4))
    if label == "unsafe":
        return TrajectoryRecord(
            id=rid, states=states, actions=actions, dt=0.05,
            termination="unsafe", label="unsafe", labeler="oracle",
            error_state_index=n,
        )
    return TrajectoryRecord(
        id=rid, states=states, actions=actions, dt=0.05,
        termination="goal", label="safe", labeler="oracle",
    )


@pytest.fixture
def corpus(tmp_path):
    rng = np.random.default_rng(314)
    records = [make_record(f"u{i:02d}", "unsafe", rng) for i in range(N_UNSAFE)]
    records += [make_record(f"s{i:02d}", "safe", rng) for i in range(N_SAFE)]
    path = tmp_path / "corpus.jsonl"
    save_corpus(str(path), records)
    return str(path), records


@pytest.fixture
def client(corpus):
    path, _ = corpus
    return TestClient(create_app(path))


# -- startup ----------------------------------------------------------------------


class TestStartup:
    def test_requires_corpus_path(self, monkeypatch):
        monkeypatch.delenv("SUSGUARD_CORPUS", raising=False)
        with pytest.raises(ConfigError, match="corpus path required"):
            create_app()

    def test_env_corpus(self, corpus, monkeypatch):
        path, records = corpus
        monkeypatch.setenv("SUSGUARD_CORPUS", path)
        app = create_app()
        client = TestClient(app)
        assert client.get("/api/trajectories").json()["total"] == len(records)

    def test_missing_corpus(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            create_app(str(tmp_path / "nope.jsonl"))

    def test_corrupt_corpus(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"schema": "v1", "id": "x"\n')
        with pytest.raises(ConfigError, match="corrupt"):
            create_app(str(path))

    def test_empty_corpus(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(ConfigError, match="empty"):
            create_app(str(path))

    def test_corrupt_label_log(self, corpus):
        path, _ = corpus
        with open(path + ".labels.jsonl", "w") as fh:
            fh.write('{"trajectory_id": "ghost", "verdict": "unsafe", "termination_index": 1}\n')
        with pytest.raises(ConfigError, match="label log .* corrupt at line 1"):
            create_app(path)


# -- trajectories -----------------------------------------------------------------


class TestTrajectories:
    def test_pagination(self, client):
        total = N_UNSAFE + N_SAFE
        page = client.get("/api/trajectories", params={"offset": 2, "limit": 3}).json()
        assert page["total"] == total
        assert [it["id"] for it in page["items"]] == ["u02", "u03", "s00"]
        rest = client.get("/api/trajectories", params={"offset": total - 1}).json()
        assert len(rest["items"]) == 1

    def test_summary_fields(self, client):
        item = client.get("/api/trajectories").json()["items"][0]
        assert item["id"] == "u00"
        assert item["oracle_label"] == "unsafe"
        assert item["oracle_error_state_index"] == 10
        assert item["human_label"] is None
        assert item["n_states"] == item["n_steps"] + 1

    def test_frames_roundtrip(self, client, corpus):
        _, records = corpus
        rec = records[0]
        doc = client.get(f"/api/trajectories/{rec.id}/frames", params={"from": 2, "to": 5}).json()
        got = jsonfmt.parse_matrix(doc["states"])
        np.testing.assert_array_equal(got, rec.states[2:5])
        acts = jsonfmt.parse_matrix(doc["actions"])
        np.testing.assert_array_equal(acts, rec.actions[2:4])
        assert doc["n_states"] == len(rec.states)

    def test_frames_default_whole_trajectory(self, client, corpus):
        _, records = corpus
        rec = records[1]
        doc = client.get(f"/api/trajectories/{rec.id}/frames").json()
        np.testing.assert_array_equal(jsonfmt.parse_matrix(doc["states"]), rec.states)

    def test_frames_bounds(self, client):
        assert client.get("/api/trajectories/u00/frames", params={"from": 5, "to": 5}).status_code == 422
        assert client.get("/api/trajectories/u00/frames", params={"to": 99}).status_code == 422
        assert client.get("/api/trajectories/ghost/frames").status_code == 404


# -- labels -----------------------------------------------------------------------


class TestLabels:
    def test_unsafe_label_applies(self, client):
        resp = client.post("/api/labels", json={
            "trajectory_id": "s00", "verdict": "unsafe", "termination_index": 3,
            "labeler_id": "tester",
        })
        assert resp.status_code == 200
        body = resp.json()
        assert body["replaces"] is None
        assert body["trajectory"]["human_label"] == "unsafe"
        assert body["trajectory"]["human_termination_index"] == 3
        # oracle fields untouched
        assert body["trajectory"]["oracle_label"] == "safe"

    def test_resubmission_overwrites_with_audit(self, client):
        client.post("/api/labels", json={
            "trajectory_id": "s01", "verdict": "unsafe", "termination_index": 2,
        })
        resp = client.post("/api/labels", json={"trajectory_id": "s01", "verdict": "safe"})
        assert resp.json()["replaces"] == "unsafe"
        assert resp.json()["trajectory"]["human_label"] == "safe"

    def test_unsafe_requires_index(self, client):
        resp = client.post("/api/labels", json={"trajectory_id": "s00", "verdict": "unsafe"})
        assert resp.status_code == 422

    def test_index_bounds(self, client):
        resp = client.post("/api/labels", json={
            "trajectory_id": "s00", "verdict": "unsafe", "termination_index": 11,
        })
        assert resp.status_code == 422

    def test_safe_rejects_index(self, client):
        resp = client.post("/api/labels", json={
            "trajectory_id": "s00", "verdict": "safe", "termination_index": 1,
        })
        assert resp.status_code == 422

    def test_unknown_trajectory(self, client):
        resp = client.post("/api/labels", json={
            "trajectory_id": "ghost", "verdict": "safe",
        })
        assert resp.status_code == 404

    def test_bad_verdict(self, client):
        resp = client.post("/api/labels", json={"trajectory_id": "s00", "verdict": "maybe"})
        assert resp.status_code == 422

    def test_log_replay_reproduces_state(self, corpus):
        path, _ = corpus
        first = TestClient(create_app(path))
        first.post("/api/labels", json={
            "trajectory_id": "s00", "verdict": "unsafe", "termination_index": 4,
        })
        first.post("/api/labels", json={"trajectory_id": "s01", "verdict": "safe"})
        first.post("/api/labels", json={"trajectory_id": "s00", "verdict": "safe"})

        reborn = TestClient(create_app(path))
        a = first.get("/api/trajectories", params={"limit": 500}).json()
        b = reborn.get("/api/trajectories", params={"limit": 500}).json()
        assert a == b
        s00 = next(it for it in b["items"] if it["id"] == "s00")
        assert s00["human_label"] == "safe"
        # the log keeps every submission, not just the survivors
        with open(path + ".labels.jsonl") as fh:
            assert len(fh.readlines()) == 3


# -- calibration ------------------------------------------------------------------


class TestCalibrate:
    def label_unsafe(self, client, tid, idx):
        assert client.post("/api/labels", json={
            "trajectory_id": tid, "verdict": "unsafe", "termination_index": idx,
        }).status_code == 200

    def test_conflict_below_two_unsafe(self, client):
        resp = client.post("/api/calibrate", json={"epsilon": 0.5, "labeler": "human"})
        assert resp.status_code == 409
        self.label_unsafe(client, "s00", 3)
        resp = client.post("/api/calibrate", json={"epsilon": 0.5, "labeler": "human"})
        assert resp.status_code == 409

    def test_human_calibration(self, client):
        self.label_unsafe(client, "s00", 3)
        self.label_unsafe(client, "s01", 7)
        client.post("/api/labels", json={"trajectory_id": "s02", "verdict": "safe"})
        resp = client.post("/api/calibrate", json={"epsilon": 0.5, "labeler": "human"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["n"] == 2
        assert body["form"] == "polyhedra"
        assert body["labeler"] == "human"
        region = client.get(f"/api/regions/{body['calibration_id']}")
        assert region.status_code == 200

    def test_human_needs_safe_for_two_sample_scores(self, client):
        self.label_unsafe(client, "s00", 3)
        self.label_unsafe(client, "s01", 7)
        resp = client.post("/api/calibrate", json={"epsilon": 0.5, "labeler": "human"})
        assert resp.status_code == 422
        assert "safe-labeled" in resp.json()["detail"]

    def test_oracle_calibration_matches_core(self, client, corpus):
        _, records = corpus
        resp = client.post("/api/calibrate", json={
            "epsilon": 0.25, "labeler": "oracle", "score_kind": "euclidean",
        })
        body = resp.json()
        err = np.vstack([r.error_state for r in records if r.label == "unsafe"])
        cal = calibrate(err, 0.25, Dissimilarity.euclidean())
        assert body["n"] == cal.n and body["k"] == cal.k
        assert jsonfmt.parse_float(body["threshold_r"]) == cal.threshold_r

    def test_unknown_score_kind(self, client):
        resp = client.post("/api/calibrate", json={
            "epsilon": 0.5, "labeler": "oracle", "score_kind": "cosine",
        })
        assert resp.status_code == 422

    def test_infeasible_epsilon(self, client):
        resp = client.post("/api/calibrate", json={"epsilon": 0.01, "labeler": "oracle"})
        assert resp.status_code == 422

    def test_unknown_region(self, client):
        assert client.get("/api/regions/deadbeef").status_code == 404

    def test_api_matches_cli_export(self, client, corpus, tmp_path):
        # the calibration served over the API is the same JSON document the
        # CLI writes for the same labels, byte for byte
        path, _ = corpus
        out = tmp_path / "cli-run"
        cfg = tmp_path / "cal.toml"
        cfg.write_text(
            "kind = 'calibrate'\nseed = 1\nepsilon_grid = [0.25]\n"
            f"[calibrate]\ncorpus = '{path}'\ndissimilarities = ['unsafe_safe_squared']\n"
        )
        assert cli_main(["calibrate", "--config", str(cfg), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        (entry,) = report["results"]["entries"]

        body = client.post("/api/calibrate", json={
            "epsilon": 0.25, "labeler": "oracle", "score_kind": "unsafe_safe_squared",
        }).json()
        assert body["calibration_id"] == entry["calibration_id"]
        doc = client.get(f"/api/regions/{body['calibration_id']}").json()
        api_bytes = jsonfmt.dumps(doc["calibration"], sort_keys=True, indent=2) + "\n"
        cli_bytes = (out / entry["calibration_file"]).read_text()
        assert api_bytes == cli_bytes


# -- reports ----------------------------------------------------------------------


class TestReports:
    def test_serves_latest_of_kind(self, corpus, tmp_path):
        path, _ = corpus
        reports = tmp_path / "reports"
        old, new = reports / "a", reports / "b"
        old.mkdir(parents=True), new.mkdir(parents=True)
        (old / "report.json").write_text('{"kind": "coverage_mc", "stamp": "old"}\n')
        (new / "report.json").write_text('{"kind": "coverage_mc", "stamp": "new"}\n')
        os.utime(old / "report.json", (1000, 1000))
        os.utime(new / "report.json", (2000, 2000))
        client = TestClient(create_app(path, reports_dir=str(reports)))
        assert client.get("/api/reports/coverage_mc").json()["stamp"] == "new"
        assert client.get("/api/reports/policy_mod_compare").status_code == 404


# -- monitor stream ---------------------------------------------------------------


def calibrated(client, **over):
    req = {"epsilon": 0.25, "labeler": "oracle", "score_kind": "unsafe_safe_squared"}
    req.update(over)
    resp = client.post("/api/calibrate", json=req)
    assert resp.status_code == 200
    return resp.json()["calibration_id"]


class TestMonitorStream:
    def collect(self, client, request):
        frames = []
        with client.websocket_connect("/ws/monitor") as ws:
            ws.send_json(request)
            while True:
                msg = ws.receive_json()
                frames.append(msg)
                if "done" in msg or "error" in msg:
                    return frames

    def test_replay_matches_verdict_oracle(self, client, corpus):
        _, records = corpus
        cid = calibrated(client)
        rec = records[0]
        frames = self.collect(client, {"calibration_id": cid, "trajectory_id": rec.id})
        assert frames[-1] == {"done": rec.termination}
        steps = frames[:-1]
        assert len(steps) == len(rec.states)

        err = np.vstack([r.error_state for r in records if r.label == "unsafe"])
        safe = np.vstack([r.states[np.unique(np.round(np.linspace(0, len(r.states) - 1, 50)).astype(int))]
                          for r in records if r.label == "safe"])
        cal = calibrate(err, 0.25, Dissimilarity.unsafe_safe_squared(safe))
        for msg, v in zip(steps, verdict_stream(cal, rec.states)):
            assert msg["index"] == v.state_index
            assert msg["alert"] is v.alert
            assert jsonfmt.parse_float(msg["score"]) == v.score
            assert jsonfmt.parse_float(msg["p_value"]) == v.p_value
            assert msg["mode"] == "replay"
            np.testing.assert_array_equal(jsonfmt.parse_vector(msg["state"]), rec.states[v.state_index])

    def test_unsafe_final_frame_alert_iff_region_contains(self, client, corpus):
        _, records = corpus
        cid = calibrated(client)
        err = np.vstack([r.error_state for r in records if r.label == "unsafe"])
        safe = np.vstack([r.states[np.unique(np.round(np.linspace(0, len(r.states) - 1, 50)).astype(int))]
                          for r in records if r.label == "safe"])
        region = build_region(calibrate(err, 0.25, Dissimilarity.unsafe_safe_squared(safe)))
        for rec in records:
            if rec.label != "unsafe":
                continue
            frames = self.collect(client, {"calibration_id": cid, "trajectory_id": rec.id})
            final = frames[-2]
            assert final["alert"] == bool(region_contains(region, rec.error_state))

    def test_unknown_calibration(self, client):
        frames = self.collect(client, {"calibration_id": "nope", "trajectory_id": "u00"})
        assert "error" in frames[0]

    def test_unknown_trajectory(self, client):
        cid = calibrated(client)
        frames = self.collect(client, {"calibration_id": cid, "trajectory_id": "ghost"})
        assert "unknown trajectory" in frames[0]["error"]

    def test_request_needs_subject(self, client):
        cid = calibrated(client)
        frames = self.collect(client, {"calibration_id": cid})
        assert "error" in frames[0]

    def test_malformed_request_closes(self, client):
        from starlette.websockets import WebSocketDisconnect

        with client.websocket_connect("/ws/monitor") as ws:
            ws.send_text("this is not json")
            with pytest.raises(WebSocketDisconnect):
                ws.receive_json()

    def test_rollout_stream_nominal(self, client):
        cid = calibrated(client)
        frames = self.collect(
            client, {"calibration_id": cid, "rollout": {"seed": 3, "policy": "nominal"}}
        )
        assert "done" in frames[-1]
        steps = frames[:-1]
        assert steps, "rollout produced no frames"
        assert all(msg["mode"] == "nominal" for msg in steps)
        assert [msg["index"] for msg in steps] == list(range(len(steps)))

    def test_rollout_needs_seed(self, client):
        cid = calibrated(client)
        frames = self.collect(client, {"calibration_id": cid, "rollout": {"policy": "nominal"}})
        assert "integer seed" in frames[0]["error"]

    def test_rollout_unknown_policy(self, client):
        cid = calibrated(client)
        frames = self.collect(
            client, {"calibration_id": cid, "rollout": {"seed": 1, "policy": "chaotic"}}
        )
        assert "unknown rollout policy" in frames[0]["error"]

    def test_guarded_rollout_empty_backup(self, tmp_path):
        # the safe trajectory revisits the unsafe error states exactly, so
        # the backup library filters to nothing and the stream reports it
        rng = np.random.default_rng(9)
        records = []
        for i in range(3):
            states = rng.normal(scale=0.05, size=(6, 9))
            records.append(TrajectoryRecord(
                id=f"u{i}", states=states, actions=rng.normal(size=(5, 4)), dt=0.05,
                termination="unsafe", label="unsafe", labeler="oracle", error_state_index=5,
            ))
        grazing = np.vstack([rec.states[-1] for rec in records] * 2)
        records.append(TrajectoryRecord(
            id="s0", states=grazing, actions=rng.normal(size=(5, 4)), dt=0.05,
            termination="goal", label="safe", labeler="oracle",
        ))
        path = tmp_path / "cluster.jsonl"
        save_corpus(str(path), records)
        client = TestClient(create_app(str(path)))
        cid = calibrated(client, epsilon=0.5, score_kind="euclidean")
        frames = self.collect(client, {
            "calibration_id": cid, "rollout": {"seed": 1, "policy": "guarded"},
        })
        assert "backup set is empty" in frames[0]["error"]
