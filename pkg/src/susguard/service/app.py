"""HTTP/WebSocket service: trajectory replay, human labels, calibration, monitoring.

The service is the bridge between a stored trajectory corpus and the
labeling console. It never mutates trajectory state or action data; the
only mutable state is the human-label overlay, persisted to an append-only
JSON Lines log next to the corpus so a restart replays to identical label
state. All floats on the wire are 17-significant-digit decimal strings.

Endpoints
---------
GET  /api/trajectories                  paginated summaries
GET  /api/trajectories/{id}/frames      state frames on demand (from/to)
POST /api/labels                        submit or overwrite a human label
POST /api/calibrate                     calibrate a region from stored labels
GET  /api/regions/{id}                  calibration + region geometry export
GET  /api/reports/{kind}                latest experiment report of a kind
WS   /ws/monitor                        per-step verdicts for a replay or rollout
"""

from __future__ import annotations

import datetime
import json
import os
import threading
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, HTTPException, Query, WebSocket, WebSocketDisconnect
from pydantic import BaseModel, Field

from .. import jsonfmt
from ..conformal import Dissimilarity, calibrate
from ..errors import ConfigError, InfeasibleMiscoverageError, SusguardError
from ..geometry import build_region, calibration_id, region_to_json
from ..monitor import verdict_stream
from ..mpc import GuardedMpcPolicy, NominalMpcPolicy, build_backup_set, mpc_config_from_dict
from ..quad import default_environment, load_corpus, rollout

VERDICTS = ("safe", "unsafe")
LABELERS = ("oracle", "human")
SCORE_KINDS = ("euclidean", "squared_euclidean", "unsafe_safe_squared", "neg_safe_distance")

# control-grade planner settings for server-side rollouts
_ROLLOUT_MPC = {"attitude_max": 1.2, "solver_tolerance": 1e-4, "solver_max_iters": 40000}


# -- label state ------------------------------------------------------------------


@dataclass
class LabelState:
    """Active human labels plus their append-only audit log."""

    log_path: str
    active: dict = field(default_factory=dict)  # trajectory_id -> log entry
    history: list = field(default_factory=list)
    _lock: threading.Lock = field(default_factory=threading.Lock)

    def apply(self, entry: dict) -> dict:
        previous = self.active.get(entry["trajectory_id"])
        entry = dict(entry, replaces=None if previous is None else previous["verdict"])
        self.active[entry["trajectory_id"]] = entry
        self.history.append(entry)
        return entry

    def submit(self, entry: dict) -> dict:
        # single-writer discipline: concurrent posts serialize here
        with self._lock:
            entry = self.apply(entry)
            with open(self.log_path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()
        return entry


def _validate_label(entry: dict, records: dict) -> None:
    tid = entry.get("trajectory_id")
    if tid not in records:
        raise KeyError(tid)
    if entry.get("verdict") not in VERDICTS:
        raise ValueError(f"verdict must be one of {VERDICTS}")
    idx = entry.get("termination_index")
    if entry["verdict"] == "unsafe":
        if idx is None:
            raise ValueError("unsafe verdict requires termination_index")
        if not 0 <= int(idx) < len(records[tid].states):
            raise ValueError(
                f"termination_index {idx} outside trajectory of {len(records[tid].states)} states"
            )
    elif idx is not None:
        raise ValueError("termination_index only applies to unsafe verdicts")


def _replay_log(log_path: str, records: dict) -> LabelState:
    state = LabelState(log_path=log_path)
    if not os.path.exists(log_path):
        return state
    with open(log_path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
                _validate_label(entry, records)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ConfigError(f"label log {log_path} corrupt at line {ln}: {exc}") from None
            state.apply(entry)
    return state


# -- request schemas ---------------------------------------------------------------


class LabelSubmission(BaseModel):
    trajectory_id: str
    verdict: str
    termination_index: int | None = None
    labeler_id: str = "anonymous"
    submitted_at: str | None = None


class CalibrateRequest(BaseModel):
    epsilon: float | str
    score_kind: str = "unsafe_safe_squared"
    labeler: str = "human"
    safe_subsample: int = Field(default=50, ge=1)


# -- label views -------------------------------------------------------------------


def _labeled_sets(records: dict, labels: LabelState, labeler: str):
    """(error-state matrix, safe trajectories) under the requested labeler."""
    errors = []
    safe = []
    if labeler == "oracle":
        for rec in records.values():
            if rec.label == "unsafe":
                errors.append(rec.error_state)
            elif rec.label == "safe":
                safe.append(rec)
    else:
        for tid, entry in labels.active.items():
            rec = records[tid]
            if entry["verdict"] == "unsafe":
                errors.append(rec.states[int(entry["termination_index"])])
            else:
                safe.append(rec)
    err = np.vstack(errors) if errors else np.empty((0, 0))
    return err, safe


def _safe_pool(safe_records, per_record: int) -> np.ndarray:
    rows = []
    for rec in safe_records:
        t = len(rec.states)
        idx = np.unique(np.round(np.linspace(0, t - 1, min(per_record, t))).astype(int))
        rows.append(rec.states[idx])
    return np.vstack(rows) if rows else np.empty((0, 0))


def _dissimilarity(kind: str, safe_pool: np.ndarray) -> Dissimilarity:
    if kind == "euclidean":
        return Dissimilarity.euclidean()
    if kind == "squared_euclidean":
        return Dissimilarity.squared_euclidean()
    if kind in ("unsafe_safe_squared", "neg_safe_distance"):
        if safe_pool.size == 0:
            raise ConfigError(f"score kind {kind!r} needs at least one safe-labeled trajectory")
        if kind == "unsafe_safe_squared":
            return Dissimilarity.unsafe_safe_squared(safe_pool)
        return Dissimilarity.neg_safe_distance(safe_pool)
    raise ConfigError(f"unknown score kind {kind!r}; expected one of {SCORE_KINDS}")


def _summary(rec, labels: LabelState) -> dict:
    human = labels.active.get(rec.id)
    return {
        "id": rec.id,
        "n_states": len(rec.states),
        "n_steps": rec.n_steps,
        "dt": jsonfmt.format_float(rec.dt),
        "termination": rec.termination,
        "oracle_label": rec.label,
        "oracle_error_state_index": rec.error_state_index,
        "human_label": None if human is None else human["verdict"],
        "human_termination_index": None if human is None else human.get("termination_index"),
        "human_labeler_id": None if human is None else human.get("labeler_id"),
    }


def _find_report(reports_dir: str, kind: str) -> str | None:
    best = None
    for root, _, names in os.walk(reports_dir):
        for name in names:
            if name != "report.json":
                continue
            path = os.path.join(root, name)
            try:
                with open(path) as fh:
                    doc = json.load(fh)
            except (OSError, json.JSONDecodeError):
                continue
            if doc.get("kind") != kind:
                continue
            mtime = os.path.getmtime(path)
            if best is None or mtime > best[0]:
                best = (mtime, path)
    return None if best is None else best[1]


# -- application -------------------------------------------------------------------


def create_app(corpus_path: str | None = None, reports_dir: str | None = None) -> FastAPI:
    """Build the service over one corpus; refuses to start on corrupt input.

    Parameters
    ----------
    corpus_path : str, optional
        JSON Lines trajectory corpus; defaults to SUSGUARD_CORPUS.
    reports_dir : str, optional
        Directory scanned for experiment report.json files; defaults to
        SUSGUARD_REPORTS, then the corpus directory.
    """
    corpus_path = corpus_path or os.environ.get("SUSGUARD_CORPUS")
    if not corpus_path:
        raise ConfigError("corpus path required (argument or SUSGUARD_CORPUS)")
    try:
        record_list = load_corpus(corpus_path)
    except FileNotFoundError:
        raise ConfigError(f"corpus file not found: {corpus_path}") from None
    except (json.JSONDecodeError, KeyError, ValueError, ConfigError) as exc:
        raise ConfigError(f"corpus {corpus_path} corrupt: {exc}") from None
    if not record_list:
        raise ConfigError(f"corpus {corpus_path} is empty")
    records = {rec.id: rec for rec in record_list}
    if len(records) != len(record_list):
        raise ConfigError(f"corpus {corpus_path} has duplicate trajectory ids")

    labels = _replay_log(corpus_path + ".labels.jsonl", records)
    reports_dir = reports_dir or os.environ.get("SUSGUARD_REPORTS") or os.path.dirname(
        os.path.abspath(corpus_path)
    )
    calibrations: dict = {}

    app = FastAPI(title="susguard feedback service")

    @app.get("/api/trajectories")
    def list_trajectories(offset: int = Query(default=0, ge=0), limit: int = Query(default=50, ge=1, le=500)):
        ids = list(records)
        page = ids[offset : offset + limit]
        return {
            "total": len(ids),
            "offset": offset,
            "limit": limit,
            "items": [_summary(records[tid], labels) for tid in page],
        }

    @app.get("/api/trajectories/{tid}/frames")
    def frames(
        tid: str,
        from_: int = Query(default=0, alias="from", ge=0),
        to: int | None = Query(default=None, ge=1),
    ):
        rec = records.get(tid)
        if rec is None:
            raise HTTPException(404, f"unknown trajectory {tid!r}")
        n = len(rec.states)
        to = n if to is None else to
        if not from_ < to <= n:
            raise HTTPException(422, f"need 0 <= from < to <= {n}, got from={from_} to={to}")
        return {
            "id": tid,
            "dt": jsonfmt.format_float(rec.dt),
            "from": from_,
            "to": to,
            "n_states": n,
            "states": jsonfmt.float_matrix(rec.states[from_:to]),
            "actions": jsonfmt.float_matrix(rec.actions[from_ : max(from_, to - 1)]),
        }

    @app.post("/api/labels")
    def post_label(sub: LabelSubmission):
        entry = {
            "trajectory_id": sub.trajectory_id,
            "verdict": sub.verdict,
            "termination_index": sub.termination_index,
            "labeler_id": sub.labeler_id,
            "submitted_at": sub.submitted_at
            or datetime.datetime.now(datetime.timezone.utc).isoformat(),
        }
        try:
            _validate_label(entry, records)
        except KeyError:
            raise HTTPException(404, f"unknown trajectory {sub.trajectory_id!r}") from None
        except ValueError as exc:
            raise HTTPException(422, str(exc)) from None
        stored = labels.submit(entry)
        return {
            "stored": True,
            "replaces": stored["replaces"],
            "trajectory": _summary(records[sub.trajectory_id], labels),
        }

    @app.post("/api/calibrate")
    def post_calibrate(req: CalibrateRequest):
        if req.labeler not in LABELERS:
            raise HTTPException(422, f"labeler must be one of {LABELERS}")
        err, safe = _labeled_sets(records, labels, req.labeler)
        if len(err) < 2:
            raise HTTPException(
                409, f"need at least 2 unsafe {req.labeler} labels to calibrate, have {len(err)}"
            )
        try:
            eps = jsonfmt.parse_float(req.epsilon)
            diss = _dissimilarity(req.score_kind, _safe_pool(safe, req.safe_subsample))
            cal = calibrate(err, eps, diss)
            region = build_region(cal)
        except (ConfigError, InfeasibleMiscoverageError, ValueError) as exc:
            raise HTTPException(422, str(exc)) from None
        cid = calibration_id(cal)
        calibrations[cid] = (cal, region)
        return {
            "calibration_id": cid,
            "epsilon": jsonfmt.format_float(cal.epsilon),
            "n": cal.n,
            "k": cal.k,
            "threshold_r": jsonfmt.format_float(cal.threshold_r),
            "score_kind": req.score_kind,
            "labeler": req.labeler,
            "form": region.form,
            "n_components": region.n_components,
        }

    @app.get("/api/regions/{cid}")
    def get_region(cid: str):
        if cid not in calibrations:
            raise HTTPException(404, f"unknown calibration {cid!r}")
        cal, region = calibrations[cid]
        from ..conformal.calibration import export_calibration

        return {
            "calibration_id": cid,
            "calibration": export_calibration(cal),
            "region": region_to_json(region),
        }

    @app.get("/api/reports/{kind}")
    def get_report(kind: str):
        path = _find_report(reports_dir, kind)
        if path is None:
            raise HTTPException(404, f"no report of kind {kind!r} under {reports_dir}")
        with open(path) as fh:
            return json.load(fh)

    async def _ws_error(ws: WebSocket, message: str) -> None:
        await ws.send_json({"error": message})
        await ws.close(code=1008)

    @app.websocket("/ws/monitor")
    async def ws_monitor(ws: WebSocket):
        await ws.accept()
        try:
            request = await ws.receive_json()
        except (json.JSONDecodeError, WebSocketDisconnect):
            await ws.close(code=1003)
            return
        if not isinstance(request, dict):
            await _ws_error(ws, "request must be a JSON object")
            return
        cid = request.get("calibration_id")
        if cid not in calibrations:
            await _ws_error(ws, f"unknown calibration {cid!r}")
            return
        cal, region = calibrations[cid]

        if "trajectory_id" in request:
            rec = records.get(request["trajectory_id"])
            if rec is None:
                await _ws_error(ws, f"unknown trajectory {request['trajectory_id']!r}")
                return
            modes = ["replay"] * len(rec.states)
        elif "rollout" in request:
            ro = request["rollout"]
            if not isinstance(ro, dict) or not isinstance(ro.get("seed"), int):
                await _ws_error(ws, "rollout request needs an integer seed")
                return
            policy_kind = ro.get("policy", "guarded")
            env = default_environment()
            table = {
                "goal_state": env.goal_state.as_vector().tolist(),
                "room_lo": env.room_lo.tolist(),
                "room_hi": env.room_hi.tolist(),
                "dt": env.dt,
                **_ROLLOUT_MPC,
            }
            mpc = mpc_config_from_dict({"mpc": table})
            if policy_kind == "guarded":
                backup = build_backup_set(records.values(), region)
                if not backup:
                    await _ws_error(ws, "backup set is empty for this calibration")
                    return
                policy = GuardedMpcPolicy(mpc, region, backup)
            elif policy_kind == "nominal":
                policy = NominalMpcPolicy(mpc)
            else:
                await _ws_error(ws, f"unknown rollout policy {policy_kind!r}")
                return
            try:
                rec = rollout(policy, env, seed=(int(ro["seed"]),))
            except SusguardError as exc:
                await _ws_error(ws, f"rollout failed: {exc}")
                return
            step_modes = rec.meta.get("modes", [])
            modes = [step_modes[min(i, len(step_modes) - 1)] if step_modes else "nominal"
                     for i in range(len(rec.states))]
        else:
            await _ws_error(ws, "request needs a trajectory_id or a rollout table")
            return

        try:
            for v in verdict_stream(cal, rec.states):
                await ws.send_json(
                    {
                        "index": v.state_index,
                        "state": jsonfmt.float_vector(rec.states[v.state_index]),
                        "score": jsonfmt.format_float(v.score),
                        "p_value": jsonfmt.format_float(v.p_value),
                        "alert": v.alert,
                        "mode": modes[v.state_index],
                    }
                )
            await ws.send_json({"done": rec.termination})
            await ws.close()
        except WebSocketDisconnect:
            return

    return app
