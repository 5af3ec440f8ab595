"""Trajectory corpus serialization: JSON Lines, schema v1.

All floats are written as 17-significant-digit decimal strings so records
round-trip bit-exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .. import jsonfmt
from ..errors import ConfigError
from .rollout import TrajectoryRecord

SCHEMA_VERSION = "v1"


def trajectory_to_json(rec: TrajectoryRecord) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "id": rec.id,
        "dt": jsonfmt.format_float(rec.dt),
        "states": jsonfmt.float_matrix(rec.states),
        "actions": jsonfmt.float_matrix(rec.actions),
        "termination": rec.termination,
        "label": rec.label,
        "labeler": rec.labeler,
        "error_state_index": rec.error_state_index,
    }


def trajectory_from_json(doc: dict) -> TrajectoryRecord:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"unsupported corpus schema {doc.get('schema')!r}")
    actions = jsonfmt.parse_matrix(doc["actions"]) if doc["actions"] else np.empty((0, 4))
    return TrajectoryRecord(
        id=doc["id"],
        states=jsonfmt.parse_matrix(doc["states"]),
        actions=actions,
        dt=jsonfmt.parse_float(doc["dt"]),
        termination=doc["termination"],
        label=doc["label"],
        labeler=doc["labeler"],
        error_state_index=doc["error_state_index"],
    )


def save_corpus(path: str, records: list[TrajectoryRecord]) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        for rec in records:
            fh.write(json.dumps(trajectory_to_json(rec), separators=(",", ":")) + "\n")
    os.replace(tmp, path)


def load_corpus(path: str) -> list[TrajectoryRecord]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(trajectory_from_json(json.loads(line)))
    return records
