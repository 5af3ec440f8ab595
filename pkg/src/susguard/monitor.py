"""Runtime safety monitor over a calibration artifact.

Wraps an immutable CalibrationResult into per-state alert verdicts, streams
them over recorded trajectories, and aggregates the miss-rate / false-alarm
statistics that the calibrated-miscoverage guarantee speaks about. The
monitor itself is read-only: concurrent monitoring of many rollouts against
one calibration is safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import CalibrationResult, score_batch
from .errors import ConfigError
from .jsonfmt import format_float


@dataclass(frozen=True)
class MonitorVerdict:
    """Alert decision for one observed state.

    alert is defined by score <= threshold_r. The reported p-value lives on
    the grid j/(N+1); alert <=> p_value > epsilon holds exactly, and the
    weak form alert <=> p_value >= epsilon holds whenever epsilon is not
    itself a grid value (a grid epsilon with p == epsilon means the state
    sits just outside the sublevel set).
    """

    alert: bool
    score: float
    p_value: float
    state_index: int


@dataclass(frozen=True)
class EpsilonChoice:
    """Miscoverage level chosen for a target heuristic error rate."""

    epsilon: float
    floor_bound: bool  # requested level was below 1/(N+1) and got clamped up
    cap_bound: bool  # requested level exceeded N/(N+1) and got clamped down

    def __float__(self) -> float:
        return self.epsilon


@dataclass(frozen=True)
class TrajectoryVerdictSummary:
    trajectory_id: str
    label: str
    alerted: bool
    first_alert_index: int | None
    n_states: int


@dataclass(frozen=True)
class WarningEvaluation:
    """Aggregate warning-system rates over a labeled test set.

    miss_rate: fraction of unsafe trajectories with no alert at any step.
    error_without_warning_rate: unsafe-and-unalerted over all trajectories.
    false_alarm_rate: fraction of safe trajectories with at least one alert.
    beta_hat: unsafe fraction of the test set.
    Degenerate denominators (no unsafe / no safe trajectories) are reported
    as None rather than a fake rate.
    """

    epsilon: float
    miss_rate: float | None
    error_without_warning_rate: float
    false_alarm_rate: float | None
    beta_hat: float
    trajectories: tuple[TrajectoryVerdictSummary, ...] = ()


def monitor_state(calibration: CalibrationResult, x: np.ndarray, index: int = 0) -> MonitorVerdict:
    """Score one observed state and decide whether to raise an alert."""
    s = float(score_batch(calibration, np.atleast_2d(np.asarray(x, dtype=float)))[0])
    m = int(np.sum(calibration.alphas < s))
    n = calibration.n
    return MonitorVerdict(
        alert=bool(s <= calibration.threshold_r),
        score=s,
        p_value=(n + 1 - m) / (n + 1),
        state_index=int(index),
    )


def verdict_stream(calibration: CalibrationResult, states: np.ndarray) -> list[MonitorVerdict]:
    """Ordered verdicts for every state of one trajectory."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    scores = score_batch(calibration, states)
    m = (calibration.alphas[None, :] < scores[:, None]).sum(axis=1)
    n = calibration.n
    p = (n + 1 - m) / (n + 1)
    alerts = scores <= calibration.threshold_r
    return [
        MonitorVerdict(alert=bool(alerts[i]), score=float(scores[i]), p_value=float(p[i]), state_index=i)
        for i in range(len(states))
    ]


def evaluate_warning_system(calibration: CalibrationResult, test_set) -> WarningEvaluation:
    """Stream every state of every labeled trajectory and aggregate rates.

    The test set must be disjoint from the calibration data for the rates
    to mean anything; that discipline is the caller's.
    """
    records = list(test_set)
    if not records:
        raise ConfigError("empty test set")
    summaries = []
    n_unsafe = n_safe = missed = false_alarms = 0
    for rec in records:
        if rec.label not in ("safe", "unsafe"):
            raise ConfigError(f"trajectory {rec.id!r} has non-final label {rec.label!r}")
        verdicts = verdict_stream(calibration, rec.states)
        first = next((v.state_index for v in verdicts if v.alert), None)
        alerted = first is not None
        summaries.append(
            TrajectoryVerdictSummary(
                trajectory_id=rec.id,
                label=rec.label,
                alerted=alerted,
                first_alert_index=first,
                n_states=len(verdicts),
            )
        )
        if rec.label == "unsafe":
            n_unsafe += 1
            missed += not alerted
        else:
            n_safe += 1
            false_alarms += alerted
    return WarningEvaluation(
        epsilon=calibration.epsilon,
        miss_rate=missed / n_unsafe if n_unsafe else None,
        error_without_warning_rate=missed / len(records),
        false_alarm_rate=false_alarms / n_safe if n_safe else None,
        beta_hat=n_unsafe / len(records),
        trajectories=tuple(summaries),
    )


def choose_epsilon(beta_hat: float, target_eta: float, n_errors: int) -> EpsilonChoice:
    """Largest feasible miscoverage with eps * beta_hat <= target_eta.

    The request eta/beta_hat is clamped into the feasible interval
    [1/(N+1), N/(N+1)] and the binding side is flagged; a binding floor
    means the guarantee cannot be made as tight as requested with only
    N recorded errors.
    """
    if not 0.0 < target_eta < 1.0:
        raise ConfigError("target_eta must lie in (0, 1)")
    if not 0.0 < beta_hat <= 1.0:
        raise ConfigError("beta_hat must lie in (0, 1]")
    if n_errors < 1:
        raise ConfigError("need at least one recorded error")
    raw = target_eta / beta_hat
    floor = 1.0 / (n_errors + 1)
    cap = n_errors / (n_errors + 1)
    return EpsilonChoice(
        epsilon=float(min(max(raw, floor), cap)),
        floor_bound=raw < floor,
        cap_bound=raw > cap,
    )


def evaluation_to_json(evaluation: WarningEvaluation) -> dict:
    """JSON document for the evaluation; floats as 17-digit decimal strings."""

    def rate(v):
        return None if v is None else format_float(v)

    return {
        "epsilon": format_float(evaluation.epsilon),
        "miss_rate": rate(evaluation.miss_rate),
        "error_without_warning_rate": format_float(evaluation.error_without_warning_rate),
        "false_alarm_rate": rate(evaluation.false_alarm_rate),
        "beta_hat": format_float(evaluation.beta_hat),
        "trajectories": [
            {
                "id": t.trajectory_id,
                "label": t.label,
                "alerted": t.alerted,
                "first_alert_index": t.first_alert_index,
                "n_states": t.n_states,
            }
            for t in evaluation.trajectories
        ],
    }
