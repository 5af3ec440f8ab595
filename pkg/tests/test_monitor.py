"""Monitor verdicts, warning-system evaluation, and miscoverage selection."""

import json
from fractions import Fraction

import numpy as np
import pytest

from susguard.conformal import Dissimilarity, calibrate
from susguard.errors import ConfigError
from susguard.jsonfmt import parse_float
from susguard.monitor import (
    EpsilonChoice,
    MonitorVerdict,
    WarningEvaluation,
    choose_epsilon,
    evaluate_warning_system,
    evaluation_to_json,
    monitor_state,
    verdict_stream,
)
from susguard.quad.rollout import TrajectoryRecord

from oracles import contains_oracle, make_pair_diss, nn_score_oracle, p_value_scan_oracle

EUCLID = Dissimilarity.euclidean()


def _record(traj_id, states, label, termination=None, error_index=None):
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if termination is None:
        termination = "unsafe" if label == "unsafe" else "goal"
    if label == "unsafe" and error_index is None:
        error_index = len(states) - 1
    return TrajectoryRecord(
        id=traj_id,
        states=states,
        actions=np.zeros((len(states) - 1, 4)),
        dt=0.05,
        termination=termination,
        label=label,
        labeler="oracle",
        error_state_index=error_index,
    )


def random_walk_records(rng, n_traj, dim=2, t_max=15, step_scale=0.8, bound=3.0, tag="rw"):
    """Gaussian random walks from the origin; unsafe once any coordinate
    leaves [-bound, bound], truncated at that first excursion."""
    records = []
    for i in range(n_traj):
        steps = rng.normal(scale=step_scale, size=(t_max, dim))
        xs = np.vstack([np.zeros(dim), np.cumsum(steps, axis=0)])
        outside = np.abs(xs).max(axis=1) > bound
        if outside.any():
            e = int(np.argmax(outside))
            records.append(_record(f"{tag}-{i}", xs[: e + 1], "unsafe", error_index=e))
        else:
            records.append(_record(f"{tag}-{i}", xs, "safe", termination="timeout"))
    return records


def _calibration_from(records, epsilon):
    errors = np.array([r.states[r.error_state_index] for r in records if r.label == "unsafe"])
    return calibrate(errors, epsilon, EUCLID)


# -- monitor_state -----------------------------------------------------------------


class TestMonitorState:
    def test_error_state_alerts_with_unit_p(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(size=(12, 2))
        cal = calibrate(pts, 0.25, EUCLID)
        v = monitor_state(cal, pts[3], index=7)
        assert v.alert is True
        assert v.score == 0.0
        assert v.p_value == 1.0
        assert v.state_index == 7

    def test_far_state_hits_p_floor_and_never_alerts(self):
        rng = np.random.default_rng(1)
        pts = rng.normal(size=(10, 2))
        far = np.array([50.0, -40.0])
        n = len(pts)
        for eps in (Fraction(1, n + 1), 0.25, 0.5, Fraction(n, n + 1)):
            cal = calibrate(pts, eps, EUCLID)
            v = monitor_state(cal, far)
            assert v.score > cal.alphas.max()
            assert v.p_value == 1 / (n + 1)
            assert v.alert is False

    def test_grid_epsilon_boundary_is_strict(self):
        # at eps exactly on the p-value grid, a state just outside the region
        # carries p == eps; the alert follows the region, not the weak compare
        rng = np.random.default_rng(2)
        pts = rng.normal(size=(5, 2))
        cal = calibrate(pts, Fraction(1, 6), EUCLID)
        v = monitor_state(cal, np.array([30.0, 30.0]))
        assert v.p_value == cal.epsilon
        assert v.alert is False

    def test_verdict_consistency_on_random_states(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(size=(40, 2))
        eps = 0.15  # off the 1/(N+1) grid, so > and >= agree
        cal = calibrate(pts, eps, EUCLID)
        xs = rng.uniform(-4, 4, size=(10_000, 2))
        for i in range(len(xs)):
            v = monitor_state(cal, xs[i], index=i)
            assert v.alert == (v.p_value >= eps)
            assert v.alert == (v.p_value > eps)
            assert v.alert == (v.score <= cal.threshold_r)

    def test_matches_scan_oracles(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(25, 3))
        cal = calibrate(pts, 0.2, EUCLID)
        pd = make_pair_diss("euclidean")
        for x in rng.uniform(-3, 3, size=(300, 3)):
            v = monitor_state(cal, x)
            assert v.score == pytest.approx(nn_score_oracle(pts, x, pd), rel=1e-12)
            assert v.p_value == p_value_scan_oracle(pts, x, pd)
            assert v.alert == contains_oracle(pts, x, 0.2, pd)

    def test_dimension_mismatch(self):
        cal = calibrate(np.random.default_rng(5).normal(size=(6, 2)), 0.3, EUCLID)
        with pytest.raises(Exception):
            monitor_state(cal, np.zeros(5))


# -- verdict streams ---------------------------------------------------------------


class TestVerdictStream:
    def test_matches_per_state_monitor(self):
        rng = np.random.default_rng(6)
        cal = calibrate(rng.normal(size=(15, 2)), 0.2, EUCLID)
        states = rng.uniform(-3, 3, size=(30, 2))
        stream = verdict_stream(cal, states)
        assert len(stream) == 30
        for i, v in enumerate(stream):
            assert v == monitor_state(cal, states[i], index=i)

    def test_deterministic(self):
        rng = np.random.default_rng(7)
        cal = calibrate(rng.normal(size=(15, 2)), 0.2, EUCLID)
        states = rng.uniform(-3, 3, size=(25, 2))
        assert verdict_stream(cal, states) == verdict_stream(cal, states)


# -- evaluation --------------------------------------------------------------------


class TestEvaluateWarningSystem:
    def test_rates_match_hand_count(self):
        rng = np.random.default_rng(8)
        train = random_walk_records(rng, 120, tag="train")
        cal = _calibration_from(train, 0.2)
        test = random_walk_records(rng, 80, tag="test")
        ev = evaluate_warning_system(cal, test)

        pd = make_pair_diss("euclidean")
        pts = cal.error_states
        missed = alarms = unsafe = safe = 0
        for rec in test:
            alerted = any(contains_oracle(pts, x, 0.2, pd) for x in rec.states)
            if rec.label == "unsafe":
                unsafe += 1
                missed += not alerted
            else:
                safe += 1
                alarms += alerted
        assert ev.beta_hat == unsafe / len(test)
        assert ev.miss_rate == missed / unsafe
        assert ev.error_without_warning_rate == missed / len(test)
        assert ev.false_alarm_rate == alarms / safe
        assert ev.error_without_warning_rate <= ev.miss_rate
        assert len(ev.trajectories) == len(test)

    def test_error_state_in_region_means_no_miss(self):
        # every unsafe test trajectory ends at a calibration point: alert certain
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(8, 2)) * 3.0
        cal = calibrate(pts, 0.25, EUCLID)
        test = [
            _record(f"u{i}", np.vstack([np.full(2, 40.0), pts[i]]), "unsafe")
            for i in range(len(pts))
        ]
        ev = evaluate_warning_system(cal, test)
        assert ev.miss_rate == 0.0
        assert ev.false_alarm_rate is None

    def test_safe_only_reports_absent_miss(self):
        rng = np.random.default_rng(10)
        cal = calibrate(rng.normal(size=(6, 2)), 0.3, EUCLID)
        test = [_record("s0", np.full((4, 2), 90.0), "safe", termination="timeout")]
        ev = evaluate_warning_system(cal, test)
        assert ev.miss_rate is None
        assert ev.error_without_warning_rate == 0.0
        assert ev.false_alarm_rate == 0.0
        assert ev.beta_hat == 0.0

    def test_empty_or_unlabeled_rejected(self):
        rng = np.random.default_rng(11)
        cal = calibrate(rng.normal(size=(6, 2)), 0.3, EUCLID)
        with pytest.raises(ConfigError):
            evaluate_warning_system(cal, [])
        bad = _record("a0", np.zeros((2, 2)), "unlabeled", termination="alert")
        with pytest.raises(ConfigError):
            evaluate_warning_system(cal, [bad])

    def test_alert_at_error_implication(self):
        # region membership of the final state forces at least one alert
        rng = np.random.default_rng(12)
        train = random_walk_records(rng, 150, tag="tr")
        cal = _calibration_from(train, 0.3)
        checked = 0
        for rec in random_walk_records(rng, 150, tag="te"):
            if rec.label != "unsafe":
                continue
            final = rec.states[-1]
            if monitor_state(cal, final).alert:
                checked += 1
                assert any(v.alert for v in verdict_stream(cal, rec.states))
        assert checked > 10


class TestMissRateGuarantee:
    GRID = (0.1, 0.2, 0.3, 0.5)

    def test_single_split_miss_bound_per_epsilon(self):
        rng = np.random.default_rng(13)
        train = random_walk_records(rng, 120, tag="train")
        test = random_walk_records(rng, 600, tag="test")
        n_unsafe = sum(r.label == "unsafe" for r in test)
        for eps in self.GRID:
            ev = evaluate_warning_system(_calibration_from(train, eps), test)
            sigma = np.sqrt(eps * (1 - eps) / n_unsafe)
            assert ev.miss_rate <= eps + 3 * sigma

    def test_mean_miss_over_redraws(self):
        # redraw calibration and test sets >= 20 times; the mean miss rate
        # must sit at or below eps at every grid point
        rng = np.random.default_rng(14)
        redraws = 25
        misses = {eps: [] for eps in self.GRID}
        ewws = {eps: [] for eps in self.GRID}
        caps = {eps: [] for eps in self.GRID}
        for _ in range(redraws):
            train = random_walk_records(rng, 120, tag="train")
            test = random_walk_records(rng, 200, tag="test")
            for eps in self.GRID:
                ev = evaluate_warning_system(_calibration_from(train, eps), test)
                misses[eps].append(ev.miss_rate)
                ewws[eps].append(ev.error_without_warning_rate)
                caps[eps].append(eps * ev.beta_hat)
        for eps in self.GRID:
            m = np.array(misses[eps], dtype=float)
            se = m.std(ddof=1) / np.sqrt(redraws)
            assert m.mean() <= eps + 3 * se, f"eps={eps}: mean miss {m.mean():.4f}"
            # corollary: unsafe-without-warning over all trajectories <= eps * beta
            e = np.array(ewws[eps], dtype=float)
            bound = np.array(caps[eps], dtype=float)
            gap = e - bound
            se_gap = gap.std(ddof=1) / np.sqrt(redraws)
            assert gap.mean() <= 3 * se_gap, f"eps={eps}: eww exceeds eps*beta_hat"


# -- epsilon selection -------------------------------------------------------------


class TestChooseEpsilon:
    def test_ratio_rule(self):
        choice = choose_epsilon(beta_hat=0.52, target_eta=0.05, n_errors=100)
        assert choice.epsilon == pytest.approx(0.09615384615384616, rel=1e-12)
        assert round(choice.epsilon, 3) == 0.096
        assert not choice.floor_bound and not choice.cap_bound
        assert float(choice) == choice.epsilon

    def test_cap_when_eta_exceeds_beta(self):
        choice = choose_epsilon(beta_hat=0.5, target_eta=0.6, n_errors=10)
        assert choice.epsilon == 10 / 11
        assert choice.cap_bound and not choice.floor_bound

    def test_floor_binds_with_few_errors(self):
        choice = choose_epsilon(beta_hat=1.0, target_eta=0.05, n_errors=5)
        assert choice.epsilon == 1 / 6
        assert choice.floor_bound and not choice.cap_bound

    def test_validation(self):
        with pytest.raises(ConfigError):
            choose_epsilon(0.5, 0.0, 10)
        with pytest.raises(ConfigError):
            choose_epsilon(0.5, 1.0, 10)
        with pytest.raises(ConfigError):
            choose_epsilon(0.0, 0.1, 10)
        with pytest.raises(ConfigError):
            choose_epsilon(1.5, 0.1, 10)
        with pytest.raises(ConfigError):
            choose_epsilon(0.5, 0.1, 0)


# -- report ------------------------------------------------------------------------


class TestEvaluationJson:
    def test_round_trip_and_markers(self):
        rng = np.random.default_rng(15)
        train = random_walk_records(rng, 80, tag="tr")
        cal = _calibration_from(train, 0.25)
        test = random_walk_records(rng, 40, tag="te")
        ev = evaluate_warning_system(cal, test)
        doc = evaluation_to_json(ev)
        text = json.dumps(doc)  # must be valid JSON as-is
        back = json.loads(text)
        assert parse_float(back["epsilon"]) == ev.epsilon
        assert parse_float(back["miss_rate"]) == ev.miss_rate
        assert parse_float(back["beta_hat"]) == ev.beta_hat
        assert len(back["trajectories"]) == len(test)
        ids = {t["id"] for t in back["trajectories"]}
        assert ids == {r.id for r in test}

        safe_only = evaluate_warning_system(cal, [r for r in test if r.label == "safe"])
        doc2 = evaluation_to_json(safe_only)
        assert doc2["miss_rate"] is None
