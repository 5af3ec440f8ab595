"""Experiment runners: one function per experiment kind.

Each runner consumes an ExperimentSpec, performs the experiment with
streams derived only from the spec seed, writes any heavyweight artifacts
(corpora, calibration exports) under the output directory, and returns a
JSON-ready report embedding the resolved configuration, the results, and
the outcome of any configured guarantee checks.
"""

from __future__ import annotations

import os
from dataclasses import replace

import numpy as np

from .. import jsonfmt
from ..conformal import Dissimilarity, calibrate, score_batch
from ..conformal.coverage import default_planar_sampler, monte_carlo_coverage
from ..errors import ConfigError, DegenerateInputError
from ..geometry import (
    build_region,
    calibration_id,
    polytope_vertices,
    region_to_json,
)
from ..conformal.calibration import export_calibration
from ..monitor import choose_epsilon, verdict_stream
from ..mpc import GuardedMpcPolicy, MpcConfig, NominalMpcPolicy, build_backup_set, mpc_config_from_dict
from ..quad import (
    OracleLabeler,
    collect_dataset,
    default_environment,
    environment_from_dict,
    environment_to_dict,
    save_corpus,
    load_corpus,
)
from .spec import ExperimentSpec

# stream labels; every random draw in a run descends from (spec.seed, label, ...)
_PHASE_TEST, _PHASE_DATA, _PHASE_ROLLOUT, _PHASE_SYNTH = 1, 2, 3, 4

VARIANTS = ("unsafe_safe", "unsafe_only", "safe_only")


def derive_seed(*parts: int) -> int:
    """Deterministic child seed from integer parts."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1, dtype=np.uint64)[0])


def _eps_tag(eps: float) -> str:
    return format(float(eps), ".6g").replace(".", "p").replace("-", "m")


def _environment(config: dict):
    doc = config.get("environment")
    return environment_from_dict(doc) if doc else default_environment()


def _mpc_config(env, config: dict) -> MpcConfig:
    table = {
        "goal_state": env.goal_state.as_vector().tolist(),
        "room_lo": env.room_lo.tolist(),
        "room_hi": env.room_hi.tolist(),
        "dt": env.dt,
    }
    table.update(config.get("mpc", {}))
    return mpc_config_from_dict({"mpc": table})


def _labeler(config: dict) -> OracleLabeler:
    doc = config.get("labeler", {})
    return OracleLabeler(margin=float(doc.get("margin", 0.0)), retroactive_k=int(doc.get("retroactive_k", 0)))


def _error_state_matrix(records) -> np.ndarray:
    rows = [rec.error_state for rec in records if rec.label == "unsafe"]
    if not rows:
        raise DegenerateInputError("dataset contains no unsafe trajectories")
    return np.vstack(rows)


def _safe_state_pool(records, per_record: int) -> np.ndarray:
    """Evenly strided states pooled over the safe-labeled trajectories."""
    rows = []
    for rec in records:
        if rec.label != "safe":
            continue
        t = len(rec.states)
        idx = np.unique(np.round(np.linspace(0, t - 1, min(per_record, t))).astype(int))
        rows.append(rec.states[idx])
    if not rows:
        raise DegenerateInputError("dataset contains no safe trajectories")
    return np.vstack(rows)


def _variant_dissimilarity(variant: str, safe_states: np.ndarray) -> Dissimilarity:
    if variant == "unsafe_safe":
        return Dissimilarity.unsafe_safe_squared(safe_states)
    if variant == "unsafe_only":
        return Dissimilarity.euclidean()
    if variant == "safe_only":
        return Dissimilarity.neg_safe_distance(safe_states)
    raise ConfigError(f"unknown score variant {variant!r}; expected one of {VARIANTS}")


def _base_dissimilarity(kind: str, safe_states: np.ndarray) -> Dissimilarity:
    if kind == "euclidean":
        return Dissimilarity.euclidean()
    if kind == "squared_euclidean":
        return Dissimilarity.squared_euclidean()
    if kind == "unsafe_safe_squared":
        return Dissimilarity.unsafe_safe_squared(safe_states)
    if kind == "neg_safe_distance":
        return Dissimilarity.neg_safe_distance(safe_states)
    raise ConfigError(f"unknown dissimilarity kind {kind!r}")


def _check(name: str, passed: bool, observed, bound, **context) -> dict:
    doc = {"name": name, "passed": bool(passed), "observed": observed, "bound": bound}
    doc.update(context)
    return doc


def _report(spec: ExperimentSpec, results: dict, checks: list) -> dict:
    return {"kind": spec.kind, "config": spec.config, "results": results, "checks": checks}


def _write_json(path: str, doc: dict) -> None:
    with open(path, "w") as fh:
        fh.write(jsonfmt.dumps(doc, sort_keys=True, indent=2) + "\n")


# -- collect --------------------------------------------------------------------


def run_collect(spec: ExperimentSpec) -> dict:
    """Roll out the nominal policy and persist the labeled corpus."""
    cfg = spec.config
    sec = cfg.get("collect", {})
    env = _environment(cfg)
    policy = NominalMpcPolicy(_mpc_config(env, cfg))
    labeler = _labeler(cfg)
    until = sec.get("until_n_unsafe")
    total = sec.get("total")
    records = collect_dataset(
        policy,
        env,
        seed=derive_seed(spec.seed, _PHASE_DATA),
        until_n_unsafe=None if until is None else int(until),
        total=None if total is None else int(total),
        labeler=labeler,
    )
    corpus_name = sec.get("corpus_name", "corpus.json")
    save_corpus(os.path.join(spec.output_dir, corpus_name), records)

    terminations: dict = {}
    for rec in records:
        terminations[rec.termination] = terminations.get(rec.termination, 0) + 1
    n_unsafe = sum(1 for r in records if r.label == "unsafe")
    results = {
        "corpus": corpus_name,
        "n_records": len(records),
        "n_unsafe": n_unsafe,
        "n_safe": sum(1 for r in records if r.label == "safe"),
        "beta_hat": n_unsafe / len(records),
        "terminations": terminations,
        "mean_length": float(np.mean([r.n_steps for r in records])),
        "environment": environment_to_dict(env),
    }
    return _report(spec, results, [])


# -- calibrate ------------------------------------------------------------------


def run_calibrate(spec: ExperimentSpec) -> dict:
    """Calibrate regions over a corpus or a synthetic planar draw.

    One entry per (dissimilarity, epsilon) pair; each entry exports the
    calibration and the closed-form region as JSON artifacts. For planar
    data the region outlines (circle parameters or polytope vertices) are
    embedded in the report for plotting.
    """
    cfg = spec.config
    sec = cfg.get("calibrate", {})
    if not spec.epsilon_grid:
        raise ConfigError("calibrate requires a non-empty epsilon grid")
    kinds = list(sec.get("dissimilarities", ("unsafe_safe_squared",)))

    if "corpus" in sec:
        try:
            records = load_corpus(sec["corpus"])
        except FileNotFoundError:
            raise ConfigError(f"corpus file not found: {sec['corpus']}") from None
        err = _error_state_matrix(records)
        safe = _safe_state_pool(records, int(sec.get("safe_subsample", 50)))
        source = {"corpus": sec["corpus"], "n_records": len(records)}
    elif "synthetic" in sec:
        syn = sec["synthetic"]
        rng = np.random.default_rng(np.random.SeedSequence((spec.seed, _PHASE_SYNTH)))
        sampler = default_planar_sampler()
        err = sampler.unsafe.draw(rng, int(syn.get("n_unsafe", 30)))
        safe = sampler.safe.draw(rng, int(syn.get("n_safe", 100)))
        source = {"synthetic": {"n_unsafe": int(err.shape[0]), "n_safe": int(safe.shape[0])}}
    else:
        raise ConfigError("calibrate needs either a 'corpus' path or a [calibrate.synthetic] table")

    pad = 1.0
    lo, hi = err.min(axis=0) - pad, err.max(axis=0) + pad
    entries = []
    for kind in kinds:
        diss = _base_dissimilarity(kind, safe)
        for eps in spec.epsilon_grid:
            cal = calibrate(err, eps, diss)
            region = build_region(cal)
            tag = f"{kind}-{_eps_tag(eps)}"
            _write_json(os.path.join(spec.output_dir, f"calibration-{tag}.json"), export_calibration(cal))
            _write_json(os.path.join(spec.output_dir, f"region-{tag}.json"), region_to_json(region))
            entry = {
                "dissimilarity": kind,
                "epsilon": float(eps),
                "n": cal.n,
                "k": cal.k,
                "threshold_r": cal.threshold_r,
                "form": region.form,
                "n_components": region.n_components,
                "calibration_id": calibration_id(cal),
                "calibration_file": f"calibration-{tag}.json",
                "region_file": f"region-{tag}.json",
            }
            if region.form == "balls":
                entry["centers"] = region.centers.tolist()
                entry["radius"] = region.radius
            elif err.shape[1] == 2:
                entry["outlines"] = [
                    polytope_vertices(p, bounds=(lo, hi)).tolist() for p in region.polytopes
                ]
            entries.append(entry)

    results = {"source": source, "entries": entries}
    return _report(spec, results, [])


# -- coverage -------------------------------------------------------------------


def run_coverage_mc(spec: ExperimentSpec) -> dict:
    """Monte Carlo coverage of the calibrated region on fresh draws.

    Repeats (draw data, calibrate, measure coverage on fresh test points)
    and aggregates the sample mean against the two-sided coverage bounds
    of the calibration: mean in [1 - eps, 1 - eps + slack] where the slack
    depends on the dissimilarity symmetry.
    """
    cfg = spec.config
    sec = cfg.get("coverage", {})
    if not spec.epsilon_grid:
        raise ConfigError("coverage_mc requires a non-empty epsilon grid")
    kinds = list(sec.get("dissimilarities", ("euclidean", "unsafe_safe_squared")))
    n_unsafe = int(sec.get("n_unsafe", 30))
    n_safe = int(sec.get("n_safe", 100))
    n_test = int(sec.get("n_test", 1000))
    sigmas = float(cfg.get("checks", {}).get("coverage_sandwich_sigmas", 3.0))
    enforce = bool(cfg.get("checks", {}).get("coverage_sandwich", False))

    entries = []
    checks = []
    for ki, kind in enumerate(kinds):
        for ei, eps in enumerate(spec.epsilon_grid):
            rep = monte_carlo_coverage(
                default_planar_sampler(),
                n_unsafe=n_unsafe,
                n_safe=n_safe,
                epsilon=eps,
                repetitions=spec.repetitions,
                n_test=n_test,
                dissimilarity_kind=kind,
                rng_seed=derive_seed(spec.seed, ki, ei),
            )
            entries.append(
                {
                    "dissimilarity": kind,
                    "epsilon": float(eps),
                    "mean_coverage": rep.mean_coverage,
                    "std_error": rep.std_error,
                    "lower_bound": rep.lower_bound,
                    "upper_bound": rep.upper_bound,
                    "repetitions": rep.repetitions,
                    "n_unsafe": n_unsafe,
                    "n_safe": n_safe,
                    "n_test": n_test,
                    "coverage_samples": rep.coverage_samples.tolist(),
                }
            )
            if enforce:
                slack = sigmas * rep.std_error
                ok = rep.lower_bound - slack <= rep.mean_coverage <= rep.upper_bound + slack
                checks.append(
                    _check(
                        f"coverage_sandwich[{kind}, eps={eps:g}]",
                        ok,
                        rep.mean_coverage,
                        [rep.lower_bound, rep.upper_bound],
                        std_error=rep.std_error,
                        sigmas=sigmas,
                    )
                )

    return _report(spec, {"entries": entries}, checks)


# -- warning sweep --------------------------------------------------------------


def _collect_test_set(policy, env, labeler, spec: ExperimentSpec, n_test: int):
    test = collect_dataset(
        policy, env, seed=derive_seed(spec.seed, _PHASE_TEST), total=n_test, labeler=labeler
    )
    usable = [r for r in test if r.label in ("safe", "unsafe")]
    if len(usable) < len(test):
        raise DegenerateInputError(f"{len(test) - len(usable)} test trajectories ended without a final label")
    return usable


def run_warning_sweep(spec: ExperimentSpec) -> dict:
    """Warning-system operating curves over fresh calibration datasets.

    Per repetition: collect a dataset until the configured number of
    unsafe trajectories, then calibrate each score variant on its error
    states and sweep the epsilon grid against a shared labeled test set.
    Alert or miss per trajectory depends only on the minimum score over
    its states, so each variant scores the test set once per repetition.
    """
    cfg = spec.config
    sec = cfg.get("warning", {})
    n_unsafe = int(sec.get("n_unsafe", 25))
    n_test = int(sec.get("n_test", 500))
    variants = list(sec.get("variants", VARIANTS))
    per_rec = int(sec.get("safe_subsample", 50))
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown score variant {v!r}; expected one of {VARIANTS}")

    env = _environment(cfg)
    policy = NominalMpcPolicy(_mpc_config(env, cfg))
    labeler = _labeler(cfg)

    usable = _collect_test_set(policy, env, labeler, spec, n_test)
    is_unsafe = np.array([r.label == "unsafe" for r in usable])
    n_unsafe_t = int(is_unsafe.sum())
    n_safe_t = len(usable) - n_unsafe_t
    if n_unsafe_t == 0 or n_safe_t == 0:
        raise DegenerateInputError("test set needs both safe and unsafe trajectories")
    beta_test = n_unsafe_t / len(usable)

    grid = list(spec.epsilon_grid)
    choice_doc = None
    demo_eps = None
    if "epsilon_choice" in cfg:
        ec = cfg["epsilon_choice"]
        beta_choice = float(ec["beta_hat"]) if "beta_hat" in ec else beta_test
        choice = choose_epsilon(beta_choice, float(ec["eta"]), n_unsafe)
        demo_eps = float(choice)
        choice_doc = {
            "eta": float(ec["eta"]),
            "beta_hat": beta_choice,
            "epsilon": demo_eps,
            "floor_bound": choice.floor_bound,
            "cap_bound": choice.cap_bound,
        }
        if demo_eps not in grid:
            grid.append(demo_eps)
    if not grid:
        raise ConfigError("warning_sweep requires an epsilon grid or an [epsilon_choice] table")

    # rates[variant][metric][rep][grid point]
    metrics = ("miss_rate", "error_without_alert", "no_warning_given_safe", "false_alarm_rate")
    rates = {v: {m: np.zeros((spec.repetitions, len(grid))) for m in metrics} for v in variants}
    timelines = []
    demo_n = int(sec.get("demo_trajectories", 0))
    demo_variant = sec.get("demo_variant", "unsafe_safe")

    for rep in range(spec.repetitions):
        data = collect_dataset(
            policy, env, seed=derive_seed(spec.seed, _PHASE_DATA, rep),
            until_n_unsafe=n_unsafe, labeler=labeler,
        )
        err = _error_state_matrix(data)
        safe_pool = _safe_state_pool(data, per_rec)
        for variant in variants:
            cal = calibrate(err, grid[0], _variant_dissimilarity(variant, safe_pool))
            smin = np.array([float(score_batch(cal, r.states).min()) for r in usable])
            for ei, eps in enumerate(grid):
                alerted = smin <= cal.threshold_for(eps)
                missed = int((~alerted[is_unsafe]).sum())
                false_alarms = int(alerted[~is_unsafe].sum())
                rates[variant]["miss_rate"][rep, ei] = missed / n_unsafe_t
                rates[variant]["error_without_alert"][rep, ei] = missed / len(usable)
                rates[variant]["no_warning_given_safe"][rep, ei] = (n_safe_t - false_alarms) / n_safe_t
                rates[variant]["false_alarm_rate"][rep, ei] = false_alarms / n_safe_t
            if rep == 0 and demo_n and variant == demo_variant:
                cal_demo = calibrate(err, demo_eps if demo_eps is not None else grid[0], cal.dissimilarity)
                for rec in usable[:demo_n]:
                    verdicts = verdict_stream(cal_demo, rec.states)
                    first = next((v.state_index for v in verdicts if v.alert), None)
                    timelines.append(
                        {
                            "id": rec.id,
                            "label": rec.label,
                            "epsilon": float(cal_demo.epsilon),
                            "first_alert_index": first,
                            "p_values": [v.p_value for v in verdicts],
                            "scores": [v.score for v in verdicts],
                            "alerts": [v.alert for v in verdicts],
                        }
                    )

    curves = {
        v: {
            m: rates[v][m].mean(axis=0).tolist() for m in metrics
        }
        | {f"sd_{m}": rates[v][m].std(axis=0, ddof=1).tolist() if spec.repetitions > 1 else [0.0] * len(grid) for m in metrics}
        for v in variants
    }
    results = {
        "grid": [float(e) for e in grid],
        "beta_hat_test": beta_test,
        "n_test": len(usable),
        "n_test_unsafe": n_unsafe_t,
        "n_test_safe": n_safe_t,
        "bound_error_without_alert": [float(e) * beta_test for e in grid],
        "curves": curves,
        "per_repetition_error_without_alert": {v: rates[v]["error_without_alert"].tolist() for v in variants},
    }
    if choice_doc is not None:
        results["epsilon_choice"] = choice_doc
    if timelines:
        results["timelines"] = timelines

    checks = []
    chk = cfg.get("checks", {})
    if "error_bound_sigmas" in chk:
        sig = float(chk["error_bound_sigmas"])
        for variant in variants:
            mat = rates[variant]["error_without_alert"]
            mean = mat.mean(axis=0)
            se = mat.std(axis=0, ddof=1) / np.sqrt(spec.repetitions) if spec.repetitions > 1 else np.zeros(len(grid))
            for ei, eps in enumerate(grid):
                bound = float(eps) * beta_test + sig * float(se[ei])
                checks.append(
                    _check(
                        f"error_without_alert_bound[{variant}, eps={eps:g}]",
                        mean[ei] <= bound,
                        float(mean[ei]),
                        bound,
                    )
                )
    if "dominance_fraction" in chk:
        frac = float(chk["dominance_fraction"])
        baselines = list(chk.get("dominance_baselines", ("unsafe_only",)))
        lead = np.asarray(curves["unsafe_safe"]["no_warning_given_safe"])
        for other in baselines:
            share = float(np.mean(lead >= np.asarray(curves[other]["no_warning_given_safe"])))
            checks.append(_check(f"dominance[unsafe_safe >= {other}]", share >= frac, share, frac))
    if "epsilon_choice_value" in chk:
        want = float(chk["epsilon_choice_value"])
        tol = float(chk.get("epsilon_choice_tol", 5e-4))
        got = float(choice_doc["epsilon"]) if choice_doc else float("nan")
        checks.append(_check("epsilon_choice_value", abs(got - want) <= tol, got, [want - tol, want + tol]))

    return _report(spec, results, checks)


# -- policy modification --------------------------------------------------------


_ARMS = ("baseline", "guarded", "naive")


def _arm_policy(arm: str, mpc: MpcConfig, mpc_guard: MpcConfig, region, backup):
    if arm == "baseline":
        return NominalMpcPolicy(mpc)
    if arm == "guarded":
        return GuardedMpcPolicy(mpc_guard, region, backup)
    if arm == "naive":
        return NominalMpcPolicy(mpc, sus_region=region)
    raise ConfigError(f"unknown policy arm {arm!r}; expected one of {_ARMS}")


def run_policy_mod_compare(spec: ExperimentSpec) -> dict:
    """Guarded vs naive-constrained (vs unmodified) collision comparison.

    Per repetition a fresh dataset is collected with the nominal policy;
    per grid point the suspected-unsafe region is calibrated from its
    error states, the backup library is filtered against the region, and
    each arm is rolled out from fresh start draws. Collision rates are
    pooled over repetitions and compared to the eps * beta heuristic.
    """
    cfg = spec.config
    sec = cfg.get("policy", {})
    if not spec.epsilon_grid:
        raise ConfigError("policy_mod_compare requires a non-empty epsilon grid")
    arms = list(sec.get("arms", ("guarded", "naive")))
    for arm in arms:
        if arm not in _ARMS:
            raise ConfigError(f"unknown policy arm {arm!r}; expected one of {_ARMS}")
    rpa = int(sec.get("rollouts_per_arm", 5))
    n_unsafe = int(sec.get("n_unsafe", 25))
    per_rec = int(sec.get("safe_subsample", 50))
    metric = sec.get("backup_metric", "state")

    env = _environment(cfg)
    mpc = _mpc_config(env, cfg)
    mpc_guard = replace(mpc, nearest_metric=metric)
    labeler = _labeler(cfg)
    nominal = NominalMpcPolicy(mpc)

    grid = list(spec.epsilon_grid)
    collisions = {arm: np.zeros((spec.repetitions, len(grid)), dtype=int) for arm in arms}
    failures = {arm: np.zeros((spec.repetitions, len(grid)), dtype=int) for arm in arms}
    backup_sizes = np.zeros((spec.repetitions, len(grid)), dtype=int)
    pooled_unsafe = pooled_total = 0

    for rep in range(spec.repetitions):
        data = collect_dataset(
            nominal, env, seed=derive_seed(spec.seed, _PHASE_DATA, rep),
            until_n_unsafe=n_unsafe, labeler=labeler,
        )
        pooled_unsafe += sum(1 for r in data if r.label == "unsafe")
        pooled_total += len(data)
        err = _error_state_matrix(data)
        safe_pool = _safe_state_pool(data, per_rec)
        diss = Dissimilarity.unsafe_safe_squared(safe_pool)
        for ei, eps in enumerate(grid):
            cal = calibrate(err, eps, diss)
            region = build_region(cal)
            backup = build_backup_set(data, region)
            backup_sizes[rep, ei] = len(backup)
            for ai, arm in enumerate(arms):
                policy = _arm_policy(arm, mpc, mpc_guard, region, backup)
                base = derive_seed(spec.seed, _PHASE_ROLLOUT, rep, ei, ai)
                for j in range(rpa):
                    rec = rollout_one(policy, env, (base, j), labeler)
                    collisions[arm][rep, ei] += rec.termination == "unsafe"
                    failures[arm][rep, ei] += rec.termination == "policy_failure"

    n_per_point = spec.repetitions * rpa
    beta_pooled = pooled_unsafe / pooled_total
    heuristic = [float(e) * beta_pooled for e in grid]
    results = {
        "grid": [float(e) for e in grid],
        "arms": arms,
        "rollouts_per_point": n_per_point,
        "beta_hat_collect": beta_pooled,
        "collected_total": pooled_total,
        "collected_unsafe": pooled_unsafe,
        "heuristic": heuristic,
        "rates": {arm: (collisions[arm].sum(axis=0) / n_per_point).tolist() for arm in arms},
        "collisions": {arm: collisions[arm].sum(axis=0).tolist() for arm in arms},
        "failures": {arm: failures[arm].sum(axis=0).tolist() for arm in arms},
        "per_repetition_collisions": {arm: collisions[arm].tolist() for arm in arms},
        "backup_set_sizes": backup_sizes.tolist(),
    }

    checks = []
    chk = cfg.get("checks", {})
    if "heuristic_sigmas" in chk and "guarded" in arms:
        sig = float(chk["heuristic_sigmas"])
        for ei, eps in enumerate(grid):
            h = heuristic[ei]
            sd = float(np.sqrt(h * (1.0 - h) / n_per_point))
            rate = float(results["rates"]["guarded"][ei])
            checks.append(
                _check(
                    f"guarded_tracks_heuristic[eps={eps:g}]",
                    abs(rate - h) <= sig * sd,
                    rate,
                    [h - sig * sd, h + sig * sd],
                    heuristic=h,
                )
            )
    if "naive_gap_factor" in chk and "naive" in arms:
        factor = float(chk["naive_gap_factor"])
        ei = int(np.argmin(grid))
        rate = float(results["rates"]["naive"][ei])
        floor = factor * heuristic[ei]
        checks.append(_check(f"naive_gap[eps={grid[ei]:g}]", rate > floor, rate, floor))
    if "guarded_max_rate" in chk and "guarded" in arms:
        cap = float(chk["guarded_max_rate"])
        rate = float(max(results["rates"]["guarded"]))
        checks.append(_check("guarded_max_rate", rate <= cap, rate, cap))
    if "baseline_min_rate" in chk and "baseline" in arms:
        floor = float(chk["baseline_min_rate"])
        rate = float(min(results["rates"]["baseline"]))
        checks.append(_check("baseline_min_rate", rate >= floor, rate, floor))

    return _report(spec, results, checks)


def rollout_one(policy, env, seed, labeler):
    """Single rollout; isolated for monkeypatching in tests."""
    from ..quad import rollout

    return rollout(policy, env, seed=seed, labeler=labeler)


RUNNERS = {
    "collect": run_collect,
    "calibrate": run_calibrate,
    "coverage_mc": run_coverage_mc,
    "warning_sweep": run_warning_sweep,
    "policy_mod_compare": run_policy_mod_compare,
}
