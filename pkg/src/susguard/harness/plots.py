"""Columnar plot-data emission: text series files, no rendering.

Every figure consumed downstream is backed by plain whitespace-separated
text files, one series per file, with a single '#'-prefixed header line.
Floats are written as 17-significant-digit decimal strings so reruns are
byte-identical and round-trips are lossless.
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

from ..errors import ConfigError, DegenerateInputError
from ..jsonfmt import format_float
from .runners import _eps_tag


def _cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def _write_series(out_dir: str, name: str, header: list[str], rows) -> str:
    lines = ["# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join(_cell(v) for v in row))
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return name


def _coverage_files(report: dict, out_dir: str) -> list[str]:
    files = []
    bins = int(report["config"].get("coverage", {}).get("hist_bins", 40))
    for entry in report["results"]["entries"]:
        tag = f"{entry['dissimilarity']}-{_eps_tag(entry['epsilon'])}"
        samples = np.asarray(entry["coverage_samples"], dtype=float)
        lo = min(float(samples.min()), entry["lower_bound"])
        counts, edges = np.histogram(samples, bins=bins, range=(lo, 1.0))
        files.append(
            _write_series(
                out_dir,
                f"coverage-hist-{tag}.dat",
                ["bin_lo", "bin_hi", "count"],
                zip(edges[:-1].tolist(), edges[1:].tolist(), counts.tolist()),
            )
        )
        files.append(
            _write_series(
                out_dir,
                f"coverage-bounds-{tag}.dat",
                ["name", "value"],
                [
                    ("lower", entry["lower_bound"]),
                    ("upper", entry["upper_bound"]),
                    ("mean", entry["mean_coverage"]),
                ],
            )
        )
    return files


def _warning_files(report: dict, out_dir: str) -> list[str]:
    res = report["results"]
    grid = res["grid"]
    bound = res["bound_error_without_alert"]
    files = []
    for variant, curve in res["curves"].items():
        rows = zip(
            grid,
            curve["miss_rate"],
            curve["no_warning_given_safe"],
            curve["error_without_alert"],
            curve["sd_error_without_alert"],
            bound,
        )
        files.append(
            _write_series(
                out_dir,
                f"warning-curve-{variant}.dat",
                ["epsilon", "miss_rate", "no_warning_given_safe", "error_without_alert", "sd_error_without_alert", "bound"],
                rows,
            )
        )
    for i, tl in enumerate(res.get("timelines", ())):
        rows = zip(range(len(tl["p_values"])), tl["p_values"], tl["scores"], tl["alerts"])
        files.append(
            _write_series(
                out_dir,
                f"warning-timeline-{i:02d}-{tl['label']}.dat",
                ["index", "p_value", "score", "alert"],
                rows,
            )
        )
    return files


def _policy_files(report: dict, out_dir: str) -> list[str]:
    res = report["results"]
    grid = res["grid"]
    files = []
    for arm in res["arms"]:
        rows = zip(grid, res["rates"][arm], res["collisions"][arm], res["failures"][arm])
        files.append(
            _write_series(
                out_dir,
                f"policy-rate-{arm}.dat",
                ["epsilon", "collision_rate", "collisions", "failures"],
                rows,
            )
        )
    files.append(
        _write_series(out_dir, "policy-heuristic.dat", ["epsilon", "rate"], zip(grid, res["heuristic"]))
    )
    return files


def _calibrate_files(report: dict, out_dir: str) -> list[str]:
    files = []
    for entry in report["results"]["entries"]:
        tag = f"{entry['dissimilarity']}-{_eps_tag(entry['epsilon'])}"
        if entry["form"] == "balls" and entry.get("centers"):
            dim = len(entry["centers"][0])
            header = [f"c{j}" for j in range(dim)] + ["radius"]
            rows = [list(c) + [entry["radius"]] for c in entry["centers"]]
            files.append(_write_series(out_dir, f"region-balls-{tag}.dat", header, rows))
        for i, verts in enumerate(entry.get("outlines", ())):
            if not verts:
                continue
            files.append(
                _write_series(out_dir, f"region-outline-{tag}-{i:02d}.dat", ["x", "y"], verts)
            )
    return files


_EMITTERS = {
    "coverage_mc": _coverage_files,
    "warning_sweep": _warning_files,
    "policy_mod_compare": _policy_files,
    "calibrate": _calibrate_files,
}


def emit_plot_data(report: dict, kind: str, out_dir: str) -> list[str]:
    """Write the plot series for a report; returns the relative file names.

    The report must be the in-memory form (plain floats, as returned by
    the runners). Reports loaded back from disk carry decimal strings and
    must be decoded first.
    """
    if kind not in _EMITTERS:
        raise ConfigError(f"no plot data defined for experiment kind {kind!r}")
    if not report or not report.get("results"):
        raise DegenerateInputError("empty report")
    if report.get("kind") != kind:
        raise ConfigError(f"report kind {report.get('kind')!r} does not match {kind!r}")
    return _EMITTERS[kind](report, out_dir)


def write_manifest(out_dir: str, kind: str, seed: int) -> str:
    """Hash every artifact under the output directory into manifest.json."""
    artifacts = {}
    for root, _, names in sorted(os.walk(out_dir)):
        for name in sorted(names):
            if name == "manifest.json":
                continue
            path = os.path.join(root, name)
            rel = os.path.relpath(path, out_dir)
            with open(path, "rb") as fh:
                payload = fh.read()
            artifacts[rel] = {"sha256": hashlib.sha256(payload).hexdigest(), "bytes": len(payload)}
    doc = {"kind": kind, "seed": seed, "artifacts": artifacts}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return "manifest.json"
