"""Experiment harness: specs, runners, plot-data emission, CLI."""

from .plots import emit_plot_data, write_manifest
from .runners import (
    RUNNERS,
    derive_seed,
    run_calibrate,
    run_collect,
    run_coverage_mc,
    run_policy_mod_compare,
    run_warning_sweep,
)
from .spec import KINDS, PRESETS, ExperimentSpec, ensure_output_dir, load_toml, preset_path, resolve_spec

__all__ = [
    "KINDS",
    "PRESETS",
    "RUNNERS",
    "ExperimentSpec",
    "derive_seed",
    "emit_plot_data",
    "ensure_output_dir",
    "load_toml",
    "preset_path",
    "resolve_spec",
    "run_calibrate",
    "run_collect",
    "run_coverage_mc",
    "run_policy_mod_compare",
    "run_warning_sweep",
    "write_manifest",
]
