"""Experiment specifications: what to run, under which seeds, into which directory.

A spec is resolved from a packaged preset and/or a TOML config file plus
command-line overrides. Resolution is pure: the same inputs always produce
the same spec, and the resolved document is embedded verbatim in every
report so a run can be reproduced from its output alone.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from ..errors import ConfigError

KINDS = ("collect", "calibrate", "coverage_mc", "warning_sweep", "policy_mod_compare", "serve")

# top-level tables each kind is allowed to carry, beyond the common scalars
_COMMON_KEYS = {"kind", "seed", "epsilon_grid", "repetitions", "description", "checks"}
_KIND_TABLES = {
    "collect": {"collect", "environment", "mpc", "labeler"},
    "calibrate": {"calibrate"},
    "coverage_mc": {"coverage"},
    "warning_sweep": {"warning", "epsilon_choice", "environment", "mpc", "labeler"},
    "policy_mod_compare": {"policy", "environment", "mpc", "labeler"},
    "serve": {"serve"},
}

PRESETS = (
    "fig2-geometry",
    "fig3-coverage",
    "fig5-warning-demo",
    "fig6-sweep",
    "fig10-policy-demo",
    "fig11-policy-sweep",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved description of one experiment run.

    Parameters
    ----------
    kind : str
        One of KINDS; selects the runner.
    seed : int
        Root seed. Every random stream in the run is derived from it, so
        two runs with equal specs produce byte-identical artifacts.
    output_dir : str
        Directory all artifacts are written under.
    config : dict
        The resolved configuration document (kind tables, checks, grid).
    epsilon_grid : tuple of float
        Miscoverage levels the run sweeps; may be empty for kinds that
        derive their own level.
    repetitions : int
        Number of independent repetitions (fresh data draws).
    """

    kind: str
    seed: int
    output_dir: str
    config: dict = field(default_factory=dict)
    epsilon_grid: tuple = ()
    repetitions: int = 1

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an explicit integer")
        if not self.output_dir:
            raise ConfigError("output directory required")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        grid = tuple(float(e) for e in self.epsilon_grid)
        for e in grid:
            if not 0.0 < e < 1.0:
                raise ConfigError(f"epsilon grid value {e} outside (0, 1)")
        object.__setattr__(self, "epsilon_grid", grid)


def ensure_output_dir(spec: ExperimentSpec) -> None:
    """Create the output directory and verify it is writable."""
    os.makedirs(spec.output_dir, exist_ok=True)
    probe = os.path.join(spec.output_dir, ".write-probe")
    try:
        with open(probe, "w") as fh:
            fh.write("")
        os.remove(probe)
    except OSError as exc:
        raise ConfigError(f"output directory {spec.output_dir!r} not writable: {exc}") from None


def preset_path(name: str) -> str:
    here = os.path.dirname(os.path.abspath(__file__))
    return os.path.join(here, "presets", name + ".toml")


def load_toml(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def resolve_spec(
    preset: str | None = None,
    config_path: str | None = None,
    seed: int | None = None,
    output_dir: str | None = None,
    epsilon: list | None = None,
    expected_kind: str | None = None,
) -> ExperimentSpec:
    """Merge preset, config file, and overrides into a validated spec.

    The config file overrides the preset table-by-table; --seed, --out and
    --epsilon override both. Seeds are never defaulted: a run without an
    explicit seed is a configuration error.
    """
    if preset is None and config_path is None:
        raise ConfigError("provide a preset or a config file")
    doc: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; available: {', '.join(PRESETS)}")
        doc = load_toml(preset_path(preset))
    if config_path is not None:
        doc = _deep_merge(doc, load_toml(config_path))

    kind = doc.get("kind")
    if kind is None:
        raise ConfigError("config is missing the experiment kind")
    if expected_kind is not None and kind != expected_kind:
        raise ConfigError(f"config kind {kind!r} does not match the {expected_kind!r} subcommand")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}")
    allowed = _COMMON_KEYS | _KIND_TABLES[kind]
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys for kind {kind!r}: {', '.join(unknown)}")

    if seed is None:
        seed = doc.get("seed")
    if seed is None:
        raise ConfigError("seed required (config 'seed' key or --seed); wall-clock defaults are not used")
    grid = list(doc.get("epsilon_grid", ())) if epsilon is None else list(epsilon)
    if output_dir is None:
        raise ConfigError("output directory required (--out)")

    resolved = dict(doc)
    resolved["kind"] = kind
    resolved["seed"] = int(seed)
    resolved["epsilon_grid"] = [float(e) for e in grid]
    resolved.setdefault("repetitions", 1)
    return ExperimentSpec(
        kind=kind,
        seed=int(seed),
        output_dir=output_dir,
        config=resolved,
        epsilon_grid=tuple(float(e) for e in grid),
        repetitions=int(resolved["repetitions"]),
    )
