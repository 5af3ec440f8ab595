"""Flight environment: obstacles, room bounds, goal, start distribution.

The default layout places four full-height pillars symmetric about the
center of a 10 x 10 x 4 m room, with starts drawn from a ring annulus
outside the pillars and the goal a hover at the room center.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from .dynamics import QuadState, wrap_angles


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float).ravel())
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float).ravel())
        if self.lo.shape != (3,) or self.hi.shape != (3,):
            raise ConfigError("box corners must be 3-vectors")
        if np.any(self.lo >= self.hi):
            raise ConfigError("box lo must be strictly below hi")

    def contains(self, p: np.ndarray, margin: float = 0.0) -> bool:
        return bool(np.all(p >= self.lo - margin) and np.all(p <= self.hi + margin))


@dataclass(frozen=True)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).ravel())
        object.__setattr__(self, "radius", float(self.radius))
        if self.center.shape != (3,):
            raise ConfigError("sphere center must be a 3-vector")
        if self.radius <= 0:
            raise ConfigError("sphere radius must be positive")

    def contains(self, p: np.ndarray, margin: float = 0.0) -> bool:
        d = p - self.center
        return bool(float(d @ d) <= (self.radius + margin) ** 2)


@dataclass(frozen=True)
class RingSampler:
    """Starts drawn uniformly on an annulus in the horizontal plane."""

    r_min: float
    r_max: float
    z_min: float
    z_max: float
    center_xy: np.ndarray = field(default_factory=lambda: np.zeros(2))
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "center_xy", np.asarray(self.center_xy, dtype=float).ravel())
        if not 0 <= self.r_min <= self.r_max:
            raise ConfigError("need 0 <= r_min <= r_max")
        if self.z_min > self.z_max:
            raise ConfigError("need z_min <= z_max")

    def sample(self, rng: np.random.Generator) -> QuadState:
        ang = rng.uniform(0.0, 2.0 * np.pi)
        # uniform over the annulus area
        r = np.sqrt(rng.uniform(self.r_min**2, self.r_max**2))
        z = rng.uniform(self.z_min, self.z_max)
        p = np.array([self.center_xy[0] + r * np.cos(ang), self.center_xy[1] + r * np.sin(ang), z])
        return QuadState.hover(p)


@dataclass(frozen=True)
class Environment:
    obstacles: tuple
    goal_state: QuadState
    goal_tolerance: float
    room_lo: np.ndarray
    room_hi: np.ndarray
    t_max: int
    start_sampler: RingSampler
    dt: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "room_lo", np.asarray(self.room_lo, dtype=float).ravel())
        object.__setattr__(self, "room_hi", np.asarray(self.room_hi, dtype=float).ravel())
        if self.t_max < 1:
            raise ConfigError("t_max must be >= 1")
        if self.goal_tolerance <= 0:
            raise ConfigError("goal_tolerance must be positive")
        for obs in self.obstacles:
            if obs.contains(self.goal_state.p):
                raise ConfigError("goal state lies inside an obstacle")

    def in_room(self, p: np.ndarray) -> bool:
        return bool(np.all(p >= self.room_lo) and np.all(p <= self.room_hi))

    def hits_obstacle(self, p: np.ndarray, margin: float = 0.0) -> bool:
        return any(obs.contains(p, margin) for obs in self.obstacles)

    def is_unsafe(self, p: np.ndarray, margin: float = 0.0) -> bool:
        return not self.in_room(p) or self.hits_obstacle(p, margin)


def goal_reached(x: np.ndarray, env: Environment) -> bool:
    """Infinity-norm goal check over the packed state with wrapped angle errors."""
    g = env.goal_state.as_vector()
    diff = x - g
    diff[3:6] = wrap_angles(x[3:6] - g[3:6])
    return bool(np.max(np.abs(diff)) <= env.goal_tolerance)


def default_environment(t_max: int = 200, start_seed: int = 0) -> Environment:
    pillar_half = 0.8
    centers = [(1.8, 1.8), (-1.8, 1.8), (-1.8, -1.8), (1.8, -1.8)]
    obstacles = tuple(
        Box(
            lo=np.array([cx - pillar_half, cy - pillar_half, 0.0]),
            hi=np.array([cx + pillar_half, cy + pillar_half, 4.0]),
        )
        for cx, cy in centers
    )
    return Environment(
        obstacles=obstacles,
        goal_state=QuadState.hover([0.0, 0.0, 1.5]),
        goal_tolerance=0.5,
        room_lo=np.array([-5.0, -5.0, 0.0]),
        room_hi=np.array([5.0, 5.0, 4.0]),
        t_max=t_max,
        start_sampler=RingSampler(r_min=4.0, r_max=4.5, z_min=1.0, z_max=2.0, seed=start_seed),
    )


def environment_to_dict(env: Environment) -> dict:
    obstacles = []
    for obs in env.obstacles:
        if isinstance(obs, Box):
            obstacles.append({"type": "box", "lo": obs.lo.tolist(), "hi": obs.hi.tolist()})
        else:
            obstacles.append({"type": "sphere", "center": obs.center.tolist(), "radius": obs.radius})
    return {
        "room": {"lo": env.room_lo.tolist(), "hi": env.room_hi.tolist()},
        "goal": {
            "p": env.goal_state.p.tolist(),
            "theta": env.goal_state.theta.tolist(),
            "v": env.goal_state.v.tolist(),
            "tolerance": env.goal_tolerance,
        },
        "start": {
            "r_min": env.start_sampler.r_min,
            "r_max": env.start_sampler.r_max,
            "z_min": env.start_sampler.z_min,
            "z_max": env.start_sampler.z_max,
            "center_xy": env.start_sampler.center_xy.tolist(),
            "seed": env.start_sampler.seed,
        },
        "t_max": env.t_max,
        "dt": env.dt,
        "obstacles": obstacles,
    }


def environment_from_dict(doc: dict) -> Environment:
    obstacles = []
    for entry in doc.get("obstacles", []):
        kind = entry.get("type")
        if kind == "box":
            obstacles.append(Box(lo=np.asarray(entry["lo"]), hi=np.asarray(entry["hi"])))
        elif kind == "sphere":
            obstacles.append(Sphere(center=np.asarray(entry["center"]), radius=entry["radius"]))
        else:
            raise ConfigError(f"unknown obstacle type {kind!r}")
    goal = doc["goal"]
    start = doc["start"]
    return Environment(
        obstacles=tuple(obstacles),
        goal_state=QuadState(
            p=np.asarray(goal["p"]),
            theta=np.asarray(goal.get("theta", [0, 0, 0])),
            v=np.asarray(goal.get("v", [0, 0, 0])),
        ),
        goal_tolerance=float(goal.get("tolerance", 0.5)),
        room_lo=np.asarray(doc["room"]["lo"]),
        room_hi=np.asarray(doc["room"]["hi"]),
        t_max=int(doc["t_max"]),
        start_sampler=RingSampler(
            r_min=float(start["r_min"]),
            r_max=float(start["r_max"]),
            z_min=float(start["z_min"]),
            z_max=float(start["z_max"]),
            center_xy=np.asarray(start.get("center_xy", [0.0, 0.0])),
            seed=int(start.get("seed", 0)),
        ),
        dt=float(doc.get("dt", 0.05)),
    )


def load_environment(path: str) -> Environment:
    with open(path, "rb") as fh:
        return environment_from_dict(tomllib.load(fh))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, list):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize {type(v).__name__} to TOML")


def save_environment(env: Environment, path: str) -> None:
    doc = environment_to_dict(env)
    lines = [f"t_max = {doc['t_max']}", f"dt = {doc['dt']!r}", ""]
    for table in ("room", "goal", "start"):
        lines.append(f"[{table}]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in doc[table].items())
        lines.append("")
    for obs in doc["obstacles"]:
        lines.append("[[obstacles]]")
        lines.extend(f"{k} = {_toml_value(v)}" for k, v in obs.items())
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
