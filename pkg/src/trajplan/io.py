"""Artifact serialization (knot CSV, dense CSV, corridor JSON) and the
declarative scenario file format.

Scenario files are flat `key = value` text: `map`, `start`, `goal` are
required, `reps` is optional, and every other key must name a PlannerConfig
field (applied as an override). States are comma-separated "x,y,theta,v".
"""

from __future__ import annotations

import csv
import json
import pathlib
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, PlannerConfig, parse_overrides
from .corridor import Corridor
from .trajectory import DenseTrajectory, Trajectory

# fixed float formatting keeps CSV output bit-identical across runs
FLOAT_FMT = "%.12g"


class ScenarioError(ValueError):
    pass


def parse_state(text: str) -> np.ndarray:
    """Parse "x,y,theta,v" into a state vector."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"expected 'x,y,theta,v', got {text!r}")
    return np.array([float(p) for p in parts])


@dataclass
class ScenarioSpec:
    map_path: pathlib.Path
    start: np.ndarray
    goal: np.ndarray
    overrides: dict = field(default_factory=dict)
    reps: int = 1

    def config(self, base: PlannerConfig | None = None) -> PlannerConfig:
        return (base or PlannerConfig()).replace(**self.overrides)


def load_scenario(path) -> ScenarioSpec:
    path = pathlib.Path(path)
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ScenarioError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()

    for required in ("map", "start", "goal"):
        if required not in pairs:
            raise ScenarioError(f"{path}: missing required key {required!r}")
    map_path = pathlib.Path(pairs.pop("map"))
    if not map_path.is_absolute():
        map_path = path.parent / map_path
    if not map_path.exists():
        raise ScenarioError(f"{path}: map file {map_path} does not exist")
    try:
        start = parse_state(pairs.pop("start"))
        goal = parse_state(pairs.pop("goal"))
        reps = int(pairs.pop("reps", "1"))
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    try:
        overrides = parse_overrides(pairs)
    except ConfigError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return ScenarioSpec(map_path, start, goal, overrides, reps)


def write_knot_csv(traj: Trajectory, path) -> None:
    """Header `k,x,y,theta,v,a,omega,t`; t is 0 on the final knot."""
    tfull = np.concatenate([traj.t, [0.0]])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "x", "y", "theta", "v", "a", "omega", "t"])
        for k in range(traj.n + 1):
            writer.writerow(
                [k]
                + [
                    FLOAT_FMT % val
                    for val in (traj.x[k], traj.y[k], traj.theta[k],
                                traj.v[k], traj.a[k], traj.omega[k], tfull[k])
                ]
            )


def read_knot_csv(path) -> Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    cols = {name: np.array([float(r[name]) for r in rows]) for name in
            ("x", "y", "theta", "v", "a", "omega", "t")}
    return Trajectory(cols["x"], cols["y"], cols["theta"], cols["v"],
                      cols["a"], cols["omega"], cols["t"][:-1])


def write_dense_csv(dense: DenseTrajectory, path) -> None:
    """Header `time,x,y,theta,v,a,jerk,omega`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", "x", "y", "theta", "v", "a", "jerk", "omega"])
        for i in range(dense.time.size):
            writer.writerow(
                FLOAT_FMT % val
                for val in (dense.time[i], dense.x[i], dense.y[i], dense.theta[i],
                            dense.v[i], dense.a[i], dense.jerk[i], dense.omega[i])
            )


def write_corridor_json(corridor: Corridor, path) -> None:
    """Polygons as counter-clockwise vertex lists plus the state assignment."""
    payload = {
        "polygons": [
            {
                "vertices": [[float(x), float(y)] for x, y in poly.vertices()],
                "states": [int(k) for k in states],
            }
            for poly, states in zip(corridor.polygons, corridor.assignment)
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
