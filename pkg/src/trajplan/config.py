"""Planner configuration: limits, robot geometry, penalty weights, solver
options, and the flat `key = value` config file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    pass


@dataclass
class PlannerConfig:
    # kinematic/dynamic limits
    v_min: float = -3.0
    v_max: float = 3.0
    a_min: float = -2.0
    a_max: float = 2.0
    kappa_max: float = 0.5

    # robot geometry: two covering discs of radius disc_radius, front disc
    # center offset disc_offset along the heading
    disc_radius: float = 0.5
    disc_offset: float = 0.8

    # penalty weights
    lambda_o: float = 1.0
    lambda_eq: float = 1e3
    lambda_ie: float = 1e3
    delta_t: float = 1.0
    delta_kappa: float = 1.0
    delta_s: float = 10.0
    delta_v: float = 1.0
    x_j: float = 1e-2  # knee between cubic and quadratic penalty branches
    # the corridor half-spaces are tightened by this margin inside the safety
    # penalty; the shallow cubic branch then equilibrates within the margin
    # instead of outside the true boundary
    safety_margin: float = 1e-2

    # time-interval box
    t_min: float = 1e-2
    t_max: float = 5.0

    # solver options; the penalty problem is ill-conditioned at high lambda,
    # a deep history pays for itself many times over
    max_iterations: int = 2000
    history_size: int = 15
    gradient_tolerance: float = 1e-5
    # the penalty problem has a long shallow valley in the time intervals;
    # stop once a full quasi-Newton step improves the objective by less than
    # this relative amount
    objective_tolerance: float = 1e-5
    # when a warm start already satisfies the residual targets only marginal
    # smoothness gains remain, so replanning stops at a much looser
    # stagnation threshold
    warm_objective_tolerance: float = 1e-3
    # near-exact line searches cost an extra evaluation per iteration and do
    # not pay off on the penalty landscape
    line_search_refine: bool = False

    # penalty continuation: extra solves with scaled-up lambda_eq/lambda_ie
    # when residual targets are unmet
    penalty_rounds: int = 5
    penalty_growth: float = 10.0
    equality_target: float = 1e-3
    safety_target: float = 1e-3

    # pipeline
    resample_spacing: float = 1.0
    corridor_max_size: float = 10.0
    sample_dt: float = 0.1

    # front-end search
    search_step_factor: float = 1.5
    search_theta_bins: int = 72
    search_reverse_cost: float = 2.0
    search_switch_cost: float = 2.0
    search_eps_position: float = 0.3
    search_eps_heading_deg: float = 10.0
    search_allow_reverse: bool = True

    def __post_init__(self):
        if not (self.v_min < 0 < self.v_max):
            raise ConfigError(f"require v_min < 0 < v_max, got [{self.v_min}, {self.v_max}]")
        if not (self.a_min < 0 < self.a_max):
            raise ConfigError(f"require a_min < 0 < a_max, got [{self.a_min}, {self.a_max}]")
        if self.kappa_max <= 0 or self.x_j <= 0 or self.t_min <= 0:
            raise ConfigError("kappa_max, x_j and t_min must be positive")
        if self.t_max <= self.t_min:
            raise ConfigError("t_max must exceed t_min")
        for name in ("lambda_o", "lambda_eq", "lambda_ie", "delta_t",
                     "delta_kappa", "delta_s", "delta_v"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")

    def search_params(self):
        from .hybrid_astar import SearchParams

        return SearchParams(
            kappa_max=self.kappa_max,
            disc_offset=self.disc_offset,
            step_factor=self.search_step_factor,
            theta_bins=self.search_theta_bins,
            reverse_cost=self.search_reverse_cost,
            switch_cost=self.search_switch_cost,
            eps_position=self.search_eps_position,
            eps_heading=math.radians(self.search_eps_heading_deg),
            allow_reverse=self.search_allow_reverse,
        )

    def replace(self, **overrides) -> "PlannerConfig":
        return dataclasses.replace(self, **overrides)


_FIELDS = {f.name: f.type for f in dataclasses.fields(PlannerConfig)}


def parse_overrides(pairs: dict[str, str]) -> dict:
    """Convert string key/value pairs to typed PlannerConfig overrides.
    Unknown keys are errors."""
    out = {}
    for key, value in pairs.items():
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        ftype = _FIELDS[key]
        try:
            if ftype == "bool":
                if value.lower() in ("true", "1", "yes"):
                    out[key] = True
                elif value.lower() in ("false", "0", "no"):
                    out[key] = False
                else:
                    raise ValueError(f"not a boolean: {value!r}")
            elif ftype == "int":
                out[key] = int(value)
            else:
                out[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    return out


def load_config(path, base: PlannerConfig | None = None) -> PlannerConfig:
    """Read a flat `key = value` config file. Lines starting '#' are ignored."""
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    overrides = parse_overrides(pairs)
    base = base or PlannerConfig()
    return base.replace(**overrides)
