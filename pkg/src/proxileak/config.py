"""Scenario configuration: a flat ``key = value`` text format.

Lines are ``key = value``; blank lines and ``#`` comments are ignored.
``seed`` is mandatory; every other key has a documented default. Unknown
keys and out-of-range values fail with the offending line and field named.
The fully resolved configuration (defaults included) can be rendered back
out as a manifest, byte-stable for fixed inputs.

Keys (defaults in parentheses):

  seed                  int, required; master seed for everything random
  attack                localize | track | identify (localize)
  out_dir               artifact directory ("out")
  bbox                  lat_min,lon_min,lat_max,lon_max (41.35,2.10,41.45,2.25)
  n_users               population size (25)
  catalog_size          pages in the catalog (1000)
  zipf_s                rank-weight exponent for like sampling (1.0)
  mean_likes            mean per-user like count (3.0)
  n_categories          page categories (25)
  duration_s            scenario time span (86400)
  policy_preset         tinder|happn|lovoo|grindr|badoo|custom (custom)
  share_distance        bool (true)
  distance_quantum_m    floor-quantization step, 0 = exact (100)
  share_first_name      bool (true)
  birthdate_mode        exact|fuzzy_15d|hidden (fuzzy_15d)
  interests_mode        pages|categories|hidden (pages)
  share_social_id       bool (false)
  teleport_limit_m      max single move, inf = unlimited (inf)
  teleport_cooldown_s   wait that re-allows a long move (inf)
  trajectory            stationary|commuter|random_walk (stationary)
  commute_distance_m    home-work separation (5000)
  dwell_home_s / dwell_work_s / travel_s   commuter timing (28800/28800/1800)
  walk_step_m / walk_interval_s            random-walk parameters (500/600)
  trials                Monte Carlo repetitions for localize (1)
  probe_strategy        ring|adaptive|fixed_points (ring)
  probe_count           probes per fix (16)
  ring_radius_m         probe ring radius (1000)
  probe_center_offset_m distance of the attack's coarse prior from the
                        target (250)
  solver_norm           l1|l2 (l1)
  solver_max_iterations / solver_step_init_m / solver_tol_m  (200/500/0.01)
  track_interval_s / track_duration_s      fix cadence and span (3600/57600)
  poi_radius_m / poi_min_dwell_s           stay-point parameters (200/7200)
  identify_max_rounds / identify_batch_size / identify_victims (10/10/10)
  attacker_top_likes    attacker's initial likes = top-N pages (10)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

__all__ = ["ConfigError", "ScenarioConfig", "parse_scenario", "render_manifest",
           "SWEEPABLE_PARAMS"]

SWEEPABLE_PARAMS = ("distance_quantum_m", "probe_count", "identify_batch_size",
                    "interests_mode")


class ConfigError(ValueError):
    """Invalid scenario configuration; carries field and line context."""

    def __init__(self, message: str, field: str | None = None,
                 line: int | None = None):
        self.field = field
        self.line = line
        where = ""
        if line is not None:
            where += f"line {line}: "
        if field is not None:
            where += f"field {field!r}: "
        super().__init__(where + message)


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _float(raw: str) -> float:
    v = float(raw)
    if math.isnan(v):
        raise ValueError("NaN is not a valid value")
    return v


def _bbox(raw: str) -> tuple[float, float, float, float]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 4:
        raise ValueError("bbox needs lat_min,lon_min,lat_max,lon_max")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _choice(*options):
    def conv(raw: str) -> str:
        if raw not in options:
            raise ValueError(f"must be one of {', '.join(options)}: {raw!r}")
        return raw
    return conv


@dataclass
class ScenarioConfig:
    seed: int
    attack: str = "localize"
    out_dir: str = "out"
    bbox: tuple[float, float, float, float] = (41.35, 2.10, 41.45, 2.25)
    n_users: int = 25
    catalog_size: int = 1000
    zipf_s: float = 1.0
    mean_likes: float = 3.0
    n_categories: int = 25
    duration_s: float = 86_400.0
    policy_preset: str = "custom"
    share_distance: bool = True
    distance_quantum_m: float = 100.0
    share_first_name: bool = True
    birthdate_mode: str = "fuzzy_15d"
    interests_mode: str = "pages"
    share_social_id: bool = False
    teleport_limit_m: float = math.inf
    teleport_cooldown_s: float = math.inf
    trajectory: str = "stationary"
    commute_distance_m: float = 5000.0
    dwell_home_s: float = 28_800.0
    dwell_work_s: float = 28_800.0
    travel_s: float = 1800.0
    walk_step_m: float = 500.0
    walk_interval_s: float = 600.0
    trials: int = 1
    probe_strategy: str = "ring"
    probe_count: int = 16
    ring_radius_m: float = 1000.0
    probe_center_offset_m: float = 250.0
    solver_norm: str = "l1"
    solver_max_iterations: int = 200
    solver_step_init_m: float = 500.0
    solver_tol_m: float = 0.01
    track_interval_s: float = 3600.0
    track_duration_s: float = 57_600.0
    poi_radius_m: float = 200.0
    poi_min_dwell_s: float = 7200.0
    identify_max_rounds: int = 10
    identify_batch_size: int = 10
    identify_victims: int = 10
    attacker_top_likes: int = 10

POLICY_FIELDS = ("share_distance", "distance_quantum_m", "share_first_name",
                 "birthdate_mode", "interests_mode", "share_social_id")


_CONVERTERS = {
    "seed": int,
    "attack": _choice("localize", "track", "identify"),
    "out_dir": str,
    "bbox": _bbox,
    "n_users": int,
    "catalog_size": int,
    "zipf_s": _float,
    "mean_likes": _float,
    "n_categories": int,
    "duration_s": _float,
    "policy_preset": _choice("tinder", "happn", "lovoo", "grindr", "badoo",
                             "custom"),
    "share_distance": _bool,
    "distance_quantum_m": _float,
    "share_first_name": _bool,
    "birthdate_mode": _choice("exact", "fuzzy_15d", "hidden"),
    "interests_mode": _choice("pages", "categories", "hidden"),
    "share_social_id": _bool,
    "teleport_limit_m": _float,
    "teleport_cooldown_s": _float,
    "trajectory": _choice("stationary", "commuter", "random_walk"),
    "commute_distance_m": _float,
    "dwell_home_s": _float,
    "dwell_work_s": _float,
    "travel_s": _float,
    "walk_step_m": _float,
    "walk_interval_s": _float,
    "trials": int,
    "probe_strategy": _choice("ring", "adaptive", "fixed_points"),
    "probe_count": int,
    "ring_radius_m": _float,
    "probe_center_offset_m": _float,
    "solver_norm": _choice("l1", "l2"),
    "solver_max_iterations": int,
    "solver_step_init_m": _float,
    "solver_tol_m": _float,
    "track_interval_s": _float,
    "track_duration_s": _float,
    "poi_radius_m": _float,
    "poi_min_dwell_s": _float,
    "identify_max_rounds": int,
    "identify_batch_size": int,
    "identify_victims": int,
    "attacker_top_likes": int,
}

# (field, predicate description, predicate)
_RANGE_CHECKS = [
    ("n_users", ">= 1", lambda v: v >= 1),
    ("catalog_size", ">= 1", lambda v: v >= 1),
    ("zipf_s", "> 0", lambda v: v > 0),
    ("mean_likes", ">= 0", lambda v: v >= 0),
    ("n_categories", ">= 1", lambda v: v >= 1),
    ("duration_s", "> 0", lambda v: v > 0),
    ("distance_quantum_m", ">= 0", lambda v: v >= 0),
    ("teleport_limit_m", "> 0", lambda v: v > 0),
    ("teleport_cooldown_s", ">= 0", lambda v: v >= 0),
    ("trials", ">= 1", lambda v: v >= 1),
    ("probe_count", ">= 3", lambda v: v >= 3),
    ("ring_radius_m", "> 0", lambda v: v > 0),
    ("probe_center_offset_m", ">= 0", lambda v: v >= 0),
    ("solver_max_iterations", ">= 1", lambda v: v >= 1),
    ("solver_step_init_m", "> 0", lambda v: v > 0),
    ("solver_tol_m", "> 0", lambda v: v > 0),
    ("track_interval_s", "> 0", lambda v: v > 0),
    ("track_duration_s", ">= 0", lambda v: v >= 0),
    ("poi_radius_m", "> 0", lambda v: v > 0),
    ("poi_min_dwell_s", ">= 0", lambda v: v >= 0),
    ("identify_max_rounds", ">= 1", lambda v: v >= 1),
    ("identify_batch_size", ">= 1", lambda v: v >= 1),
    ("identify_victims", ">= 1", lambda v: v >= 1),
    ("attacker_top_likes", ">= 0", lambda v: v >= 0),
    ("commute_distance_m", "> 0", lambda v: v > 0),
    ("dwell_home_s", "> 0", lambda v: v > 0),
    ("dwell_work_s", "> 0", lambda v: v > 0),
    ("travel_s", "> 0", lambda v: v > 0),
    ("walk_step_m", "> 0", lambda v: v > 0),
    ("walk_interval_s", "> 0", lambda v: v > 0),
]


def _validate(cfg: ScenarioConfig) -> ScenarioConfig:
    for name, desc, pred in _RANGE_CHECKS:
        if not pred(getattr(cfg, name)):
            raise ConfigError(f"must be {desc}, got {getattr(cfg, name)!r}",
                              field=name)
    lat0, lon0, lat1, lon1 = cfg.bbox
    if not (lat0 < lat1 and lon0 < lon1):
        raise ConfigError("bounding box must have positive extent", field="bbox")
    return cfg


def convert_value(key: str, raw: str):
    """Parse one raw string value for a known config key."""
    if key not in _CONVERTERS:
        raise ConfigError(f"unknown key {key!r}", field=key)
    try:
        return _CONVERTERS[key](raw)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc), field=key) from None


def parse_scenario(source: str | Path, overrides: dict[str, str] | None = None
                   ) -> ScenarioConfig:
    """Parse a scenario file (or literal text) and apply CLI overrides."""
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    else:
        text = source
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.split("#", 1)[0].strip()
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", field=key, line=lineno)
        try:
            raw[key] = _CONVERTERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), field=key, line=lineno) from None
    for key, value in (overrides or {}).items():
        if key not in _CONVERTERS:
            raise ConfigError(f"unknown key {key!r}", field=key)
        try:
            raw[key] = _CONVERTERS[key](value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc), field=key) from None
    if "seed" not in raw:
        raise ConfigError("mandatory field is missing", field="seed")
    cfg = ScenarioConfig(**raw)  # type: ignore[arg-type]
    # Resolve the policy preset: it supplies defaults for any policy field
    # the file or overrides did not set explicitly, so the manifest echoes
    # effective values.
    if cfg.policy_preset != "custom":
        from .world import POLICY_PRESETS
        preset = POLICY_PRESETS[cfg.policy_preset]
        for name in POLICY_FIELDS:
            if name not in raw:
                setattr(cfg, name, getattr(preset, name))
    return _validate(cfg)


def render_manifest(cfg: ScenarioConfig) -> str:
    """The fully resolved configuration, one sorted ``key = value`` per line."""
    lines = []
    for f in sorted(fields(ScenarioConfig), key=lambda f: f.name):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(repr(float(x)) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
