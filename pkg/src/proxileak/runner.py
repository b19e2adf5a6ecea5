"""Scenario execution: build a world from a config, run an attack pipeline,
emit artifacts.

Every run writes ``manifest.cfg`` (the fully resolved configuration), the
attack's CSV/SVG artifacts, and the trace's violation classification into
the output directory. Everything except measured wall-clock columns is a
pure function of (config, seed).
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

from . import report
from .attacker import Attacker, ProbePlan, extract_pois, track_to_csv
from .config import ScenarioConfig, render_manifest
from .geo import EnuPoint, GeoPoint, from_enu, haversine_m, to_enu
from .mlat import SolverConfig
from .report import AttackTrace, TraceEvent
from .service import ProximityService
from .socialgraph import identification_to_csv, identify
from .world import (BoundingBox, DisclosurePolicy, SimUser, World,
                    commuter_trajectory, derive_seed, generate_population,
                    random_walk_trajectory, stationary_trajectory)

__all__ = ["RunResult", "build_policy", "build_world", "run_scenario",
           "run_sweep"]

ATTACKER_ID = "attacker"
TARGET_ID = "u00000"


@dataclass
class RunResult:
    out_dir: Path
    metrics: dict[str, float]
    paths: list[Path] = field(default_factory=list)


def build_policy(cfg: ScenarioConfig) -> DisclosurePolicy:
    return DisclosurePolicy(
        share_distance=cfg.share_distance,
        distance_quantum_m=cfg.distance_quantum_m,
        share_first_name=cfg.share_first_name,
        birthdate_mode=cfg.birthdate_mode,
        interests_mode=cfg.interests_mode,
        share_social_id=cfg.share_social_id,
    )


def _scenario_span(cfg: ScenarioConfig) -> float:
    span = cfg.duration_s
    if cfg.attack == "track":
        span = max(span, cfg.track_duration_s + cfg.track_interval_s)
    if cfg.trajectory == "commuter":
        span = max(span, cfg.dwell_home_s + cfg.travel_s + cfg.dwell_work_s)
    return span


def build_world(cfg: ScenarioConfig, seed: int | None = None) -> World:
    """Population, the target's trajectory, and the attacker account."""
    seed = cfg.seed if seed is None else seed
    bbox = BoundingBox(*cfg.bbox)
    span = _scenario_span(cfg)
    world = generate_population(cfg.n_users, cfg.catalog_size, cfg.zipf_s,
                                seed, bbox=bbox, mean_likes=cfg.mean_likes,
                                n_categories=cfg.n_categories, duration_s=span)
    rng = random.Random(derive_seed(seed, "target-trajectory"))
    target = world.user(TARGET_ID)
    home = target.trajectory.position_at(0.0)
    if cfg.trajectory == "commuter":
        ang = rng.uniform(0.0, 2.0 * math.pi)
        work = from_enu(EnuPoint(cfg.commute_distance_m * math.cos(ang),
                                 cfg.commute_distance_m * math.sin(ang), home))
        # Pad the final dwell so the trajectory covers the whole scenario.
        tail = max(cfg.dwell_work_s,
                   span - cfg.dwell_home_s - cfg.travel_s)
        target.trajectory = commuter_trajectory(home, work, cfg.dwell_home_s,
                                                cfg.travel_s, tail)
    elif cfg.trajectory == "random_walk":
        n_steps = max(1, math.ceil(span / cfg.walk_interval_s))
        target.trajectory = random_walk_trajectory(home, cfg.walk_step_m,
                                                   cfg.walk_interval_s, n_steps,
                                                   rng, bbox)
    world.add_user(SimUser(
        user_id=ATTACKER_ID,
        first_name="Mallory",
        true_birthdate=date(1990, 1, 1),
        trajectory=stationary_trajectory(bbox.center, span),
        likes=set(world.catalog.top(cfg.attacker_top_likes)),
        social_id="fb-attacker",
    ))
    return world


def _bbox_cover_radius(world: World) -> float:
    corner = GeoPoint(world.bbox.lat_min, world.bbox.lon_min)
    other = GeoPoint(world.bbox.lat_max, world.bbox.lon_max)
    return haversine_m(corner, other) + 1000.0


def _solver_config(cfg: ScenarioConfig, seed: int) -> SolverConfig:
    return SolverConfig(norm=cfg.solver_norm,
                        max_iterations=cfg.solver_max_iterations,
                        step_init_m=cfg.solver_step_init_m,
                        tol_m=cfg.solver_tol_m,
                        seed=derive_seed(seed, "solver"))


def _probe_plan(cfg: ScenarioConfig, center: GeoPoint, seed: int) -> ProbePlan:
    rng = random.Random(derive_seed(seed, "plan"))
    return ProbePlan(strategy=cfg.probe_strategy, count=cfg.probe_count,
                     ring_radius_m=cfg.ring_radius_m, center=center,
                     angle0_rad=rng.uniform(0.0, 2.0 * math.pi))


def _coarse_prior(truth: GeoPoint, offset_m: float, seed: int) -> GeoPoint:
    # The scenario hands the attacker an imperfect starting point, standing
    # in for whatever coarse acquisition preceded the attack.
    rng = random.Random(derive_seed(seed, "prior"))
    ang = rng.uniform(0.0, 2.0 * math.pi)
    return from_enu(EnuPoint(offset_m * math.cos(ang),
                             offset_m * math.sin(ang), truth))


def _write_summary(metrics: dict[str, float], out_dir: Path) -> Path:
    lines = ["metric,value"]
    for k in sorted(metrics):
        v = metrics[k]
        lines.append(f"{k},{v!r}" if isinstance(v, float) else f"{k},{v}")
    path = out_dir / "summary.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> RunResult:
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.cfg").write_text(render_manifest(cfg), encoding="utf-8",
                                      newline="\n")
    if cfg.attack == "localize":
        result = _run_localize(cfg, out)
    elif cfg.attack == "track":
        result = _run_track(cfg, out)
    else:
        result = _run_identify(cfg, out)
    result.paths.append(out / "manifest.cfg")
    result.paths.append(_write_summary(result.metrics, out))
    return result


def _run_localize(cfg: ScenarioConfig, out: Path) -> RunResult:
    rows = []
    first_samples = first_estimate = first_truth_xy = None
    trace = AttackTrace()
    for trial in range(cfg.trials):
        tseed = derive_seed(cfg.seed, "trial", trial)
        world = build_world(cfg, seed=tseed)
        service = ProximityService(world, build_policy(cfg),
                                   teleport_limit_m=cfg.teleport_limit_m,
                                   teleport_cooldown_s=cfg.teleport_cooldown_s,
                                   scenario_seed=tseed)
        session = service.login(ATTACKER_ID)
        truth = world.true_position_of(TARGET_ID)
        prior = _coarse_prior(truth, cfg.probe_center_offset_m, tseed)
        # The attacker anchors its working plane at its coarse prior, which
        # keeps the flat-plane model tight around the scene.
        agent = Attacker(service, session, ref=prior,
                         trace=trace if trial == 0 else AttackTrace(),
                         advance=world.advance)
        agent.discover(_bbox_cover_radius(world))
        est = agent.localize(TARGET_ID, _probe_plan(cfg, prior, tseed),
                             _solver_config(cfg, tseed))
        err = haversine_m(from_enu(est.p_hat), truth)
        rows.append((trial, tseed, err, est.residual, est.iterations_used))
        if trial == 0:
            first_samples = agent.last_samples
            first_estimate = est
            t_enu = to_enu(truth, agent.ref)
            first_truth_xy = (t_enu.x_m, t_enu.y_m)
    lines = ["trial,seed,error_m,residual_m,iterations"]
    for trial, seed, err, res, iters in rows:
        lines.append(f"{trial},{seed},{err!r},{res!r},{iters}")
    (out / "localize_trials.csv").write_text("\n".join(lines) + "\n",
                                             encoding="utf-8", newline="\n")
    errors = [r[2] for r in rows]
    trace.append(TraceEvent("export", trace.events[-1].t if trace.events else 0.0,
                            None, {"artifact": "localize_trials.csv"}))
    paths = report.emit(out, probe_map=(first_samples, first_estimate,
                                        first_truth_xy),
                        violations=report.classify(trace))
    metrics = {
        "trials": cfg.trials,
        "median_error_m": statistics.median(errors),
        "mean_error_m": statistics.fmean(errors),
        "max_error_m": max(errors),
    }
    return RunResult(out, metrics, [out / "localize_trials.csv"] + paths)


def _run_track(cfg: ScenarioConfig, out: Path) -> RunResult:
    world = build_world(cfg)
    service = ProximityService(world, build_policy(cfg),
                               teleport_limit_m=cfg.teleport_limit_m,
                               teleport_cooldown_s=cfg.teleport_cooldown_s,
                               scenario_seed=cfg.seed)
    session = service.login(ATTACKER_ID)
    trace = AttackTrace()
    truth0 = world.true_position_of(TARGET_ID)
    prior = _coarse_prior(truth0, cfg.probe_center_offset_m, cfg.seed)
    agent = Attacker(service, session, ref=prior, trace=trace,
                     advance=world.advance)
    agent.discover(_bbox_cover_radius(world))
    record = agent.track(TARGET_ID, cfg.track_interval_s, cfg.track_duration_s,
                         _probe_plan(cfg, prior, cfg.seed),
                         _solver_config(cfg, cfg.seed))
    record.pois = extract_pois(record, cfg.poi_radius_m, cfg.poi_min_dwell_s)
    with open(out / "track.csv", "w", encoding="utf-8", newline="\n") as fp:
        track_to_csv(record, fp)
    lines = ["x_m,y_m,dwell_s,t_start,t_end,n_fixes"]
    for p in record.pois:
        lines.append(f"{p.center.x_m!r},{p.center.y_m!r},{p.dwell_s!r},"
                     f"{p.t_start!r},{p.t_end!r},{p.n_fixes}")
    (out / "pois.csv").write_text("\n".join(lines) + "\n", encoding="utf-8",
                                  newline="\n")
    trace.append(TraceEvent("export", trace.events[-1].t if trace.events else 0.0,
                            None, {"artifact": "track.csv"}))
    paths = report.emit(out, violations=report.classify(trace))
    metrics = {
        "n_fixes": len(record.estimates),
        "n_gaps": len(record.gaps),
        "n_pois": len(record.pois),
    }
    # Distance of each POI to the nearest trajectory waypoint (ground truth).
    if record.pois:
        waypoints = world.user(TARGET_ID).trajectory.waypoints
        errs = [min(haversine_m(from_enu(p.center), wp) for _, wp in waypoints)
                for p in record.pois]
        metrics["poi_error_max_m"] = max(errs)
    return RunResult(out, metrics,
                     [out / "track.csv", out / "pois.csv"] + paths)


def _run_identify(cfg: ScenarioConfig, out: Path) -> RunResult:
    world = build_world(cfg)
    service = ProximityService(world, build_policy(cfg),
                               teleport_limit_m=cfg.teleport_limit_m,
                               teleport_cooldown_s=cfg.teleport_cooldown_s,
                               scenario_seed=cfg.seed)
    session = service.login(ATTACKER_ID)
    trace = AttackTrace()
    agent = Attacker(service, session, ref=world.ref, trace=trace,
                     advance=world.advance)
    agent.discover(_bbox_cover_radius(world))
    population = [u for u in world.users.values() if u.user_id != ATTACKER_ID]
    initial_likes = set(world.user(ATTACKER_ID).likes)
    victim_ids = [u.user_id for u in population][:cfg.identify_victims]
    rows, pool_rows, hits = [], [], 0
    for vid in victim_ids:
        world.users[ATTACKER_ID].likes = set(initial_likes)
        view = service.profile(session, vid)

        def like_and_refresh(pages: set[str], _vid=vid):
            world.add_likes(ATTACKER_ID, pages)
            return service.profile(session, _vid)

        res = identify(view, population,
                       max_rounds=cfg.identify_max_rounds,
                       batch_size=cfg.identify_batch_size,
                       like_and_refresh=like_and_refresh,
                       interests_are_pages=(cfg.interests_mode == "pages"),
                       birthdate_is_fuzzy=(cfg.birthdate_mode == "fuzzy_15d"),
                       trace=trace)
        vseed = derive_seed(cfg.seed, "victim", vid)
        rows.append((vseed, res))
        pool_rows += [(vid, rnd, size) for rnd, size in enumerate(res.pool_sizes)]
        hits += int(res.identified and res.social_id == world.user(vid).social_id)
    with open(out / "identification.csv", "w", encoding="utf-8", newline="\n") as fp:
        identification_to_csv(rows, fp)
    trace.append(TraceEvent("export", trace.events[-1].t if trace.events else 0.0,
                            None, {"artifact": "identification.csv"}))
    paths = report.emit(out, pool_rows=pool_rows,
                        violations=report.classify(trace))
    metrics = {
        "victims": len(victim_ids),
        "identification_rate": hits / len(victim_ids),
        "mean_rounds": statistics.fmean(r.rounds_used for _, r in rows),
        "mean_final_pool": statistics.fmean(r.pool_sizes[-1] for _, r in rows),
    }
    return RunResult(out, metrics, [out / "identification.csv"] + paths)


def run_sweep(cfg: ScenarioConfig, param: str, values: list[str],
              out_dir: str | Path | None = None, parallel: int = 1) -> RunResult:
    """Run the scenario once per value, aggregate headline metrics."""
    from .config import SWEEPABLE_PARAMS, ConfigError, convert_value

    if param not in SWEEPABLE_PARAMS:
        raise ConfigError(f"not sweepable (choose from {', '.join(SWEEPABLE_PARAMS)})",
                          field=param)
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for v in values:
        sub = dict_replace(cfg, param, convert_value(param, v))
        jobs.append((v, sub, out / f"{param}={v}"))
    if parallel > 1:
        import multiprocessing

        with multiprocessing.Pool(parallel) as pool:
            results = pool.starmap(_sweep_job, jobs)
    else:
        results = [_sweep_job(*j) for j in jobs]

    metric_keys = sorted({k for _, m in results for k in m})
    lines = ["param,value," + ",".join(metric_keys)]
    for (v, _, _), (_, metrics) in zip(jobs, results):
        cells = [repr(metrics[k]) if isinstance(metrics.get(k), float)
                 else str(metrics.get(k, "")) for k in metric_keys]
        lines.append(f"{param},{v}," + ",".join(cells))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8",
                                   newline="\n")
    paths = [out / "sweep.csv"]
    if param == "distance_quantum_m" and cfg.attack == "localize":
        rows = [(float(v), m["median_error_m"], m["mean_error_m"], int(m["trials"]))
                for (v, _, _), (_, m) in zip(jobs, results)]
        paths += report.write_error_vs_quantum(rows, out)
    agg = {"runs": len(values)}
    return RunResult(out, agg, paths)


def dict_replace(cfg: ScenarioConfig, name: str, value) -> ScenarioConfig:
    import copy

    new = copy.deepcopy(cfg)
    setattr(new, name, value)
    return new


def _sweep_job(value: str, cfg: ScenarioConfig, out: Path):
    result = run_scenario(cfg, out)
    return value, result.metrics
