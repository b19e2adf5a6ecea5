"""Command-line entry points.

  proxileak run <cfg> [--seed N] [--out DIR] [--set key=value ...]
  proxileak serve <cfg> --port P
  proxileak sweep <cfg> --param K --values a,b,c [--parallel N] [...]

Exit codes: 0 success, 2 configuration error, 3 attack/runtime error.
The output directory resolves as --out, else $PROXILEAK_OUT, else the
config's ``out_dir``.
"""

from __future__ import annotations

import argparse
import os
import signal
import sys
from pathlib import Path

from .config import ConfigError, parse_scenario
from .runner import build_policy, build_world, run_scenario, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

OUT_ENV = "PROXILEAK_OUT"


def _parse_sets(values: list[str]) -> dict[str, str]:
    out = {}
    for item in values:
        if "=" not in item:
            raise ConfigError("expected key=value", field=item)
        key, _, val = item.partition("=")
        out[key.strip()] = val.strip()
    return out


def _load(args) -> tuple:
    overrides = _parse_sets(args.set or [])
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = parse_scenario(Path(args.config), overrides)
    out = args.out or os.environ.get(OUT_ENV) or cfg.out_dir
    return cfg, out


def _cmd_run(args) -> int:
    cfg, out = _load(args)
    result = run_scenario(cfg, out)
    for key in sorted(result.metrics):
        print(f"{key} = {result.metrics[key]}")
    print(f"artifacts written to {result.out_dir}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg, out = _load(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("no sweep values given", field="--values")
    result = run_sweep(cfg, args.param, values, out, parallel=args.parallel)
    print(f"swept {args.param} over {len(values)} values; "
          f"aggregate at {result.out_dir / 'sweep.csv'}")
    return EXIT_OK


def _cmd_serve(args) -> int:
    from .service import ProximityService
    from .tcp import ServiceServer

    cfg, _ = _load(args)
    world = build_world(cfg)
    service = ProximityService(world, build_policy(cfg),
                               teleport_limit_m=cfg.teleport_limit_m,
                               teleport_cooldown_s=cfg.teleport_cooldown_s,
                               scenario_seed=cfg.seed)
    try:
        server = ServiceServer(service, port=args.port)
    except OSError as exc:
        print(f"bind failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    def _stop(signum, frame):
        # shutdown() blocks until serve_forever exits, so it must not run on
        # the thread that is inside serve_forever (this handler's thread).
        import threading

        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, _stop)
    signal.signal(signal.SIGTERM, _stop)
    print(f"listening on port {server.port}", flush=True)
    server.serve_forever(poll_interval=0.1)
    server.server_close()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="proxileak", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one attack scenario")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_run.set_defaults(func=_cmd_run)

    p_serve = sub.add_parser("serve", help="serve the JSON-lines protocol")
    p_serve.add_argument("config")
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--seed", type=int)
    p_serve.add_argument("--out")
    p_serve.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_serve.set_defaults(func=_cmd_serve)

    p_sweep = sub.add_parser("sweep", help="run a scenario across parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True)
    p_sweep.add_argument("--values", required=True)
    p_sweep.add_argument("--parallel", type=int, default=1)
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
