"""Command-line harness: ``simulate``, ``compare`` and ``testgen``.

Exit codes: 0 success, 2 a run diverged, 3 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import dnn
from .plant import TwoLinkPlant
from .sim import ConfigError, SimConfig, load_config
from .sim.experiment import _json_default, compare_experiment, run_one, seed_list, write_report
from .sim.metrics import test_set_eval

EXIT_OK, EXIT_DIVERGED, EXIT_CONFIG = 0, 2, 3

log = logging.getLogger("composite_adaptive")


def _config(path) -> SimConfig:
    return load_config(path) if path else SimConfig()


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    cfg = cfg.with_(controller=args.controller or cfg.controller, seed=cfg.seed if args.seed is None else args.seed)
    t0 = time.perf_counter()
    run, metrics = run_one(cfg, args.out)
    log.info("%s seed %d finished in %.1f s (%s)", cfg.controller, cfg.seed, time.perf_counter() - t0, run.status)
    doc = {
        "controller": cfg.controller,
        "seed": cfg.seed,
        "status": run.status,
        "message": run.message,
        "config_hash": cfg.config_hash(),
        "metrics": metrics,
    }
    Path(args.out, f"{cfg.controller}_seed{cfg.seed}.json").write_text(
        json.dumps(doc, indent=2, default=_json_default) + "\n"
    )
    print(json.dumps(doc, default=_json_default))
    return EXIT_OK if run.status == "ok" else EXIT_DIVERGED


def cmd_compare(args) -> int:
    cfg = _config(args.config)
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    seeds = seed_list(cfg, args.seeds)
    t0 = time.perf_counter()
    report, _ = compare_experiment(cfg, seeds, args.out)
    log.info("compared %d seed(s) in %.1f s", len(seeds), time.perf_counter() - t0)
    doc = report.to_dict()
    if report.valid:
        for name, value in report.median_decrease.items():
            print(f"{name:>16s}: median decrease {value:7.2f} %")
    else:
        print("comparison invalid:", json.dumps(doc["failures"]))
    return EXIT_OK if report.valid else EXIT_DIVERGED


def cmd_testgen(args) -> int:
    cfg = _config(args.config)
    try:
        spec, theta = dnn.load_weights(args.weights, cfg.dnn)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot load weights {args.weights}: {exc}") from exc
    plant = TwoLinkPlant(cfg.plant)
    rms = test_set_eval(theta, plant, spec, args.points, args.seed)
    print(json.dumps({"approx_rms_test": rms, "points": args.points, "seed": args.seed}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="composite-adaptive", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one controller and write its CSV log")
    p.add_argument("--config", type=Path)
    p.add_argument("--controller", choices=("composite", "baseline"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="baseline vs composite over several seeds")
    p.add_argument("--config", type=Path)
    p.add_argument("--seeds", type=int, default=5, help="number of seeds, counted up from the config seed")
    p.add_argument("--seed", type=int, help="first seed (overrides the config)")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("testgen", help="test-set approximation error of saved weights")
    p.add_argument("--weights", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_testgen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        if getattr(args, "seed", None) is not None and args.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if getattr(args, "out", None) is not None:
            args.out.mkdir(parents=True, exist_ok=True)
        return args.func(args)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
