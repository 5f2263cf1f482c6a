"""Baseline-versus-composite comparison over one or more seeds."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .. import dnn
from ..plant import TwoLinkPlant
from .config import SimConfig
from .engine import SimulationDiverged, initial_weights, run_simulation
from .metrics import METRIC_NAMES, MetricsReport, run_metrics


def run_one(cfg: SimConfig, out_dir=None, plant=None, theta0=None):
    """One run; writes ``<controller>_seed<seed>.csv`` and the final weights
    when ``out_dir`` is given. Returns ``(log, metrics or None)``; a diverged
    run returns its partial log and no metrics."""
    plant = plant if plant is not None else TwoLinkPlant(cfg.plant)
    try:
        log = run_simulation(cfg, plant=plant, theta0=theta0)
    except SimulationDiverged as exc:
        log = exc.log
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{cfg.controller}_seed{cfg.seed}"
        log.write_csv(out / f"{stem}.csv")
        dnn.save_weights(out / f"{stem}_theta.json", cfg.dnn, log.theta_final)
    metrics = run_metrics(log, cfg, plant) if log.status == "ok" else None
    return log, metrics


def seed_list(cfg: SimConfig, n_seeds: int) -> list[int]:
    """``n_seeds`` consecutive seeds starting at ``cfg.seed``."""
    if n_seeds < 1:
        raise ValueError("need at least one seed")
    return [cfg.seed + k for k in range(n_seeds)]


def compare_experiment(cfg: SimConfig, seeds=None, out_dir=None, plant=None, controllers=None):
    """Run baseline and composite from the same initial weights for every seed.

    Returns ``(report, logs)`` with ``logs[(controller, seed)]``. If any run
    diverges the report is marked invalid and the failure recorded. With
    ``out_dir`` the per-run CSV logs and ``report.json`` are written there.
    ``controllers`` overrides the pair, e.g. ``("baseline", "baseline")`` for
    a self-comparison.
    """
    seeds = list(seeds) if seeds is not None else [cfg.seed]
    first, second = controllers or ("baseline", "composite")
    base = {k: [] for k in METRIC_NAMES}
    comp = {k: [] for k in METRIC_NAMES}
    logs, failures = {}, []
    for seed in seeds:
        theta0 = initial_weights(cfg.with_(seed=seed))
        results = []
        for slot, kind in (("baseline", first), ("composite", second)):
            run_cfg = cfg.with_(seed=seed, controller=kind)
            sub = None if out_dir is None else Path(out_dir) / slot
            log, metrics = run_one(run_cfg, sub, plant, theta0)
            logs[(slot, seed)] = log
            if metrics is None:
                failures.append({"seed": seed, "controller": kind, "message": log.message})
            results.append(metrics)
        if all(m is not None for m in results):
            for k in METRIC_NAMES:
                base[k].append(results[0][k])
                comp[k].append(results[1][k])
    report = MetricsReport(seeds, base, comp, valid=not failures, failures=failures)
    if out_dir is not None:
        write_report(Path(out_dir) / "report.json", report, cfg)
    return report, logs


def report_document(report: MetricsReport, cfg: SimConfig) -> dict:
    doc = report.to_dict()
    doc["config_hash"] = cfg.config_hash()
    doc["config"] = cfg.to_dict()
    return doc


def write_report(path, report: MetricsReport, cfg: SimConfig) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(report_document(report, cfg), indent=2, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
