"""Steady-state RMS metrics and the off-trajectory test set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import dnn


def rms_metric(t, series, window, degrees=False) -> float:
    """``sqrt(mean ||sample||^2)`` over samples with ``window[0] <= t <= window[1]``.

    ``series`` is ``(rows,)`` of norms or ``(rows, n)`` of vectors. With
    ``degrees`` the samples are converted from radians first.
    """
    t = np.asarray(t, dtype=float)
    series = np.asarray(series, dtype=float)
    lo, hi = window
    mask = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    if not mask.any():
        raise ValueError(f"no samples in window [{lo}, {hi}]")
    vals = series[mask]
    if degrees:
        vals = np.rad2deg(vals)
    sq = vals ** 2 if vals.ndim == 1 else np.sum(vals ** 2, axis=1)
    return float(np.sqrt(np.mean(sq)))


def test_points(n_points, dim, seed, half_width=0.25) -> np.ndarray:
    """``n_points`` samples of U(-half_width, half_width)^dim."""
    return np.random.default_rng(seed).uniform(-half_width, half_width, size=(n_points, dim))


def test_set_eval(theta, plant, spec: dnn.DnnSpec, n_points=100, seed=0) -> float:
    """RMS of ``||f(x, xdot) - Phi([x; xdot], theta)||`` over a random test set."""
    n = spec.output_size
    pts = test_points(n_points, 2 * n, seed)
    sq = [
        np.sum((plant.drift(p[:n], p[n:]) - dnn.forward(spec, theta, p)) ** 2)
        for p in pts
    ]
    return float(np.sqrt(np.mean(sq)))


def percent_decrease(baseline, composite) -> float:
    return 100.0 * (baseline - composite) / baseline


METRIC_NAMES = ("e_rms_deg", "approx_rms_traj", "approx_rms_test")


def run_metrics(log, cfg, plant) -> dict:
    """The three comparison metrics for one finished run."""
    return {
        "e_rms_deg": rms_metric(log.t, log["e"], cfg.window, degrees=True),
        "approx_rms_traj": rms_metric(log.t, log["approx_err"], cfg.window),
        "approx_rms_test": test_set_eval(
            log.theta_final, plant, cfg.dnn, cfg.test_points, cfg.test_seed
        ),
    }


@dataclass
class MetricsReport:
    """Per-seed metrics of both controllers and the resulting percent decreases.

    ``median_decrease`` is the median over seeds of the per-seed decrease.
    """

    seeds: list
    baseline: dict
    composite: dict
    valid: bool = True
    failures: list = None

    @property
    def decrease(self) -> dict:
        return {
            k: [percent_decrease(b, c) for b, c in zip(self.baseline[k], self.composite[k])]
            for k in METRIC_NAMES
        }

    @property
    def median_decrease(self) -> dict:
        return {k: float(np.median(v)) for k, v in self.decrease.items()}

    def medians(self, which) -> dict:
        table = self.baseline if which == "baseline" else self.composite
        return {k: float(np.median(table[k])) for k in METRIC_NAMES}

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "failures": self.failures or [],
            "seeds": list(self.seeds),
            "baseline": {k: list(map(float, v)) for k, v in self.baseline.items()},
            "composite": {k: list(map(float, v)) for k, v in self.composite.items()},
            "percent_decrease": self.decrease if self.valid else {},
            "median_baseline": self.medians("baseline") if self.valid else {},
            "median_composite": self.medians("composite") if self.valid else {},
            "median_percent_decrease": self.median_decrease if self.valid else {},
        }
