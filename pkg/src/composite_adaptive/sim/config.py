"""Experiment configuration (single JSON document).

Top-level keys: ``plant``, ``gains``, ``dnn``, ``sim``, ``init``. Every key is
optional; missing values fall back to the defaults below.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..control_law import Gains
from ..dnn import DnnSpec
from ..plant import TwoLinkParams

CONTROLLERS = ("composite", "baseline")


class ConfigError(ValueError):
    pass


def default_dnn_spec() -> DnnSpec:
    return DnnSpec.uniform(input_size=4, hidden_layers=5, width=5, output_size=2)


@dataclass(frozen=True)
class SimConfig:
    duration: float = 100.0
    step: float = 1e-3
    controller: str = "composite"
    gains: Gains = field(default_factory=Gains)
    dnn: DnnSpec = field(default_factory=default_dnn_spec)
    plant: TwoLinkParams = field(default_factory=TwoLinkParams)
    seed: int = 0
    init_scale: float = 0.5
    x0: tuple[float, ...] = (1.0, -1.0)
    xdot0: tuple[float, ...] = (0.0, 0.0)
    f_hat0: str | tuple[float, ...] = "zero"
    decimation: int = 10
    window: tuple[float, float] = (50.0, 100.0)
    blowup: float = 1e6
    test_points: int = 100
    test_seed: int = 2024

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if not self.step > 0:
            raise ConfigError("step must be positive")
        if not self.duration >= self.step:
            raise ConfigError("duration must be at least one step")
        if self.decimation < 1:
            raise ConfigError("decimation must be >= 1")
        n_steps = self.duration / self.step
        if abs(n_steps - round(n_steps)) > 1e-6 * max(1.0, n_steps):
            raise ConfigError("duration must be an integer number of steps")
        if round(n_steps) % self.decimation:
            raise ConfigError("step count must be a multiple of the decimation")
        n = len(self.x0)
        if len(self.xdot0) != n:
            raise ConfigError("x0 and xdot0 must have equal length")
        if self.dnn.input_size != 2 * n or self.dnn.output_size != n:
            raise ConfigError("dnn must map R^2n -> R^n for the plant dimension n")
        if isinstance(self.f_hat0, str):
            if self.f_hat0 not in ("zero", "dnn"):
                raise ConfigError("init.observer.f_hat0 must be 'zero', 'dnn' or a vector")
        elif len(self.f_hat0) != n:
            raise ConfigError("init.observer.f_hat0 vector has wrong length")
        lo, hi = self.window
        if not 0 <= lo < hi:
            raise ConfigError(f"window {self.window} must satisfy 0 <= start < end")
        if not math.isfinite(self.blowup) or self.blowup <= 0:
            raise ConfigError("blowup bound must be positive and finite")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.step))

    def with_(self, **changes) -> "SimConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "plant": self.plant.to_dict(),
            "gains": self.gains.to_dict(),
            "dnn": self.dnn.to_dict(),
            "sim": {
                "duration": self.duration,
                "step": self.step,
                "controller": self.controller,
                "seed": self.seed,
                "window": list(self.window),
                "decimation": self.decimation,
                "blowup": self.blowup,
                "test_points": self.test_points,
                "test_seed": self.test_seed,
            },
            "init": {
                "x0": list(self.x0),
                "xdot0": list(self.xdot0),
                "theta_scale": self.init_scale,
                "observer": {
                    "f_hat0": self.f_hat0 if isinstance(self.f_hat0, str) else list(self.f_hat0)
                },
            },
        }

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, seed and controller excluded."""
        d = self.to_dict()
        d["sim"].pop("seed")
        d["sim"].pop("controller")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def config_from_dict(doc: dict) -> SimConfig:
    unknown = set(doc) - {"plant", "gains", "dnn", "sim", "init"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    kw = {}
    try:
        if "plant" in doc:
            kw["plant"] = TwoLinkParams.from_dict(doc["plant"])
        if "gains" in doc:
            kw["gains"] = Gains.from_dict(doc["gains"])
        if "dnn" in doc:
            d = dict(doc["dnn"])
            d.setdefault("input_size", 4)
            d.setdefault("output_size", 2)
            kw["dnn"] = DnnSpec.from_dict(d)
        sim = dict(doc.get("sim", {}))
        for key, cast in (
            ("duration", float), ("step", float), ("controller", str), ("seed", int),
            ("decimation", int), ("blowup", float), ("test_points", int), ("test_seed", int),
        ):
            if key in sim:
                kw[key] = cast(sim.pop(key))
        if "window" in sim:
            kw["window"] = tuple(float(v) for v in sim.pop("window"))
        if sim:
            raise ConfigError(f"unknown sim keys: {sorted(sim)}")
        init = dict(doc.get("init", {}))
        if "x0" in init:
            kw["x0"] = tuple(float(v) for v in init.pop("x0"))
        if "xdot0" in init:
            kw["xdot0"] = tuple(float(v) for v in init.pop("xdot0"))
        if "theta_scale" in init:
            kw["init_scale"] = float(init.pop("theta_scale"))
        obs = dict(init.pop("observer", {}))
        if "f_hat0" in obs:
            f0 = obs.pop("f_hat0")
            kw["f_hat0"] = f0 if isinstance(f0, str) else tuple(float(v) for v in f0)
        if obs or init:
            raise ConfigError(f"unknown init keys: {sorted(set(obs) | set(init))}")
        return SimConfig(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SimConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(doc)
