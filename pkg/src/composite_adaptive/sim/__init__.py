from .config import ConfigError, SimConfig, load_config
from .engine import SimLog, SimulationDiverged, run_simulation
from .integrator import rk4_step

__all__ = [
    "ConfigError",
    "SimConfig",
    "SimLog",
    "SimulationDiverged",
    "load_config",
    "rk4_step",
    "run_simulation",
]
