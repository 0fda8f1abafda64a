"""Co-propagation model for a 1310 nm decoy-state BB84 channel and a C-band DWDM comb."""
from .errors import ConfigError, DomainError
from .optics import FiberLink, WdmComb, aggregate_power, build_reference_comb, dbm_to_mw, mw_to_dbm
from .qkd import DetectorParams, ModelParams, ProtocolParams, simulate_point
from .raman import RamanParams, RamanSettings
from .scenario import compute_ce, run_scenario, run_sweep, run_timeseries

__all__ = [
    "ConfigError", "DomainError", "FiberLink", "WdmComb", "aggregate_power", "build_reference_comb",
    "dbm_to_mw", "mw_to_dbm", "DetectorParams", "ModelParams", "ProtocolParams", "simulate_point",
    "RamanParams", "RamanSettings", "compute_ce", "run_scenario", "run_sweep", "run_timeseries",
]
