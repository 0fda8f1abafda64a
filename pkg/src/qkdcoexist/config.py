"""Scenario and fitted-parameter files (TOML).

Unknown keys are rejected. Model parameters resolve in three layers: the
built-in seeds, then a fitted-parameter file (the shipped one unless another
is given), then whatever the scenario file sets explicitly.
"""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Any, Callable

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import optics
from .calibration import DEFAULT_FREE_PARAMS, MEASURED_ANCHORS, Anchor, FitResult, FitSpec, FreeParam
from .errors import ConfigError, DomainError
from .optics import FiberLink, WdmComb
from .qkd import DetectorParams, ModelParams, ProtocolParams
from .raman import RamanSettings

DEFAULT_PARAMS_PATH = resources.files("qkdcoexist") / "data" / "fitted_params.toml"


@dataclass(frozen=True)
class LinkConfig:
    length_km: float = 50.0
    quantum_wavelength_nm: float = 1310.0
    fixed_loss_classical_db: float = optics.DEFAULT_FIXED_LOSS_CLASSICAL_DB
    fixed_loss_quantum_db: float = optics.DEFAULT_FIXED_LOSS_QUANTUM_DB
    attenuation_table: tuple[tuple[float, float], ...] = optics.DEFAULT_ATTENUATION_TABLE

    def build(self) -> FiberLink:
        return FiberLink(
            self.length_km, self.attenuation_table, self.fixed_loss_classical_db, self.fixed_loss_quantum_db
        )


@dataclass(frozen=True)
class CombConfig:
    """The reference comb; set exactly one of total or per-channel power."""

    enabled: bool = True
    n_channels: int = 60
    total_power_dbm: float | None = 16.8
    per_channel_power_dbm: float | None = None
    include_service_channels: bool = False
    service_power_dbm: float = 0.0

    def __post_init__(self):
        if (self.total_power_dbm is None) == (self.per_channel_power_dbm is None):
            raise DomainError("set exactly one of total_power_dbm and per_channel_power_dbm")
        if self.n_channels not in (30, 60):
            raise DomainError("n_channels must be 30 or 60")

    @property
    def total_dbm(self) -> float:
        if self.total_power_dbm is not None:
            return self.total_power_dbm
        return self.per_channel_power_dbm + 10.0 * math.log10(self.n_channels)

    def build(self) -> WdmComb | None:
        if not self.enabled or self.total_dbm == -math.inf:
            return None
        return optics.build_reference_comb(
            self.n_channels, self.total_dbm,
            include_service_channels=self.include_service_channels,
            service_power_dbm=self.service_power_dbm,
        )


@dataclass(frozen=True)
class SweepConfig:
    variable: str
    values: tuple[float, ...]
    workers: int = 1

    def __post_init__(self):
        if self.variable not in ("length", "power", "channels"):
            raise DomainError("sweep variable must be one of length, power, channels")
        if not self.values:
            raise DomainError("sweep needs at least one value")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")


@dataclass(frozen=True)
class TimeseriesConfig:
    duration_s: float = 3600.0
    interval_s: float = 60.0
    seed: int = 0
    decoy_fraction: float = 0.1
    vacuum_fraction: float = 0.05

    def __post_init__(self):
        if self.duration_s < 0:
            raise DomainError("duration_s must be >= 0")
        if self.interval_s <= 0:
            raise DomainError("interval_s must be > 0")
        if not (0 < self.decoy_fraction and 0 < self.vacuum_fraction
                and self.decoy_fraction + self.vacuum_fraction < 1):
            raise DomainError("decoy and vacuum fractions must be positive and sum below 1")


@dataclass(frozen=True)
class ScenarioConfig:
    link: LinkConfig = LinkConfig()
    comb: CombConfig = CombConfig()
    protocol: ProtocolParams = ProtocolParams()
    detector: DetectorParams = DetectorParams()
    raman: RamanSettings = RamanSettings()
    sweep: SweepConfig | None = None
    timeseries: TimeseriesConfig | None = None
    anchors: tuple[Anchor, ...] = ()
    calibration: FitSpec | None = None

    def __post_init__(self):
        if self.sweep is not None and self.timeseries is not None:
            raise ConfigError("", "a scenario is either a sweep or a time series, not both")

    @property
    def mode(self) -> str:
        if self.sweep is not None:
            return "sweep"
        if self.timeseries is not None:
            return "timeseries"
        return "point"

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.protocol, self.detector, self.raman)

    def with_model(self, params: ModelParams) -> "ScenarioConfig":
        return replace(self, protocol=params.protocol, detector=params.detector, raman=params.raman)


# -- strict parsing ----------------------------------------------------------

def _real(path: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    return float(v)


def _integer(path: str, v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return v


def _boolean(path: str, v: Any) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true/false, got {v!r}")
    return v


def _string(path: str, v: Any) -> str:
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    return v


def _table(path: str, v: Any) -> tuple[tuple[float, float], ...]:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of [wavelength_nm, alpha_db_km] pairs")
    out = []
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != 2:
            raise ConfigError(f"{path}[{i}]", "expected [wavelength_nm, alpha_db_km]")
        out.append((_real(f"{path}[{i}][0]", row[0]), _real(f"{path}[{i}][1]", row[1])))
    return tuple(out)


def _reals(path: str, v: Any) -> tuple[float, ...]:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of numbers")
    return tuple(_real(f"{path}[{i}]", x) for i, x in enumerate(v))


def _strings(path: str, v: Any) -> tuple[str, ...]:
    if not isinstance(v, list):
        raise ConfigError(path, "expected a list of strings")
    return tuple(_string(f"{path}[{i}]", x) for i, x in enumerate(v))


Schema = dict[str, Callable[[str, Any], Any]]

LINK_SCHEMA: Schema = {
    "length_km": _real, "quantum_wavelength_nm": _real, "fixed_loss_classical_db": _real,
    "fixed_loss_quantum_db": _real, "attenuation_table": _table,
}
COMB_SCHEMA: Schema = {
    "enabled": _boolean, "n_channels": _integer, "total_power_dbm": _real,
    "per_channel_power_dbm": _real, "include_service_channels": _boolean, "service_power_dbm": _real,
}
PROTOCOL_SCHEMA: Schema = {"mu": _real, "nu": _real, "pulse_rate": _real, "basis_bias": _real, "f_ec": _real}
DETECTOR_SCHEMA: Schema = {
    "efficiency": _real, "dark_prob": _real, "misalignment_error": _real, "gate_width_s": _real,
}
RAMAN_SCHEMA: Schema = {
    "beta": _real, "filter_bandwidth_nm": _real, "pump_wavelength_nm": _real,
    "leakage_extinction": _real, "feed": _string,
}
SWEEP_SCHEMA: Schema = {"variable": _string, "values": _reals, "workers": _integer}
TIMESERIES_SCHEMA: Schema = {
    "duration_s": _real, "interval_s": _real, "seed": _integer,
    "decoy_fraction": _real, "vacuum_fraction": _real,
}
ANCHOR_SCHEMA: Schema = {
    "name": _string, "length_km": _real, "p_wdm_dbm": _real, "n_channels": _integer,
    "target_skr_bps": _real, "target_qber": _real, "weight": _real,
}
CALIBRATION_SCHEMA: Schema = {
    "free": _strings, "bounds": lambda p, v: v, "tolerance": _real, "max_evals": _integer,
    "seed": _integer, "restarts": _integer,
}


def _parse_section(raw: Any, path: str, schema: Schema) -> dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError(path, "expected a table")
    out = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"{path}.{key}", "unknown key")
        out[key] = schema[key](f"{path}.{key}", value)
    return out


def _build(path: str, factory: Callable[..., Any], *args: Any, **kwargs: Any) -> Any:
    try:
        return factory(*args, **kwargs)
    except DomainError as exc:
        raise ConfigError(path, str(exc)) from exc


def _parse_calibration(raw: Any) -> FitSpec:
    vals = _parse_section(raw, "calibration", CALIBRATION_SCHEMA)
    bounds = vals.pop("bounds", {})
    if not isinstance(bounds, dict):
        raise ConfigError("calibration.bounds", "expected a table of name = [lower, upper]")
    names = vals.pop("free", tuple(DEFAULT_FREE_PARAMS))
    free = []
    for name in names:
        if name not in DEFAULT_FREE_PARAMS:
            raise ConfigError("calibration.free", f"{name!r} is not a calibratable parameter")
        p = DEFAULT_FREE_PARAMS[name]
        if name in bounds:
            pair = _reals(f"calibration.bounds.{name}", bounds[name])
            if len(pair) != 2:
                raise ConfigError(f"calibration.bounds.{name}", "expected [lower, upper]")
            lo, hi = pair
            p = _build(f"calibration.bounds.{name}", FreeParam, name=name, lower=lo, upper=hi, log=p.log)
        free.append(p)
    for name in bounds:
        if name not in names:
            raise ConfigError(f"calibration.bounds.{name}", "bounds given for a parameter that is not free")
    return _build("calibration", FitSpec, free=tuple(free), **vals)


SECTIONS = ("link", "comb", "protocol", "detector", "raman", "sweep", "timeseries", "anchors", "calibration")


def parse_config(raw: dict[str, Any], base: ModelParams | None = None) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed TOML document."""
    for key in raw:
        if key not in SECTIONS:
            raise ConfigError(key, "unknown section")
    base = base or ModelParams()

    link = _build("link", LinkConfig, **_parse_section(raw.get("link", {}), "link", LINK_SCHEMA))
    _build("link", link.build)

    comb_vals = _parse_section(raw.get("comb", {}), "comb", COMB_SCHEMA)
    if "per_channel_power_dbm" in comb_vals and "total_power_dbm" not in comb_vals:
        comb_vals["total_power_dbm"] = None
    comb = _build("comb", CombConfig, **comb_vals)

    protocol = _build("protocol", replace, base.protocol,
                      **_parse_section(raw.get("protocol", {}), "protocol", PROTOCOL_SCHEMA))
    detector = _build("detector", replace, base.detector,
                      **_parse_section(raw.get("detector", {}), "detector", DETECTOR_SCHEMA))
    raman = _build("raman", replace, base.raman,
                   **_parse_section(raw.get("raman", {}), "raman", RAMAN_SCHEMA))
    for path, wl in (("link.quantum_wavelength_nm", link.quantum_wavelength_nm),
                     ("raman.pump_wavelength_nm", raman.pump_wavelength_nm)):
        _build(path, optics.attenuation_at, link.build(), wl)

    sweep = None
    if "sweep" in raw:
        vals = _parse_section(raw["sweep"], "sweep", SWEEP_SCHEMA)
        for req in ("variable", "values"):
            if req not in vals:
                raise ConfigError(f"sweep.{req}", "required key missing")
        sweep = _build("sweep", SweepConfig, **vals)

    timeseries = None
    if "timeseries" in raw:
        timeseries = _build("timeseries", TimeseriesConfig,
                            **_parse_section(raw["timeseries"], "timeseries", TIMESERIES_SCHEMA))

    anchors = []
    raw_anchors = raw.get("anchors", [])
    if not isinstance(raw_anchors, list):
        raise ConfigError("anchors", "expected an array of tables ([[anchors]])")
    for i, a in enumerate(raw_anchors):
        vals = _parse_section(a, f"anchors[{i}]", ANCHOR_SCHEMA)
        for req in ("name", "length_km"):
            if req not in vals:
                raise ConfigError(f"anchors[{i}].{req}", "required key missing")
        anchors.append(_build(f"anchors[{i}]", Anchor, **vals))

    calibration = _parse_calibration(raw["calibration"]) if "calibration" in raw else None

    return _build("", ScenarioConfig, link=link, comb=comb, protocol=protocol, detector=detector,
                  raman=raman, sweep=sweep, timeseries=timeseries, anchors=tuple(anchors),
                  calibration=calibration)


def _read_toml(path: str | Path) -> dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(str(path), "file not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), f"not valid TOML: {exc}") from exc


def load_params(path: str | Path | None = None) -> ModelParams:
    """Read a fitted-parameter file; ``None`` reads the shipped one."""
    if path is None:
        path = DEFAULT_PARAMS_PATH
    raw = _read_toml(path)
    for key in raw:
        if key not in ("protocol", "detector", "raman", "fit", "anchors"):
            raise ConfigError(key, "unknown section in parameter file")
    seeds = ModelParams()
    return ModelParams(
        protocol=_build("protocol", replace, seeds.protocol,
                        **_parse_section(raw.get("protocol", {}), "protocol", PROTOCOL_SCHEMA)),
        detector=_build("detector", replace, seeds.detector,
                        **_parse_section(raw.get("detector", {}), "detector", DETECTOR_SCHEMA)),
        raman=_build("raman", replace, seeds.raman,
                     **_parse_section(raw.get("raman", {}), "raman", RAMAN_SCHEMA)),
    )


def load_config(path: str | Path, params_path: str | Path | None = None) -> ScenarioConfig:
    return parse_config(_read_toml(path), load_params(params_path))


def _anchor_dict(a: Anchor) -> dict[str, Any]:
    return {k: v for k, v in asdict(a).items() if v is not None}


def config_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    """Every field materialised, suitable for ``parse_config``."""
    link = asdict(cfg.link)
    link["attenuation_table"] = [list(r) for r in cfg.link.attenuation_table]
    out: dict[str, Any] = {
        "link": link,
        "comb": {k: v for k, v in asdict(cfg.comb).items() if v is not None},
        "protocol": asdict(cfg.protocol),
        "detector": asdict(cfg.detector),
        "raman": asdict(cfg.raman),
    }
    if cfg.sweep is not None:
        out["sweep"] = {"variable": cfg.sweep.variable, "values": list(cfg.sweep.values),
                        "workers": cfg.sweep.workers}
    if cfg.timeseries is not None:
        out["timeseries"] = asdict(cfg.timeseries)
    if cfg.anchors:
        out["anchors"] = [_anchor_dict(a) for a in cfg.anchors]
    if cfg.calibration is not None:
        spec = cfg.calibration
        out["calibration"] = {
            "free": [p.name for p in spec.free],
            "bounds": {p.name: [p.lower, p.upper] for p in spec.free},
            "tolerance": spec.tolerance, "max_evals": spec.max_evals,
            "seed": spec.seed, "restarts": spec.restarts,
        }
    return out


def dumps_config(cfg: ScenarioConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def params_to_dict(params: ModelParams) -> dict[str, Any]:
    return {"protocol": asdict(params.protocol), "detector": asdict(params.detector),
            "raman": asdict(params.raman)}


def write_params(path: str | Path, result: FitResult) -> Path:
    """Write fitted parameters with the anchor/residual table beside them."""
    doc: dict[str, Any] = {
        "fit": {
            "loss": result.loss,
            "start_loss": result.start_loss,
            "evals": result.evals,
            "converged": result.converged,
            "seed": result.seed,
            "tolerance": result.tolerance,
            "all_within_tolerance": result.all_within_tolerance,
            "binding_anchor": result.binding_anchor,
            "free": [p.name for p in result.free],
        },
        **params_to_dict(result.params),
        "anchors": [],
    }
    for r in result.residuals:
        row = _anchor_dict(r.anchor)
        row["sim_skr_bps"] = r.sim_skr_bps
        row["sim_qber"] = r.sim_qber
        if r.skr_rel_error is not None:
            row["skr_rel_error"] = r.skr_rel_error
        if r.qber_rel_error is not None:
            row["qber_rel_error"] = r.qber_rel_error
        doc["anchors"].append(row)
    header = (
        "# Fitted model parameters (values under [protocol], [detector], [raman]).\n"
        "# Produced by the calibration routine against the anchors listed below;\n"
        "# regenerate with scripts/fit_measured_anchors.py.\n\n"
    )
    path = Path(path)
    path.write_text(header + tomli_w.dumps(doc))
    return path


def default_anchors(cfg: ScenarioConfig) -> tuple[Anchor, ...]:
    return cfg.anchors or MEASURED_ANCHORS
