"""Spontaneous Raman noise from the classical comb into the 1310 nm channel.

The comb is treated as a single pump carrying the aggregate power; one
effective scattering coefficient covers the whole band. Closed forms are in
natural attenuation units (1/km).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

PLANCK_J_S = 6.62607015e-34
C_M_PER_S = 299_792_458.0
DB_TO_NEPER = math.log(10.0) / 10.0


@dataclass(frozen=True)
class RamanParams:
    """Effective Raman coupling for one pump band into the quantum channel.

    beta is the scattered power per unit pump power, per km of fiber and per
    nm of receiver filter bandwidth (1/(km nm)).
    """

    beta: float
    filter_bandwidth_nm: float
    alpha_pump_db_km: float
    alpha_quantum_db_km: float

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError("beta must be >= 0")
        if self.filter_bandwidth_nm <= 0:
            raise DomainError("filter bandwidth must be > 0")
        for name in ("alpha_pump_db_km", "alpha_quantum_db_km"):
            a = getattr(self, name)
            if not 0 < a < 1:
                raise DomainError(f"{name} must lie in (0, 1) dB/km, got {a}")

    @property
    def a_pump(self) -> float:
        return self.alpha_pump_db_km * DB_TO_NEPER

    @property
    def a_quantum(self) -> float:
        return self.alpha_quantum_db_km * DB_TO_NEPER


@dataclass(frozen=True)
class NoiseBudget:
    forward_raman_mw: float
    backward_raman_mw: float
    leakage_mw: float
    photon_rate_in_gate: float  # photons/s at the receiver input

    @property
    def total_mw(self) -> float:
        return self.forward_raman_mw + self.backward_raman_mw + self.leakage_mw


def _check_length(length_km: float) -> None:
    if length_km < 0 or math.isnan(length_km):
        raise DomainError(f"fiber length must be >= 0 km, got {length_km}")


def _expm1_ratio(x: float, length_km: float) -> float:
    # (exp(x L) - 1) / x, continuous at x = 0
    xl = x * length_km
    if abs(xl) < 1e-12:
        return length_km * (1.0 + 0.5 * xl)
    return math.expm1(xl) / x


def forward_raman_power(pump_in_mw: float, length_km: float, params: RamanParams) -> float:
    """Co-propagating Raman power (mW) at the far end of the span."""
    _check_length(length_km)
    a_p, a_q = params.a_pump, params.a_quantum
    scale = pump_in_mw * params.beta * params.filter_bandwidth_nm
    return scale * math.exp(-a_q * length_km) * _expm1_ratio(a_q - a_p, length_km)


def backward_raman_power(pump_in_mw: float, length_km: float, params: RamanParams) -> float:
    """Counter-propagating Raman power (mW) returned at the pump's launch end."""
    _check_length(length_km)
    a = params.a_pump + params.a_quantum
    scale = pump_in_mw * params.beta * params.filter_bandwidth_nm
    return scale * -math.expm1(-a * length_km) / a


def photon_energy_j(wavelength_nm: float) -> float:
    if wavelength_nm <= 0:
        raise DomainError(f"wavelength must be > 0 nm, got {wavelength_nm}")
    return PLANCK_J_S * C_M_PER_S / (wavelength_nm * 1e-9)


def noise_photon_rate(noise_power_mw: float, wavelength_nm: float) -> float:
    """Photon flux (photons/s) carried by ``noise_power_mw`` at ``wavelength_nm``."""
    energy = photon_energy_j(wavelength_nm)
    if noise_power_mw < 0:
        raise DomainError("noise power must be >= 0")
    return noise_power_mw * 1e-3 / energy


def noise_per_gate(rate: float, gate_width_s: float, gate_rate_hz: float, detector_efficiency: float) -> float:
    """Expected noise detections per gate for noise spread uniformly in time."""
    if gate_width_s * gate_rate_hz > 1.0 + 1e-12:
        raise DomainError(
            f"gate duty factor {gate_width_s * gate_rate_hz:g} exceeds 1"
        )
    return rate * gate_width_s * detector_efficiency


@dataclass(frozen=True)
class RamanSettings:
    """Receiver-side noise configuration; attenuations come from the link.

    ``feed`` selects which end the comb is launched from: ``"co"`` (with the
    quantum signal, forward Raman reaches the receiver) or ``"counter"``
    (from the receiver end, backward Raman reaches it).
    ``leakage_extinction`` is the fraction of the classical power arriving at
    the receiver that leaks through its filter.
    """

    beta: float = 1e-9
    filter_bandwidth_nm: float = 1.0
    pump_wavelength_nm: float = 1550.0
    leakage_extinction: float = 0.0
    feed: str = "co"

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError("beta must be >= 0")
        if self.filter_bandwidth_nm <= 0:
            raise DomainError("filter bandwidth must be > 0")
        if not 0 <= self.leakage_extinction <= 1:
            raise DomainError("leakage extinction must lie in [0, 1]")
        if self.feed not in ("co", "counter"):
            raise DomainError(f"feed must be 'co' or 'counter', got {self.feed!r}")
