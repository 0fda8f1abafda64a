"""Decoy-state BB84 (biased-basis) statistics and asymptotic key rate.

Weak + vacuum decoy analytic bounds with a GLLP-type rate. The vacuum yield
is the full background (dark counts plus in-gate noise) and background
clicks carry a 50 % error rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from . import optics, raman
from .errors import DomainError
from .optics import FiberLink, WdmComb
from .raman import NoiseBudget, RamanParams, RamanSettings

E0 = 0.5
E1_HARD_LIMIT = 0.5


@dataclass(frozen=True)
class ProtocolParams:
    mu: float = 0.4
    nu: float = 0.1
    pulse_rate: float = 1e9
    basis_bias: float = 0.9
    f_ec: float = 1.16

    def __post_init__(self):
        if not 0 < self.nu < self.mu:
            raise DomainError(f"need 0 < nu < mu, got mu={self.mu}, nu={self.nu}")
        if not 0.5 <= self.basis_bias < 1:
            raise DomainError("basis_bias must lie in [0.5, 1)")
        if self.pulse_rate <= 0:
            raise DomainError("pulse_rate must be > 0")
        if self.f_ec < 1:
            raise DomainError("f_ec must be >= 1")

    @property
    def sift_factor(self) -> float:
        return self.basis_bias**2


@dataclass(frozen=True)
class DetectorParams:
    efficiency: float = 0.20
    dark_prob: float = 1e-5
    misalignment_error: float = 0.025
    gate_width_s: float = 100e-12

    def __post_init__(self):
        for name in ("efficiency", "dark_prob", "misalignment_error"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise DomainError(f"{name} must lie in [0, 1], got {v}")
        if self.gate_width_s <= 0:
            raise DomainError("gate_width_s must be > 0")


@dataclass(frozen=True)
class ChannelStats:
    q_mu: float
    q_nu: float
    e_mu: float
    e_nu: float
    y0: float
    noise_per_gate: float


@dataclass(frozen=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class KeyRateResult:
    skr: float
    q1_lower: float
    e1_upper: float
    secure: bool
    flags: tuple[str, ...] = ()


def h2(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary entropy needs p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def background_yield(det: DetectorParams, noise_per_gate: float) -> float:
    return min(det.dark_prob + noise_per_gate, 1.0)


def channel_stats(
    intensity: float, transmittance: float, det: DetectorParams, noise_per_gate: float
) -> tuple[float, float]:
    """Gain and QBER of a Poissonian source of mean photon number ``intensity``.

    Returns ``(gain, qber)`` where gain is the detection probability per pulse.
    """
    if not 0 < transmittance <= 1:
        raise DomainError(f"transmittance must lie in (0, 1], got {transmittance}")
    if intensity < 0:
        raise DomainError("intensity must be >= 0")
    y0 = background_yield(det, noise_per_gate)
    eta = transmittance * det.efficiency
    gain = 1.0 - (1.0 - y0) * math.exp(-eta * intensity)
    if gain <= 0:
        return 0.0, E0
    qber = (E0 * y0 + det.misalignment_error * (gain - y0)) / gain
    return gain, min(qber, 0.5)


def decoy_bounds(stats: ChannelStats, proto: ProtocolParams) -> DecoyBounds:
    """Lower bound on the single-photon yield and upper bound on its error rate."""
    mu, nu = proto.mu, proto.nu
    if nu >= mu:
        raise DomainError("decoy intensity must be below the signal intensity")
    flags = []
    y1 = (mu / (mu * nu - nu**2)) * (
        stats.q_nu * math.exp(nu)
        - stats.q_mu * math.exp(mu) * nu**2 / mu**2
        - (mu**2 - nu**2) / mu**2 * stats.y0
    )
    if not 0 <= y1 <= 1:
        flags.append("y1_clamped")
        y1 = min(max(y1, 0.0), 1.0)
    if y1 == 0:
        return DecoyBounds(0.0, 0.5, tuple(flags))
    e1 = (stats.e_nu * stats.q_nu * math.exp(nu) - E0 * stats.y0) / (y1 * nu)
    if not 0 <= e1 <= 0.5:
        flags.append("e1_clamped")
        e1 = min(max(e1, 0.0), 0.5)
    return DecoyBounds(y1, e1, tuple(flags))


def secure_key_rate(stats: ChannelStats, bounds: DecoyBounds, proto: ProtocolParams) -> KeyRateResult:
    """Asymptotic secure key rate in bit/s, clamped at zero."""
    q1 = bounds.y1_lower * proto.mu * math.exp(-proto.mu)
    flags = list(bounds.flags)
    if bounds.e1_upper >= E1_HARD_LIMIT:
        return KeyRateResult(0.0, q1, bounds.e1_upper, False, tuple(flags))
    per_pulse = q1 * (1 - h2(bounds.e1_upper)) - proto.f_ec * stats.q_mu * h2(stats.e_mu)
    rate = proto.pulse_rate * proto.sift_factor * per_pulse
    if rate <= 0:
        if rate < 0:
            flags.append("rate_negative")
        rate = 0.0
    return KeyRateResult(rate, q1, bounds.e1_upper, rate > 0, tuple(flags))


@dataclass(frozen=True)
class PointResult:
    """Every intermediate of one link/comb evaluation."""

    length_km: float
    p_wdm_dbm: float
    n_channels: int
    loss_quantum_db: float
    loss_classical_db: float
    transmittance: float
    noise: NoiseBudget
    stats: ChannelStats
    bounds: DecoyBounds
    key: KeyRateResult

    @property
    def skr(self) -> float:
        return self.key.skr

    @property
    def qber(self) -> float:
        return self.stats.e_mu

    @property
    def flags(self) -> tuple[str, ...]:
        return self.key.flags


QUANTUM_WAVELENGTH_NM = 1310.0


def noise_budget(
    link: FiberLink, p_wdm_dbm: float, det: DetectorParams, settings: RamanSettings,
    quantum_wavelength_nm: float = QUANTUM_WAVELENGTH_NM,
) -> NoiseBudget:
    """Noise power and photon flux reaching the quantum receiver.

    Raman light generated in the span passes the quantum band's fixed loss on
    its way to the detector, as the signal does.
    """
    params = RamanParams(
        beta=settings.beta,
        filter_bandwidth_nm=settings.filter_bandwidth_nm,
        alpha_pump_db_km=optics.attenuation_at(link, settings.pump_wavelength_nm),
        alpha_quantum_db_km=optics.attenuation_at(link, quantum_wavelength_nm),
    )
    pump_mw = optics.dbm_to_mw(p_wdm_dbm)
    rx_factor = 10.0 ** (-link.fixed_loss_quantum_db / 10.0)
    fwd = raman.forward_raman_power(pump_mw, link.length_km, params) * rx_factor
    bwd = raman.backward_raman_power(pump_mw, link.length_km, params) * rx_factor
    classical_at_rx = pump_mw * 10.0 ** (
        -optics.end_to_end_loss(link, settings.pump_wavelength_nm, "classical") / 10.0
    )
    leak = classical_at_rx * settings.leakage_extinction
    into_receiver = (fwd if settings.feed == "co" else bwd) + leak
    rate = raman.noise_photon_rate(into_receiver, quantum_wavelength_nm)
    return NoiseBudget(fwd, bwd, leak, rate)


def simulate_point(
    link: FiberLink,
    comb: WdmComb | None,
    proto: ProtocolParams,
    det: DetectorParams,
    settings: RamanSettings,
    quantum_wavelength_nm: float = QUANTUM_WAVELENGTH_NM,
) -> PointResult:
    """Evaluate one configuration end to end.

    The comb enters only through its aggregate power; ``None`` means no comb.
    """
    p_wdm_dbm = optics.aggregate_power(comb) if comb is not None else -math.inf
    n_channels = comb.n_channels if comb is not None else 0
    loss_q = optics.end_to_end_loss(link, quantum_wavelength_nm, "quantum")
    loss_c = optics.end_to_end_loss(link, settings.pump_wavelength_nm, "classical")
    transmittance = 10.0 ** (-loss_q / 10.0)

    noise = noise_budget(link, p_wdm_dbm, det, settings, quantum_wavelength_nm)
    n_gate = raman.noise_per_gate(noise.photon_rate_in_gate, det.gate_width_s, proto.pulse_rate, det.efficiency)

    q_mu, e_mu = channel_stats(proto.mu, transmittance, det, n_gate)
    q_nu, e_nu = channel_stats(proto.nu, transmittance, det, n_gate)
    stats = ChannelStats(q_mu, q_nu, e_mu, e_nu, background_yield(det, n_gate), n_gate)
    bounds = decoy_bounds(stats, proto)
    key = secure_key_rate(stats, bounds, proto)
    return PointResult(
        length_km=link.length_km,
        p_wdm_dbm=p_wdm_dbm,
        n_channels=n_channels,
        loss_quantum_db=loss_q,
        loss_classical_db=loss_c,
        transmittance=transmittance,
        noise=noise,
        stats=stats,
        bounds=bounds,
        key=key,
    )


@dataclass(frozen=True)
class ModelParams:
    """The calibratable parameter set: protocol, detector and noise blocks."""

    protocol: ProtocolParams = ProtocolParams()
    detector: DetectorParams = DetectorParams()
    raman: RamanSettings = RamanSettings()
