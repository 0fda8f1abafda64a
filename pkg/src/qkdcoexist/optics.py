"""Units, DWDM channel plans and fiber link-budget arithmetic.

All powers are plain floats: ``*_dbm`` in dBm, ``*_mw`` in mW. A dark comb
has an aggregate power of ``-inf`` dBm (0 mW).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DomainError

C_M_PER_S = 299_792_458.0

# Classical comb edges and grid of the 60 x 100G DP-QPSK test bed.
COMB_BLUE_EDGE_NM = 1533.6
COMB_RED_EDGE_NM = 1557.0
COMB_SPACING_GHZ = 50.0

# Two in-band QKD service channels on the 100 GHz ITU grid (C59, C60).
SERVICE_CHANNELS_NM = (
    C_M_PER_S / 195.9e12 * 1e9,
    C_M_PER_S / 196.0e12 * 1e9,
)

# Typical G.652.D attenuation knots (nm, dB/km). The 1310 and 1550 nm values
# together with the fixed losses below reproduce the measured 70 km budget
# (17.5 dB classical, 25.7 dB quantum).
DEFAULT_ATTENUATION_TABLE: tuple[tuple[float, float], ...] = (
    (1260.0, 0.38),
    (1310.0, 0.33),
    (1383.0, 0.28),
    (1490.0, 0.21),
    (1550.0, 0.20),
    (1625.0, 0.22),
)
DEFAULT_FIXED_LOSS_CLASSICAL_DB = 3.5
DEFAULT_FIXED_LOSS_QUANTUM_DB = 2.6
AUX_TO_TX_INSERTION_LOSS_DB = 1.7

TABLE_MIN_NM = 1260.0
TABLE_MAX_NM = 1625.0


def dbm_to_mw(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0)


def mw_to_dbm(p_mw: float) -> float:
    if p_mw < 0 or math.isnan(p_mw):
        raise DomainError(f"power must be non-negative, got {p_mw} mW")
    if p_mw == 0:
        return -math.inf
    return 10.0 * math.log10(p_mw)


def wavelength_to_ghz(wavelength_nm: float) -> float:
    return C_M_PER_S / (wavelength_nm * 1e-9) / 1e9


def ghz_to_wavelength(freq_ghz: float) -> float:
    return C_M_PER_S / (freq_ghz * 1e9) * 1e9


@dataclass(frozen=True)
class Channel:
    wavelength_nm: float
    power_dbm: float


@dataclass(frozen=True)
class WdmComb:
    """Classical channel plan.

    ``channels`` are sorted by increasing wavelength and must sit on a grid
    that is uniform in frequency. Service channels are carried separately and
    count towards the aggregate power only when ``include_service_channels``
    is set.
    """

    channels: tuple[Channel, ...]
    grid_spacing_ghz: float
    service_channels: tuple[Channel, ...] = ()
    include_service_channels: bool = False

    def __post_init__(self):
        wl = [ch.wavelength_nm for ch in self.channels]
        if any(b <= a for a, b in zip(wl, wl[1:])):
            raise DomainError("channel wavelengths must be strictly increasing")
        if len(wl) > 1:
            gaps = -np.diff([wavelength_to_ghz(w) for w in wl])
            if np.max(np.abs(gaps - self.grid_spacing_ghz)) > 0.1:
                raise DomainError(
                    f"channel spacing deviates from the {self.grid_spacing_ghz} GHz grid by more than 0.1 GHz"
                )

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def frequencies_ghz(self) -> np.ndarray:
        return np.array([wavelength_to_ghz(ch.wavelength_nm) for ch in self.channels])


def aggregate_power(comb: WdmComb) -> float:
    """Total comb power in dBm (mW-sum of the channel powers)."""
    if not comb.channels:
        raise DomainError("aggregate power of an empty comb is undefined")
    members = list(comb.channels)
    if comb.include_service_channels:
        members += comb.service_channels
    return mw_to_dbm(math.fsum(dbm_to_mw(ch.power_dbm) for ch in members))


def build_reference_comb(
    n_channels: int,
    total_power_dbm: float,
    *,
    include_service_channels: bool = False,
    service_power_dbm: float = 0.0,
) -> WdmComb:
    """Build the 60-channel 50 GHz comb or its 30-channel 100 GHz half.

    Sixty channels at 50 GHz need 2.95 THz, slightly more than the
    1533.6-1557 nm window (2.94 THz), so the grid is centred on that window
    and both edge channels overhang it by about 0.05 nm. The 30-channel
    variant keeps every other channel. Per-channel power is uniform, chosen
    so the comb aggregate equals ``total_power_dbm``; pass ``-inf`` for a
    dark comb.
    """
    if n_channels not in (30, 60):
        raise DomainError(f"the reference comb has 30 or 60 channels, not {n_channels}")
    f_blue = wavelength_to_ghz(COMB_BLUE_EDGE_NM)
    f_red = wavelength_to_ghz(COMB_RED_EDGE_NM)
    centre = 0.5 * (f_blue + f_red)
    # index 0 is the bluest (highest-frequency) channel
    freqs = centre + (29.5 - np.arange(60)) * COMB_SPACING_GHZ
    step = 1
    if n_channels == 30:
        freqs = freqs[::2]
        step = 2
    per_channel = total_power_dbm - 10.0 * math.log10(n_channels)
    channels = tuple(Channel(ghz_to_wavelength(float(f)), per_channel) for f in freqs)
    service = tuple(Channel(w, service_power_dbm) for w in sorted(SERVICE_CHANNELS_NM))
    return WdmComb(
        channels=channels,
        grid_spacing_ghz=COMB_SPACING_GHZ * step,
        service_channels=service,
        include_service_channels=include_service_channels,
    )


Band = Literal["classical", "quantum"]


@dataclass(frozen=True)
class FiberLink:
    length_km: float
    attenuation_table: tuple[tuple[float, float], ...] = DEFAULT_ATTENUATION_TABLE
    fixed_loss_classical_db: float = DEFAULT_FIXED_LOSS_CLASSICAL_DB
    fixed_loss_quantum_db: float = DEFAULT_FIXED_LOSS_QUANTUM_DB
    _wl: np.ndarray = field(init=False, repr=False, compare=False)
    _alpha: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.length_km >= 0:
            raise DomainError(f"fiber length must be >= 0 km, got {self.length_km}")
        table = tuple((float(w), float(a)) for w, a in self.attenuation_table)
        object.__setattr__(self, "attenuation_table", table)
        wl = np.array([w for w, _ in table])
        alpha = np.array([a for _, a in table])
        if len(wl) < 2 or np.any(np.diff(wl) <= 0):
            raise DomainError("attenuation table needs >= 2 knots with increasing wavelength")
        if wl[0] > TABLE_MIN_NM or wl[-1] < TABLE_MAX_NM:
            raise DomainError(f"attenuation table must cover {TABLE_MIN_NM:g}-{TABLE_MAX_NM:g} nm")
        if np.any(alpha <= 0) or np.any(alpha >= 1):
            raise DomainError("attenuation values must lie in (0, 1) dB/km")
        object.__setattr__(self, "_wl", wl)
        object.__setattr__(self, "_alpha", alpha)


def attenuation_at(link: FiberLink, wavelength_nm: float) -> float:
    """Piecewise-linear attenuation in dB/km."""
    if not link._wl[0] <= wavelength_nm <= link._wl[-1]:
        raise DomainError(
            f"{wavelength_nm} nm is outside the attenuation table "
            f"({link._wl[0]:g}-{link._wl[-1]:g} nm)"
        )
    return float(np.interp(wavelength_nm, link._wl, link._alpha))


def end_to_end_loss(link: FiberLink, wavelength_nm: float, band: Band) -> float:
    """Tx-to-Rx loss in dB: span loss plus the fixed loss of the band."""
    if band == "classical":
        fixed = link.fixed_loss_classical_db
    elif band == "quantum":
        fixed = link.fixed_loss_quantum_db
    else:
        raise DomainError(f"unknown band {band!r}")
    return link.length_km * attenuation_at(link, wavelength_nm) + fixed


def fiber_input_power(aux_rx_power_dbm: float, insertion_loss_db: float = AUX_TO_TX_INSERTION_LOSS_DB) -> float:
    """Comb power launched into the fiber given the power at the terminal's aux input."""
    return aux_rx_power_dbm - insertion_loss_db

