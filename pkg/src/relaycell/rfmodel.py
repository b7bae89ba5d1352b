"""Two-ray ground-reflection propagation and LTE link budget.

Phase convention: time dependence e^{+jwt}, so a wave travelling a
distance d carries e^{-jkd} and a lossy ground has a complex relative
permittivity with a negative imaginary part, eps = eps_r - j*sigma/(w*eps0).
Every complex quantity in this module follows that convention.

All distance/power functions broadcast over numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

SPEED_OF_LIGHT = 299_792_458.0  # m/s
VACUUM_PERMITTIVITY = 8.854e-12  # F/m
RESOURCE_BLOCK_HZ = 180e3
SUBCARRIERS_PER_RB = 12
MIN_DISTANCE = 1.0  # m, below this the model is singular-ish and rejected

# Nominal LTE channel bandwidths carry fewer resource blocks than B/180 kHz
# because of the guard bands.
LTE_CHANNEL_RBS = {1.4e6: 6, 3e6: 15, 5e6: 25, 10e6: 50, 15e6: 75, 20e6: 100}

POLARIZATIONS = ("vertical", "horizontal")


@dataclass(frozen=True)
class GroundParameters:
    conductivity: float  # S/m
    relative_permittivity: float

    def __post_init__(self):
        if self.conductivity < 0:
            raise InvalidArgument("conductivity must be >= 0")
        if self.relative_permittivity < 1:
            raise InvalidArgument("relative_permittivity must be >= 1")


WET_GROUND = GroundParameters(conductivity=2e-2, relative_permittivity=30.0)


@dataclass(frozen=True)
class RadioConfig:
    carrier_frequency: float  # Hz
    bandwidth: float  # Hz
    tx_power: float  # dBm
    antenna_height: float  # m
    antenna_gain_tx: float = 0.0  # dBi
    antenna_gain_rx: float = 0.0  # dBi
    polarization: str = "vertical"

    def __post_init__(self):
        if self.carrier_frequency <= 0:
            raise InvalidArgument("carrier_frequency must be > 0")
        if self.bandwidth <= 0:
            raise InvalidArgument("bandwidth must be > 0")
        if self.antenna_height <= 0:
            raise InvalidArgument("antenna_height must be > 0")
        if self.polarization not in POLARIZATIONS:
            raise InvalidArgument(f"unknown polarization {self.polarization!r}")

    @property
    def eirp(self) -> float:
        return self.tx_power + self.antenna_gain_tx


@dataclass(frozen=True)
class LinkBudget:
    distance: float
    rx_power: float
    rsrp: float


def wavelength(frequency):
    frequency = np.asarray(frequency, dtype=float)
    if np.any(frequency <= 0):
        raise InvalidArgument("frequency must be > 0")
    out = SPEED_OF_LIGHT / frequency
    return float(out) if out.ndim == 0 else out


def complex_permittivity(ground: GroundParameters, frequency: float) -> complex:
    if frequency <= 0:
        raise InvalidArgument("frequency must be > 0")
    omega = 2.0 * np.pi * frequency
    return complex(ground.relative_permittivity,
                   -ground.conductivity / (omega * VACUUM_PERMITTIVITY))


def reflection_coefficient(grazing_angle, eps, polarization="vertical"):
    """Fresnel reflection coefficient of a flat ground.

    ``grazing_angle`` is measured from the ground plane, in (0, pi/2].
    """
    psi = np.asarray(grazing_angle, dtype=float)
    if np.any(~(psi > 0)) or np.any(psi > np.pi / 2):
        raise InvalidArgument("grazing angle must lie in (0, pi/2]")
    if polarization not in POLARIZATIONS:
        raise InvalidArgument(f"unknown polarization {polarization!r}")
    eps = complex(eps)
    sin_psi = np.sin(psi)
    root = np.sqrt(eps - np.cos(psi) ** 2 + 0j)
    if polarization == "vertical":
        gamma = (eps * sin_psi - root) / (eps * sin_psi + root)
    else:
        gamma = (sin_psi - root) / (sin_psi + root)
    return complex(gamma) if gamma.ndim == 0 else gamma


def _check_distance(distance):
    d = np.asarray(distance, dtype=float)
    if np.any(~(d >= MIN_DISTANCE)):
        raise InvalidArgument(f"distance must be >= {MIN_DISTANCE} m")
    return d


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def friis_rx_power(radio_tx: RadioConfig, radio_rx: RadioConfig, distance):
    """Free-space received power in dBm over the direct path length."""
    d = _check_distance(distance)
    lam = wavelength(radio_tx.carrier_frequency)
    d1 = np.hypot(d, radio_tx.antenna_height - radio_rx.antenna_height)
    gain = radio_tx.tx_power + radio_tx.antenna_gain_tx + radio_rx.antenna_gain_rx
    return _scalar_or_array(gain + 20.0 * np.log10(lam / (4.0 * np.pi * d1)))


def two_ray_rx_power(radio_tx: RadioConfig, radio_rx: RadioConfig, distance,
                     ground: GroundParameters, gamma=None):
    """Received power in dBm from the coherent sum of direct and ground rays.

    ``gamma`` overrides the computed reflection coefficient (a constant or an
    array matching ``distance``); ``gamma=0`` gives the free-space result.
    The transmitter's polarization selects the Fresnel coefficient.
    """
    d = _check_distance(distance)
    lam = wavelength(radio_tx.carrier_frequency)
    k = 2.0 * np.pi / lam
    h1, h2 = radio_tx.antenna_height, radio_rx.antenna_height
    d1 = np.hypot(d, h1 - h2)
    d2 = np.hypot(d, h1 + h2)
    if gamma is None:
        psi = np.arctan2(h1 + h2, d)
        eps = complex_permittivity(ground, radio_tx.carrier_frequency)
        gamma = reflection_coefficient(psi, eps, radio_tx.polarization)
    field = np.exp(-1j * k * d1) / d1 + gamma * np.exp(-1j * k * d2) / d2
    gain = radio_tx.tx_power + radio_tx.antenna_gain_tx + radio_rx.antenna_gain_rx
    power = gain + 20.0 * np.log10(lam / (4.0 * np.pi)) + 10.0 * np.log10(np.abs(field) ** 2)
    return _scalar_or_array(power)


def resource_blocks(bandwidth: float) -> int:
    for nominal, n_rb in LTE_CHANNEL_RBS.items():
        if abs(bandwidth - nominal) < 1e-6 * nominal:
            return n_rb
    n_rb = bandwidth / RESOURCE_BLOCK_HZ
    if bandwidth <= 0 or abs(n_rb - round(n_rb)) > 1e-9 * max(1.0, n_rb):
        raise InvalidArgument(
            f"bandwidth {bandwidth} Hz is neither a standard LTE channel "
            "nor a whole number of 180 kHz resource blocks")
    return int(round(n_rb))


def rsrp_from_rx_power(rx_power, bandwidth: float):
    """Spread total received power over the 12 * N_RB resource elements."""
    n_re = SUBCARRIERS_PER_RB * resource_blocks(bandwidth)
    return _scalar_or_array(np.asarray(rx_power, dtype=float) - 10.0 * np.log10(n_re))


def link_rsrp(radio_tx: RadioConfig, radio_rx: RadioConfig, distance,
              ground: GroundParameters, excess_loss_db_per_m: float = 0.0):
    """Two-ray RSRP with an optional distance-proportional excess loss.

    The excess term (dB per metre of ground distance) stands in for
    environment losses the flat two-ray picture ignores; it is zero unless
    a scenario asks for it.
    """
    rx = two_ray_rx_power(radio_tx, radio_rx, distance, ground)
    rx = rx - excess_loss_db_per_m * np.asarray(distance, dtype=float)
    return rsrp_from_rx_power(rx, radio_tx.bandwidth)


def link_budget(radio_tx: RadioConfig, radio_rx: RadioConfig, distance: float,
                ground: GroundParameters, excess_loss_db_per_m: float = 0.0) -> LinkBudget:
    rx = two_ray_rx_power(radio_tx, radio_rx, distance, ground)
    rx -= excess_loss_db_per_m * distance
    return LinkBudget(distance=float(distance), rx_power=float(rx),
                      rsrp=float(rsrp_from_rx_power(rx, radio_tx.bandwidth)))


def fade_null_estimate(h_tx: float, h_rx: float, frequency: float) -> float:
    """Distance of the last destructive fade, where the path difference is one wavelength."""
    return 2.0 * h_tx * h_rx / wavelength(frequency)


def local_minima(distance, power):
    """Indices of strict interior local minima of a sampled curve."""
    p = np.asarray(power)
    idx = np.nonzero((p[1:-1] < p[:-2]) & (p[1:-1] < p[2:]))[0] + 1
    return idx


def local_maxima(distance, power):
    p = np.asarray(power)
    return np.nonzero((p[1:-1] > p[:-2]) & (p[1:-1] > p[2:]))[0] + 1


def deepest_fade(radio_tx: RadioConfig, radio_rx: RadioConfig, ground: GroundParameters,
                 d_lo: float, d_hi: float, step: float = 0.1,
                 excess_loss_db_per_m: float = 0.0) -> float:
    """Distance of the lowest local minimum of received power on [d_lo, d_hi]."""
    d = np.arange(d_lo, d_hi + step / 2, step)
    p = two_ray_rx_power(radio_tx, radio_rx, d, ground) - excess_loss_db_per_m * d
    idx = local_minima(d, p)
    if idx.size == 0:
        raise InvalidArgument("no fade inside the scanned interval")
    return float(d[idx[np.argmin(p[idx])]])


def shadowing(rng: np.random.Generator, sigma_db: float, size=None):
    """Zero-mean Gaussian dB perturbation; exactly zero when sigma is 0."""
    if sigma_db <= 0:
        return np.zeros(size) if size is not None else 0.0
    return rng.normal(0.0, sigma_db, size)
