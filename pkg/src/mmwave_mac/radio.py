"""Sectored-antenna and link-budget primitives shared by the whole toolkit.

All internal power arithmetic is linear (milliwatts for absolute powers,
unit gains for ratios). dB and dBm appear only in the conversion helpers
and in user-facing parameters that are conventionally quoted that way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0
TWO_PI = 2.0 * math.pi


def db_to_linear(value_db):
    """Convert a dB ratio to a linear ratio."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0) if np.ndim(value_db) else 10.0 ** (value_db / 10.0)


def linear_to_db(value):
    """Convert a positive linear ratio to dB."""
    if np.any(np.asarray(value) <= 0):
        raise ValueError("linear value must be positive to express in dB")
    return 10.0 * np.log10(value)


def dbm_to_mw(power_dbm):
    """Convert dBm to milliwatts."""
    return db_to_linear(power_dbm)


def mw_to_dbm(power_mw):
    """Convert milliwatts to dBm."""
    return linear_to_db(power_mw)


def wrap_angle(angle_rad):
    """Map an angle to [0, 2*pi)."""
    return np.mod(angle_rad, TWO_PI)


def angular_distance(a_rad, b_rad):
    """Shortest distance between two angles around the circle, in [0, pi]."""
    return np.abs(np.mod(np.asarray(a_rad) - np.asarray(b_rad) + math.pi, TWO_PI) - math.pi)


class Mode(str, Enum):
    """Directionality of a link: which ends use a directional beam."""

    OMNI = "omni"
    SEMI = "semi"
    FULLY = "fully"

    @property
    def gain_exponent(self) -> int:
        """How many sectored main-lobe gains enter the link budget."""
        return {Mode.OMNI: 0, Mode.SEMI: 1, Mode.FULLY: 2}[self]

    @classmethod
    def parse(cls, text: str) -> "Mode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown mode {text!r}; expected one of omni, semi, fully") from None


@dataclass(frozen=True)
class RadioParams:
    """Link-budget parameters of one deployment.

    carrier_frequency_hz: carrier, used only through the wavelength.
    tx_power_dbm / noise_power_dbm: transmit and noise power.
    snr_threshold_db: minimum SNR for successful reception.
    pathloss_exponent: exponent of the distance power law, must exceed 2.
    sidelobe_gain: linear gain outside the main lobe, in [0, 1).
    """

    carrier_frequency_hz: float
    tx_power_dbm: float
    noise_power_dbm: float
    snr_threshold_db: float
    pathloss_exponent: float
    sidelobe_gain: float = 0.0

    def __post_init__(self):
        if not self.carrier_frequency_hz > 0:
            raise ValueError("carrier frequency must be positive")
        if not self.pathloss_exponent > 2:
            raise ValueError("path-loss exponent must exceed 2")
        if not 0.0 <= self.sidelobe_gain < 1.0:
            raise ValueError("side-lobe gain must lie in [0, 1)")

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT_M_S / self.carrier_frequency_hz

    @property
    def tx_power_mw(self) -> float:
        return dbm_to_mw(self.tx_power_dbm)

    @property
    def noise_power_mw(self) -> float:
        return dbm_to_mw(self.noise_power_dbm)

    @property
    def snr_threshold_linear(self) -> float:
        return db_to_linear(self.snr_threshold_db)


@dataclass(frozen=True)
class Beam:
    """One sectored beam: a main lobe of width ``beamwidth_rad`` centered on
    ``boresight_rad``. A beamwidth of 2*pi is omnidirectional (unit gain)."""

    beamwidth_rad: float
    boresight_rad: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.beamwidth_rad <= TWO_PI:
            raise ValueError("beamwidth must lie in (0, 2*pi]")
        object.__setattr__(self, "boresight_rad", float(wrap_angle(self.boresight_rad)))

    @property
    def is_omni(self) -> bool:
        return self.beamwidth_rad == TWO_PI


def main_lobe_gain(beamwidth_rad, sidelobe_gain=0.0):
    """Main-lobe directivity of the sectored pattern.

    The pattern is constant inside the main lobe and equal to
    ``sidelobe_gain`` outside; the main-lobe value is fixed by conserving
    the total radiated power, which gives ``(2*pi - (2*pi - theta)*eps) / theta``.
    Accepts scalars or arrays of beamwidths.
    """
    theta = np.asarray(beamwidth_rad, dtype=float)
    if np.any(theta <= 0) or np.any(theta > TWO_PI):
        raise ValueError("beamwidth must lie in (0, 2*pi]")
    if not 0.0 <= sidelobe_gain < 1.0:
        raise ValueError("side-lobe gain must lie in [0, 1)")
    gain = (TWO_PI - (TWO_PI - theta) * sidelobe_gain) / theta
    return float(gain) if np.ndim(beamwidth_rad) == 0 else gain


def sector_gain(beam: Beam, sidelobe_gain: float, target_angle_rad: float) -> float:
    """Directivity of ``beam`` toward ``target_angle_rad``.

    The target is in the main lobe when its shortest angular distance from
    the boresight is at most half the beamwidth (the boundary counts as
    in-lobe); otherwise the side-lobe gain applies.
    """
    return float(
        sector_gains(beam.beamwidth_rad, beam.boresight_rad, sidelobe_gain, target_angle_rad)
    )


def sector_gains(beamwidth_rad, boresight_rad, sidelobe_gain, target_angles_rad):
    """Vectorized sectored-pattern gain; broadcasts over all arguments."""
    gain = main_lobe_gain(beamwidth_rad, sidelobe_gain)
    off = angular_distance(target_angles_rad, boresight_rad) > np.asarray(beamwidth_rad) / 2.0
    return np.where(off, sidelobe_gain, gain)


def path_gain(distance_m, params: RadioParams):
    """Distance power-law channel gain ``(lambda / (4*pi*d))**alpha``."""
    d = np.asarray(distance_m, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    gain = (params.wavelength_m / (4.0 * math.pi * d)) ** params.pathloss_exponent
    return float(gain) if np.ndim(distance_m) == 0 else gain


def max_range(
    params: RadioParams,
    mode: Mode,
    beamwidth_rad: float | None = None,
    exact: bool = True,
) -> float:
    """Largest BS-UE distance at which the SNR threshold is still met.

    The directivity gain enters the budget zero, one, or two times for
    omni, semi, and fully directional operation. With ``exact=False`` the
    side lobe is ignored (the vanishing-side-lobe approximation); with the
    default side-lobe gain of 0 the two agree exactly.
    """
    if mode is Mode.OMNI:
        if beamwidth_rad is not None and beamwidth_rad != TWO_PI:
            raise ValueError("omni mode implies a beamwidth of 2*pi")
        gain = 1.0
    else:
        if beamwidth_rad is None:
            raise ValueError(f"{mode.value} mode requires a beamwidth")
        eps = params.sidelobe_gain if exact else 0.0
        gain = main_lobe_gain(beamwidth_rad, eps)
    budget = params.tx_power_mw * gain**mode.gain_exponent / (
        params.noise_power_mw * params.snr_threshold_linear
    )
    return params.wavelength_m / (4.0 * math.pi) * budget ** (1.0 / params.pathloss_exponent)


def range_gain(combined_gain_db: float, pathloss_exponent: float) -> float:
    """Range-extension factor bought by ``combined_gain_db`` of directivity.

    A gain of G dB stretches the maximum range by ``10**(G / (10*alpha))``
    relative to the 0 dB baseline.
    """
    if not pathloss_exponent > 2:
        raise ValueError("path-loss exponent must exceed 2")
    return 10.0 ** (combined_gain_db / (10.0 * pathloss_exponent))
