"""Cell formation: joint user association, beam pointing, and resource shares.

Every RF chain of a physical base station is expanded into a virtual BS at
the same position; a user associates with exactly one virtual BS, receives
an equal share of that chain's resources, and every chain interferes with
every link it does not serve. The solver lives in ``solver``; this module
holds the problem description, the link physics, and the metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property

import numpy as np

from .radio import (
    TWO_PI,
    Mode,
    RadioParams,
    angular_distance,
    main_lobe_gain,
    path_gain,
    wrap_angle,
)

DEFAULT_BS_MIN_BEAMWIDTH_RAD = math.radians(5.0)
DEFAULT_UE_MIN_BEAMWIDTH_RAD = math.radians(10.0)

# Rates below this floor are treated as zero when validating a solution.
RATE_FLOOR = 1e-12


class Utility(str, Enum):
    """Network utility aggregated over per-user long-term rates."""

    LOG_SUM = "logsum"  # sum of natural logs: proportional fairness
    SUM = "sum"

    @classmethod
    def parse(cls, text: str) -> "Utility":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown utility {text!r}; expected logsum or sum") from None


class InfeasibleProblemError(ValueError):
    """No association can satisfy the minimum-rate constraint."""

    def __init__(self, ue_indices, message: str | None = None):
        self.ue_indices = tuple(int(j) for j in ue_indices)
        if message is None:
            message = f"minimum rate cannot be met for UE(s) {list(self.ue_indices)}"
        super().__init__(message)


class ProblemSizeError(ValueError):
    """The instance exceeds the exhaustive-enumeration budget."""


@dataclass(frozen=True)
class CellFormationProblem:
    """A fixed topology plus the knobs of the cell-formation optimization.

    ``rf_chains[i]`` virtual BSs are created for physical BS ``i``. The
    channel gain between every virtual BS and UE is the distance power law
    times an optional shadowing multiplier. Geometry angles are measured
    from the positive x axis.
    """

    ue_positions: np.ndarray
    bs_positions: np.ndarray
    rf_chains: tuple[int, ...]
    radio: RadioParams
    mode: Mode = Mode.FULLY
    utility: Utility = Utility.LOG_SUM
    min_rates: np.ndarray | None = None
    bs_min_beamwidth_rad: float = DEFAULT_BS_MIN_BEAMWIDTH_RAD
    ue_min_beamwidth_rad: float = DEFAULT_UE_MIN_BEAMWIDTH_RAD
    shadowing: np.ndarray | None = None

    def __post_init__(self):
        ue = np.atleast_2d(np.asarray(self.ue_positions, dtype=float))
        bs = np.atleast_2d(np.asarray(self.bs_positions, dtype=float))
        if ue.shape[1] != 2 or bs.shape[1] != 2:
            raise ValueError("positions must be (n, 2) arrays of planar coordinates")
        if not (np.isfinite(ue).all() and np.isfinite(bs).all()):
            raise ValueError("positions must be finite")
        chains = tuple(int(c) for c in np.atleast_1d(self.rf_chains))
        if len(chains) != len(bs):
            raise ValueError("need one RF-chain count per physical BS")
        if any(c < 1 for c in chains):
            raise ValueError("every BS needs at least one RF chain")
        rates = self.min_rates
        rates = np.zeros(len(ue)) if rates is None else np.asarray(rates, dtype=float)
        if rates.shape != (len(ue),):
            raise ValueError("need one minimum rate per UE")
        if np.any(rates < 0):
            raise ValueError("minimum rates must be non-negative")
        for name, width in (
            ("BS", self.bs_min_beamwidth_rad),
            ("UE", self.ue_min_beamwidth_rad),
        ):
            if not 0.0 < width <= TWO_PI:
                raise ValueError(f"{name} minimum beamwidth must lie in (0, 2*pi]")
        object.__setattr__(self, "ue_positions", ue)
        object.__setattr__(self, "bs_positions", bs)
        object.__setattr__(self, "rf_chains", chains)
        object.__setattr__(self, "min_rates", rates)
        if self.shadowing is not None:
            shadow = np.asarray(self.shadowing, dtype=float)
            if shadow.shape != (self.n_virtual, self.n_ue):
                raise ValueError("shadowing must have shape (virtual BSs, UEs)")
            if np.any(shadow <= 0):
                raise ValueError("shadowing multipliers must be positive")
            object.__setattr__(self, "shadowing", shadow)
        if np.any(self.distances <= 0):
            raise ValueError("every UE must be strictly separated from every BS")

    @property
    def n_ue(self) -> int:
        return len(self.ue_positions)

    @property
    def n_virtual(self) -> int:
        return sum(self.rf_chains)

    @cached_property
    def virtual_owner(self) -> np.ndarray:
        """Physical BS index of each virtual BS."""
        return np.repeat(np.arange(len(self.bs_positions)), self.rf_chains)

    @cached_property
    def virtual_positions(self) -> np.ndarray:
        return self.bs_positions[self.virtual_owner]

    @cached_property
    def distances(self) -> np.ndarray:
        delta = self.ue_positions[None, :, :] - self.virtual_positions[:, None, :]
        return np.hypot(delta[:, :, 0], delta[:, :, 1])

    @cached_property
    def bs_to_ue_angles(self) -> np.ndarray:
        """Angle at which virtual BS i sees UE j, shape (virtual, UE)."""
        delta = self.ue_positions[None, :, :] - self.virtual_positions[:, None, :]
        return wrap_angle(np.arctan2(delta[:, :, 1], delta[:, :, 0]))

    @cached_property
    def ue_to_bs_angles(self) -> np.ndarray:
        """Angle at which UE j sees virtual BS i; opposite of the BS view."""
        return wrap_angle(self.bs_to_ue_angles + math.pi)

    @cached_property
    def channel_gains(self) -> np.ndarray:
        gains = path_gain(self.distances, self.radio)
        if self.shadowing is not None:
            gains = gains * self.shadowing
        return gains

    @property
    def bs_beamwidth_floor(self) -> float:
        """Narrowest BS beam the mode permits (omni forces 2*pi)."""
        return TWO_PI if self.mode is Mode.OMNI else self.bs_min_beamwidth_rad

    @property
    def ue_beamwidth_floor(self) -> float:
        """Narrowest UE beam the mode permits (only fully-directional
        operation lets users beamform)."""
        return self.ue_min_beamwidth_rad if self.mode is Mode.FULLY else TWO_PI

    def with_mode(self, mode: Mode) -> "CellFormationProblem":
        return replace(self, mode=mode)

    def with_rf_chains(self, chains) -> "CellFormationProblem":
        """Same topology with a new chain count (scalar applies to every
        BS). Any shadowing matrix is dropped: its shape is tied to the old
        virtual-BS count."""
        if np.ndim(chains) == 0:
            chains = (int(chains),) * len(self.bs_positions)
        return replace(self, rf_chains=tuple(chains), shadowing=None)


@dataclass(frozen=True)
class BeamConfig:
    """Operating beamwidth and boresight of every virtual BS and UE."""

    bs_beamwidths: np.ndarray
    bs_boresights: np.ndarray
    ue_beamwidths: np.ndarray
    ue_boresights: np.ndarray


@dataclass(frozen=True)
class Association:
    """Binary association x (virtual BS x UE) and resource shares y."""

    x: np.ndarray
    y: np.ndarray

    @classmethod
    def from_serving(cls, serving: np.ndarray, n_virtual: int) -> "Association":
        """Equal-share association: each chain splits its resources evenly
        over the UEs it serves."""
        n_ue = len(serving)
        x = np.zeros((n_virtual, n_ue))
        x[serving, np.arange(n_ue)] = 1.0
        loads = np.bincount(serving, minlength=n_virtual)
        shares = np.where(loads > 0, 1.0 / np.maximum(loads, 1), 0.0)
        return cls(x=x, y=x * shares[:, None])

    @property
    def serving(self) -> np.ndarray:
        return np.argmax(self.x, axis=0)

    @property
    def loads(self) -> np.ndarray:
        return self.x.sum(axis=1).astype(int)

    def validate(self) -> None:
        if not np.all((self.x == 0) | (self.x == 1)):
            raise ValueError("association entries must be binary")
        if not np.allclose(self.x.sum(axis=0), 1.0):
            raise ValueError("every UE must be associated with exactly one virtual BS")
        if np.any(self.y.sum(axis=1) > 1.0 + 1e-9):
            raise ValueError("resource shares of a virtual BS must sum to at most 1")
        if np.any(self.y < -1e-12) or np.any(self.y > self.x + 1e-12):
            raise ValueError("shares must satisfy 0 <= y <= x")


def directivity_gains(beams: BeamConfig, problem: CellFormationProblem):
    """Transmit- and receive-side sectored gains for every BS-UE pair."""
    eps = problem.radio.sidelobe_gain
    bs_gain = main_lobe_gain(beams.bs_beamwidths, eps)
    off_b = (
        angular_distance(problem.bs_to_ue_angles, beams.bs_boresights[:, None])
        > beams.bs_beamwidths[:, None] / 2.0
    )
    g_b = np.where(off_b, eps, bs_gain[:, None])
    ue_gain = main_lobe_gain(beams.ue_beamwidths, eps)
    off_u = (
        angular_distance(problem.ue_to_bs_angles, beams.ue_boresights[None, :])
        > beams.ue_beamwidths[None, :] / 2.0
    )
    g_u = np.where(off_u, eps, ue_gain[None, :])
    return g_b, g_u


def sinr_matrix(problem: CellFormationProblem, beams: BeamConfig) -> np.ndarray:
    """Long-term SINR of every virtual BS -> UE link: received power over
    the sum of all other chains' received powers plus noise."""
    g_b, g_u = directivity_gains(beams, problem)
    received = problem.radio.tx_power_mw * g_b * problem.channel_gains * g_u
    total = received.sum(axis=0)
    return received / (total - received + problem.radio.noise_power_mw)


def rate_matrix(sinr: np.ndarray) -> np.ndarray:
    """Spectral efficiency of each link in bit/s/Hz."""
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    return np.log2(1.0 + sinr)


def equal_shares(x: np.ndarray) -> np.ndarray:
    """Even split of each chain's resources over its associated UEs."""
    loads = x.sum(axis=1)
    return x / np.maximum(loads, 1.0)[:, None]


def equal_share_rates(x: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """Per-UE long-term rate under the equal-share split."""
    return (equal_shares(x) * rates).sum(axis=0)


def objective_value(ue_rates: np.ndarray, utility: Utility) -> float:
    """Aggregate utility of the per-UE rates."""
    r = np.asarray(ue_rates, dtype=float)
    if utility is Utility.SUM:
        return float(r.sum())
    if np.any(r <= 0):
        bad = np.flatnonzero(r <= 0)
        raise InfeasibleProblemError(
            bad, f"log utility undefined: UE(s) {list(bad)} receive zero rate"
        )
    return float(np.log(r).sum())


def jain_index(ue_rates: np.ndarray) -> float:
    """Fairness in [1/n, 1]: 1 when all rates are equal."""
    r = np.asarray(ue_rates, dtype=float)
    denom = len(r) * float((r**2).sum())
    if denom == 0:
        raise ValueError("Jain index undefined for all-zero rates")
    return float(r.sum()) ** 2 / denom


@dataclass(frozen=True)
class Solution:
    """A feasible cell formation with its rates and summary metrics."""

    mode: Mode
    utility: Utility
    beams: BeamConfig
    association: Association
    sinr: np.ndarray
    link_rates: np.ndarray
    ue_rates: np.ndarray
    objective: float
    sidelobe_gain: float

    @property
    def sum_rate(self) -> float:
        return float(self.ue_rates.sum())

    @property
    def min_rate(self) -> float:
        return float(self.ue_rates.min())

    @property
    def jain(self) -> float:
        return jain_index(self.ue_rates)
