"""Closed-form statistics of directional cell discovery.

A user waits while every in-range base station sweeps pilot signals over
``N_s = ceil(2*pi / theta)`` sectors in random order, one sector per epoch.
Conditioned on at least one base station being in range, the epoch of first
discovery has a closed-form distribution in the expected in-range count
``rho``; this module evaluates that distribution, its mean, and the epoch
budget needed for a target discovery probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .radio import TWO_PI, Mode, RadioParams, max_range

# Below this expected in-range count the closed forms are 0/0; use limits.
_RHO_LIMIT = 1e-6
# Below this the mean is evaluated by the cancellation-free pmf sum.
_RHO_SERIES = 1e-3


def sector_count(beamwidth_rad: float) -> int:
    """Number of non-overlapping sweep sectors, ``ceil(2*pi / theta)``.

    A relative guard absorbs float noise when the beamwidth divides the
    circle exactly (20 degrees must give 18 sectors, not 19).
    """
    if not 0.0 < beamwidth_rad <= TWO_PI:
        raise ValueError("beamwidth must lie in (0, 2*pi]")
    ratio = TWO_PI / beamwidth_rad
    return max(1, math.ceil(ratio - 1e-9))


def effective_density(
    rho_u: float, d_max_m: float, mode: Mode, beamwidth_rad: float | None = None
) -> float:
    """Expected number of in-range LoS base stations.

    With an omnidirectional receiver the listening region is the full disc
    of radius ``d_max_m``; a directional receiver fixed to one sector of
    width ``theta`` hears only the circle sector ``theta * d**2 / 2``.
    """
    if rho_u <= 0:
        raise ValueError("LoS BS density must be positive")
    if d_max_m <= 0:
        raise ValueError("maximum range must be positive")
    if mode is Mode.SEMI:
        area = math.pi * d_max_m**2
    elif mode is Mode.FULLY:
        if beamwidth_rad is None or not 0.0 < beamwidth_rad <= TWO_PI:
            raise ValueError("fully-directional mode requires a beamwidth in (0, 2*pi]")
        area = beamwidth_rad / 2.0 * d_max_m**2
    else:
        raise ValueError("discovery is defined for semi or fully directional modes only")
    return rho_u * area


def _validate_rho_sectors(rho: float, sectors: int) -> None:
    if not rho > 0:
        raise ValueError("expected in-range count rho must be positive")
    if not (isinstance(sectors, (int,)) and sectors >= 1):
        raise ValueError("sector count must be a positive integer")


def discovery_pmf(rho: float, sectors: int, epoch: int) -> float:
    """Probability that a discoverable user is first found exactly at ``epoch``."""
    _validate_rho_sectors(rho, sectors)
    if not 1 <= epoch <= sectors:
        raise ValueError(f"epoch must lie in 1..{sectors}")
    x = rho / sectors
    norm = -math.expm1(-rho)
    if x <= 700.0:
        return math.exp(-epoch * x) * math.expm1(x) / norm
    # expm1(x) overflows; the algebraically equal difference form cannot.
    return (math.exp(-(epoch - 1) * x) - math.exp(-epoch * x)) / norm


def discovery_cdf(rho: float, sectors: int, epochs: float) -> float:
    """Probability that a discoverable user is found within ``epochs`` epochs."""
    _validate_rho_sectors(rho, sectors)
    if not 0 <= epochs <= sectors:
        raise ValueError(f"epochs must lie in 0..{sectors}")
    return -math.expm1(-rho * epochs / sectors) / -math.expm1(-rho)


def mean_discovery_epochs(rho: float, sectors: int) -> float:
    """Average number of sweep epochs until a discoverable user is found.

    The closed form is evaluated with every exponential scaled to at most
    one, i.e. as ``(1 - (N+1)e^{-rho} + N e^{-rho(1+1/N)}) /
    ((1 - e^{-rho})(1 - e^{-rho/N}))``, which cannot overflow. For small
    ``rho`` that numerator cancels catastrophically, so below 1e-3 the mean
    is summed from the pmf (itself expm1-safe), and below 1e-6 the exact
    sparse-network limit ``(N + 1) / 2`` is returned.
    """
    _validate_rho_sectors(rho, sectors)
    n = sectors
    if rho < _RHO_LIMIT:
        return (n + 1) / 2.0
    if rho < _RHO_SERIES:
        return sum(k * discovery_pmf(rho, n, k) for k in range(1, n + 1))
    x = rho / n
    numerator = 1.0 - (n + 1) * math.exp(-rho) + n * math.exp(-(rho + x))
    denominator = (-math.expm1(-rho)) * (-math.expm1(-x))
    return numerator / denominator


def min_epochs_for_probability(rho: float, sectors: int, mu: float) -> int:
    """Smallest epoch budget that discovers a discoverable user with
    probability at least ``mu``; always within ``1..sectors``."""
    _validate_rho_sectors(rho, sectors)
    if not 0.0 < mu < 1.0:
        raise ValueError("target probability must lie in (0, 1)")
    # ceil(N - (N/rho) ln(mu + (1-mu) e^rho)) rearranged to avoid e^rho overflow.
    raw = -(sectors / rho) * math.log1p(mu * math.expm1(-rho))
    epochs = min(max(math.ceil(raw - 1e-9), 1), sectors)
    # Settle float-boundary cases against the cdf itself.
    while epochs < sectors and discovery_cdf(rho, sectors, epochs) < mu:
        epochs += 1
    while epochs > 1 and discovery_cdf(rho, sectors, epochs - 1) >= mu:
        epochs -= 1
    return epochs


def semi_to_fully_density_ratio(beamwidth_rad: float, pathloss_exponent: float) -> float:
    """Ratio of in-range BS counts, omnidirectional over sector listening.

    Under the vanishing-side-lobe range formulas the ratio collapses to
    ``(2*pi / theta) ** (1 - 2/alpha)``, which is at least 1: an
    omnidirectional listener always sees more base stations.
    """
    if not 0.0 < beamwidth_rad <= TWO_PI:
        raise ValueError("beamwidth must lie in (0, 2*pi]")
    if not pathloss_exponent > 2:
        raise ValueError("path-loss exponent must exceed 2")
    return (TWO_PI / beamwidth_rad) ** (1.0 - 2.0 / pathloss_exponent)


@dataclass(frozen=True)
class DiscoveryModel:
    """A discovery scenario: LoS BS density, listening mode, and beamwidth,
    reduced to the effective in-range count and sector budget."""

    los_density_per_m2: float
    mode: Mode
    beamwidth_rad: float
    effective_density: float
    sector_count: int

    @classmethod
    def from_radio(
        cls,
        los_density_per_m2: float,
        radio: RadioParams,
        mode: Mode,
        beamwidth_rad: float,
        exact: bool = True,
    ) -> "DiscoveryModel":
        d = max_range(radio, mode, beamwidth_rad, exact=exact)
        rho = effective_density(los_density_per_m2, d, mode, beamwidth_rad)
        return cls(
            los_density_per_m2=los_density_per_m2,
            mode=mode,
            beamwidth_rad=beamwidth_rad,
            effective_density=rho,
            sector_count=sector_count(beamwidth_rad),
        )

    def pmf(self, epoch: int) -> float:
        return discovery_pmf(self.effective_density, self.sector_count, epoch)

    def cdf(self, epochs: float) -> float:
        return discovery_cdf(self.effective_density, self.sector_count, epochs)

    def mean_epochs(self) -> float:
        return mean_discovery_epochs(self.effective_density, self.sector_count)

    def min_epochs(self, mu: float) -> int:
        return min_epochs_for_probability(self.effective_density, self.sector_count, mu)
