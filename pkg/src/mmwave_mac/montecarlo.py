"""Monte Carlo engines that cross-check every closed form in the toolkit.

Base stations with line-of-sight to a typical user at the origin form a
Poisson field; trials sample that field and replay coverage and the random
sector sweep. Each trial draws from its own counter-based random stream
keyed by ``(seed, trial)``, so results are bit-reproducible regardless of
execution order or parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discovery import effective_density, sector_count
from .radio import TWO_PI, Mode, RadioParams, angular_distance, max_range, wrap_angle

_MAX_UINT64 = 2**64


class WindowTooSmallError(ValueError):
    """The simulation window clips the disc of the maximum range."""


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial.

    Uses the counter-based Philox generator keyed directly by
    ``(seed, trial_index)``: streams for different trials never overlap and
    can be drawn in any order or in parallel.
    """
    if not 0 <= seed < _MAX_UINT64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    if trial_index < 0:
        raise ValueError("trial index must be non-negative")
    key = np.array([seed, trial_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SimWindow:
    """Axis-aligned sampling window centered on the typical user."""

    width_m: float
    height_m: float

    def __post_init__(self):
        if self.width_m <= 0 or self.height_m <= 0:
            raise ValueError("window dimensions must be positive")

    @property
    def area_m2(self) -> float:
        return self.width_m * self.height_m

    def require_fits_disc(self, radius_m: float) -> None:
        if radius_m > min(self.width_m, self.height_m) / 2.0:
            raise WindowTooSmallError(
                f"disc of radius {radius_m:.1f} m does not fit in a "
                f"{self.width_m:.1f} x {self.height_m:.1f} m window"
            )


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo run: radio budget, mode, beamwidth, density, trials."""

    trials: int
    seed: int
    radio: RadioParams
    mode: Mode
    beamwidth_rad: float
    los_density_per_m2: float

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not 0 <= self.seed < _MAX_UINT64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.los_density_per_m2 < 0:
            raise ValueError("LoS BS density must be non-negative")
        if not 0.0 < self.beamwidth_rad <= TWO_PI:
            raise ValueError("beamwidth must lie in (0, 2*pi]")

    def max_range_m(self) -> float:
        theta = None if self.mode is Mode.OMNI else self.beamwidth_rad
        return max_range(self.radio, self.mode, theta)

    def default_window(self) -> SimWindow:
        side = 4.0 * self.max_range_m()
        return SimWindow(side, side)


def sample_los_field(
    config: SimConfig, trial_index: int, window: SimWindow | None = None
) -> np.ndarray:
    """Sample one Poisson field of LoS BS positions, shape ``(n, 2)``.

    The count is Poisson with mean ``density * window area`` and positions
    are uniform over the window; the draw is a pure function of
    ``(config.seed, trial_index)``.
    """
    window = window or config.default_window()
    rng = trial_rng(config.seed, trial_index)
    count = rng.poisson(config.los_density_per_m2 * window.area_m2)
    half = np.array([window.width_m / 2.0, window.height_m / 2.0])
    return rng.uniform(-half, half, size=(count, 2))


def closed_form_coverage(rho_u: float, d_max_m: float) -> float:
    """Probability that at least one LoS BS lies within ``d_max_m``:
    ``1 - exp(-rho_u * pi * d_max**2)``."""
    if rho_u < 0:
        raise ValueError("LoS BS density must be non-negative")
    if d_max_m <= 0:
        raise ValueError("maximum range must be positive")
    return -math.expm1(-rho_u * math.pi * d_max_m**2)


def min_density_for_coverage(level: float, d_max_m: float) -> float:
    """LoS BS density per m2 needed for the given coverage probability."""
    if not 0.0 < level < 1.0:
        raise ValueError("coverage level must lie in (0, 1)")
    if d_max_m <= 0:
        raise ValueError("maximum range must be positive")
    return -math.log1p(-level) / (math.pi * d_max_m**2)


@dataclass(frozen=True)
class CoverageEstimate:
    probability: float
    stderr: float
    trials: int
    hits: int


def mc_coverage(config: SimConfig, window: SimWindow | None = None) -> CoverageEstimate:
    """Empirical probability that some sampled BS is within the maximum range.

    Coverage asks whether service is available at all, so the user is free
    to steer toward any direction and the full disc of radius ``max_range``
    counts for every mode; directionality enters through the range itself.
    """
    d = config.max_range_m()
    window = window or config.default_window()
    window.require_fits_disc(d)
    d2 = d * d
    hits = 0
    for trial in range(config.trials):
        pos = sample_los_field(config, trial, window)
        if pos.size and np.min(pos[:, 0] ** 2 + pos[:, 1] ** 2) <= d2:
            hits += 1
    p = hits / config.trials
    stderr = math.sqrt(p * (1.0 - p) / config.trials)
    return CoverageEstimate(probability=p, stderr=stderr, trials=config.trials, hits=hits)


@dataclass(frozen=True)
class DiscoveryStats:
    """Empirical epoch-of-discovery statistics, conditioned on discovery
    being possible (at least one in-range BS)."""

    epoch_counts: np.ndarray
    sectors: int
    trials: int
    attempts: int
    outages: int

    @property
    def outage_rate(self) -> float:
        return self.outages / self.attempts

    def pmf(self) -> np.ndarray:
        return self.epoch_counts / self.trials

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.epoch_counts) / self.trials

    @property
    def mean(self) -> float:
        epochs = np.arange(1, self.sectors + 1)
        return float(np.dot(epochs, self.epoch_counts) / self.trials)

    @property
    def stderr(self) -> float:
        epochs = np.arange(1, self.sectors + 1)
        second = np.dot(epochs**2, self.epoch_counts) / self.trials
        var = max(second - self.mean**2, 0.0)
        return math.sqrt(var / self.trials)

    def quantile(self, q: float) -> int:
        """Smallest epoch whose empirical cdf reaches ``q``."""
        if not 0.0 < q <= 1.0:
            raise ValueError("quantile level must lie in (0, 1]")
        return int(np.searchsorted(self.cdf(), q) + 1)


def _sector_sweep(rng: np.random.Generator, sectors: int) -> np.ndarray:
    """Random pilot-sweep order: a uniform permutation of all sectors, one
    sector per epoch, so every sector is visited exactly once."""
    return rng.permutation(sectors)


def _bs_discovery_epoch(rng: np.random.Generator, sectors: int, ue_sector: int) -> int:
    """Epoch (1-based) at which one BS's random sweep hits the user's sector."""
    sweep = _sector_sweep(rng, sectors)
    return int(np.nonzero(sweep == ue_sector)[0][0]) + 1


def mc_discovery(
    config: SimConfig,
    window: SimWindow | None = None,
    max_attempt_factor: int = 50,
) -> DiscoveryStats:
    """Replay the random sector sweep on sampled BS fields.

    A BS takes part if it is within the mode's maximum range; a
    directionally listening user additionally requires the BS to fall in
    its fixed listening sector (boresight along +x, width ``beamwidth``).
    Each participating BS sweeps its sectors in an independent random
    order; the user is discovered at the first epoch any participating BS
    probes the sector containing it. Trials with no participating BS are
    outages: they are excluded from the epoch statistics and resampled
    until ``config.trials`` conditioned samples are collected.
    """
    if config.mode is Mode.OMNI:
        raise ValueError("discovery is defined for semi or fully directional modes only")
    if config.los_density_per_m2 <= 0:
        raise ValueError("discovery requires a positive LoS BS density")
    d = config.max_range_m()
    window = window or config.default_window()
    window.require_fits_disc(d)
    sectors = sector_count(config.beamwidth_rad)
    rho = effective_density(config.los_density_per_m2, d, config.mode, config.beamwidth_rad)
    discoverable = -math.expm1(-rho)
    max_attempts = max(10 * config.trials, math.ceil(config.trials / discoverable) * max_attempt_factor)

    d2 = d * d
    half_width = config.beamwidth_rad / 2.0
    sector_width = TWO_PI / sectors
    counts = np.zeros(sectors, dtype=np.int64)
    collected = 0
    attempts = 0
    while collected < config.trials:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"gave up after {attempts} trials with outage rate "
                f"{1 - collected / attempts:.3g}; the expected in-range count "
                f"{rho:.3g} makes discovery too rare to sample"
            )
        trial = attempts
        attempts += 1
        rng = trial_rng(config.seed, trial)
        count = rng.poisson(config.los_density_per_m2 * window.area_m2)
        if count == 0:
            continue
        half = np.array([window.width_m / 2.0, window.height_m / 2.0])
        pos = rng.uniform(-half, half, size=(count, 2))
        in_range = pos[:, 0] ** 2 + pos[:, 1] ** 2 <= d2
        if config.mode is Mode.FULLY:
            toward_bs = np.arctan2(pos[:, 1], pos[:, 0])
            in_range &= angular_distance(toward_bs, 0.0) <= half_width
        idx = np.flatnonzero(in_range)
        if idx.size == 0:
            continue
        # Sector of each BS's own sweep grid that contains the user.
        toward_ue = wrap_angle(np.arctan2(-pos[idx, 1], -pos[idx, 0]))
        ue_sectors = np.minimum((toward_ue / sector_width).astype(int), sectors - 1)
        epoch = min(_bs_discovery_epoch(rng, sectors, s) for s in ue_sectors)
        counts[epoch - 1] += 1
        collected += 1
    return DiscoveryStats(
        epoch_counts=counts,
        sectors=sectors,
        trials=config.trials,
        attempts=attempts,
        outages=attempts - collected,
    )


def mc_discovery_epochs(rho: float, sectors: int, trials: int, seed: int) -> DiscoveryStats:
    """Sector-sweep discovery driven by the in-range count alone.

    The number of participating BSs is Poisson with mean ``rho``
    conditioned on being at least 1; each contributes an independent
    uniform sweep. This samples the same distribution as the geometric
    engine but without laying out positions, which makes it the natural
    cross-check for the closed forms at a prescribed ``rho``.
    """
    if rho <= 0:
        raise ValueError("expected in-range count rho must be positive")
    if sectors < 1:
        raise ValueError("sector count must be a positive integer")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    counts = np.zeros(sectors, dtype=np.int64)
    for trial in range(trials):
        rng = trial_rng(seed, trial)
        for _ in range(100_000):
            m = rng.poisson(rho)
            if m > 0:
                break
        else:  # pragma: no cover - probability ~ exp(-1e4)
            raise RuntimeError("failed to draw a non-empty BS count")
        epoch = int(rng.integers(1, sectors + 1, size=m).min())
        counts[epoch - 1] += 1
    return DiscoveryStats(
        epoch_counts=counts, sectors=sectors, trials=trials, attempts=trials, outages=0
    )
