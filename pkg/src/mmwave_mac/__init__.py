"""Directional mmWave MAC analysis toolkit: sectored link budgets,
cell-discovery statistics, Monte Carlo validation, and cell formation."""

from .cells import (
    Association,
    BeamConfig,
    CellFormationProblem,
    InfeasibleProblemError,
    ProblemSizeError,
    Solution,
    Utility,
    directivity_gains,
    equal_share_rates,
    equal_shares,
    jain_index,
    objective_value,
    rate_matrix,
    sinr_matrix,
)
from .discovery import (
    DiscoveryModel,
    discovery_cdf,
    discovery_pmf,
    effective_density,
    mean_discovery_epochs,
    min_epochs_for_probability,
    sector_count,
    semi_to_fully_density_ratio,
)
from .montecarlo import (
    CoverageEstimate,
    DiscoveryStats,
    SimConfig,
    SimWindow,
    WindowTooSmallError,
    closed_form_coverage,
    mc_coverage,
    mc_discovery,
    mc_discovery_epochs,
    min_density_for_coverage,
    sample_los_field,
    trial_rng,
)
from .radio import (
    Beam,
    Mode,
    RadioParams,
    angular_distance,
    db_to_linear,
    dbm_to_mw,
    linear_to_db,
    main_lobe_gain,
    max_range,
    mw_to_dbm,
    path_gain,
    range_gain,
    sector_gain,
    sector_gains,
    wrap_angle,
)
from .solver import SolverParams, SweepCell, brute_force, mode_sweep, solve

__version__ = "0.1.0"
