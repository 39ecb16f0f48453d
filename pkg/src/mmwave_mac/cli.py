"""Command-line experiment runner.

``mmwave-mac run CONFIG [--seed N] [--trials N] [--out DIR]`` executes one
experiment described by a config file and writes a CSV plus a JSON
metadata sidecar. Output bytes are a pure function of the config file and
seed: rows are computed from per-point random streams and sorted by their
sweep keys, so the worker count (environment variable
``MMWAVE_MAC_WORKERS``) never changes the result, only the wall time.

Exit codes: 0 success, 2 configuration error, 3 infeasible problem,
4 numeric or domain error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .cells import CellFormationProblem, InfeasibleProblemError
from .config import (
    CellsSpec,
    ConfigError,
    CoverageSweep,
    DiscoverySweep,
    ExperimentConfig,
    MinDensitySweep,
    RangeGainSweep,
    load_config,
)
from .discovery import DiscoveryModel
from .montecarlo import SimConfig, closed_form_coverage, mc_coverage, mc_discovery, min_density_for_coverage, trial_rng
from .radio import TWO_PI, Mode, max_range, range_gain
from .solver import SolverParams, mode_sweep

WORKERS_ENV = "MMWAVE_MAC_WORKERS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4


def _fmt(value) -> str:
    """Locale-independent cell rendering; floats get 6 significant digits."""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def _point_seed(seed: int, index: int) -> int:
    """Stable per-sweep-point sub-seed so points never share a stream."""
    state = np.random.SeedSequence(entropy=seed, spawn_key=(index,)).generate_state(1, np.uint64)
    return int(state[0])


def _mode_theta(mode: Mode, theta_deg: float) -> float | None:
    return None if mode is Mode.OMNI else math.radians(theta_deg)


def _run_range_gain(cfg: ExperimentConfig):
    sweep: RangeGainSweep = cfg.sweep
    rows = [
        (g, a, range_gain(g, a))
        for g in sweep.gains_db
        for a in sweep.alphas
    ]
    return ["gain_db", "alpha", "range_gain"], rows


def _coverage_point(args):
    cfg, index, density, mode = args
    sweep: CoverageSweep = cfg.sweep
    theta = _mode_theta(mode, sweep.theta_deg)
    d_max = max_range(cfg.radio, mode, theta)
    sim = SimConfig(
        trials=cfg.trials,
        seed=_point_seed(cfg.seed, index),
        radio=cfg.radio,
        mode=mode,
        beamwidth_rad=theta if theta is not None else TWO_PI,
        los_density_per_m2=density,
    )
    estimate = mc_coverage(sim)
    return (
        density,
        mode.value,
        sweep.theta_deg,
        cfg.radio.pathloss_exponent,
        cfg.radio.carrier_frequency_hz / 1e9,
        closed_form_coverage(density, d_max),
        estimate.probability,
        estimate.stderr,
        cfg.trials,
    )


def _run_coverage(cfg: ExperimentConfig):
    sweep: CoverageSweep = cfg.sweep
    points = [
        (cfg, i, density, mode)
        for i, (density, mode) in enumerate(
            (d, m) for d in sweep.densities for m in sweep.modes
        )
    ]
    columns = [
        "density", "mode", "theta_deg", "alpha", "freq_ghz",
        "coverage_cf", "coverage_mc", "stderr", "trials",
    ]
    return columns, _map_points(_coverage_point, points)


def _run_min_density(cfg: ExperimentConfig):
    sweep: MinDensitySweep = cfg.sweep
    rows = []
    for theta_deg in sweep.thetas_deg:
        for mode in sweep.modes:
            d_max = max_range(cfg.radio, mode, _mode_theta(mode, theta_deg))
            rows.append(
                (
                    theta_deg,
                    mode.value,
                    sweep.level,
                    cfg.radio.pathloss_exponent,
                    cfg.radio.carrier_frequency_hz / 1e9,
                    min_density_for_coverage(sweep.level, d_max),
                )
            )
    columns = ["theta_deg", "mode", "level", "alpha", "freq_ghz", "min_density"]
    return columns, rows


def _discovery_point(args):
    cfg, index, density, mode, theta_deg = args
    sweep: DiscoverySweep = cfg.sweep
    theta = math.radians(theta_deg)
    model = DiscoveryModel.from_radio(density, cfg.radio, mode, theta)
    sim = SimConfig(
        trials=cfg.trials,
        seed=_point_seed(cfg.seed, index),
        radio=cfg.radio,
        mode=mode,
        beamwidth_rad=theta,
        los_density_per_m2=density,
    )
    stats = mc_discovery(sim)
    return (
        density,
        mode.value,
        theta_deg,
        cfg.radio.pathloss_exponent,
        model.effective_density,
        model.mean_epochs(),
        stats.mean,
        stats.stderr,
        model.min_epochs(sweep.mu),
    )


def _run_discovery(cfg: ExperimentConfig):
    sweep: DiscoverySweep = cfg.sweep
    points = [
        (cfg, i, density, mode, theta_deg)
        for i, (density, mode, theta_deg) in enumerate(
            (d, m, t)
            for d in sweep.densities
            for m in sweep.modes
            for t in sweep.thetas_deg
        )
    ]
    columns = [
        "density", "mode", "theta_deg", "alpha", "rho_eff",
        "mean_epochs_cf", "mean_epochs_mc", "stderr", f"min_epochs_p{sweep.mu:g}",
    ]
    return columns, _map_points(_discovery_point, points)


def sample_topology(seed: int, topology_seed: int, n_bs: int, n_ue: int, side_m: float):
    """BS and UE positions, uniform over a square, keyed by both seeds.

    UEs landing within a meter of a BS are redrawn so the distance power
    law stays finite.
    """
    rng = trial_rng(seed, topology_seed)
    bs = rng.uniform(0.0, side_m, size=(n_bs, 2))
    ue = np.empty((n_ue, 2))
    for j in range(n_ue):
        for _ in range(1000):
            candidate = rng.uniform(0.0, side_m, size=2)
            if np.min(np.hypot(*(candidate - bs).T)) >= 1.0:
                ue[j] = candidate
                break
        else:  # pragma: no cover - needs a pathological area/BS ratio
            raise RuntimeError("could not place a UE at least 1 m away from every BS")
    return bs, ue


def _cells_point(args):
    cfg, topology_seed = args
    spec: CellsSpec = cfg.sweep
    bs, ue = sample_topology(cfg.seed, topology_seed, spec.n_bs, spec.n_ue, spec.area_side_m)
    problem = CellFormationProblem(
        ue_positions=ue,
        bs_positions=bs,
        rf_chains=(1,) * spec.n_bs,
        radio=cfg.radio,
        utility=spec.utility,
        min_rates=np.full(spec.n_ue, spec.min_rate),
        bs_min_beamwidth_rad=math.radians(spec.bs_min_beamwidth_deg),
        ue_min_beamwidth_rad=math.radians(spec.ue_min_beamwidth_deg),
    )
    params = SolverParams(seed=cfg.seed, n_starts=spec.solver_starts)
    rows = []
    failures = []
    for cell in mode_sweep(problem, spec.rf_chains, params, modes=spec.modes):
        if cell.solution is None:
            rows.append((topology_seed, cell.mode.value, cell.rf_per_bs,
                         float("nan"), float("nan"), float("nan")))
            failures.append(f"topology {topology_seed} {cell.mode.value}/"
                            f"{cell.rf_per_bs} chains: {cell.error}")
        else:
            sol = cell.solution
            rows.append((topology_seed, cell.mode.value, cell.rf_per_bs,
                         sol.sum_rate, sol.min_rate, sol.jain))
    return rows, failures


def _run_cells(cfg: ExperimentConfig):
    spec: CellsSpec = cfg.sweep
    points = [(cfg, s) for s in spec.topology_seeds]
    results = _map_points(_cells_point, points)
    rows, failures = [], []
    for point_rows, point_failures in results:
        rows.extend(point_rows)
        failures.extend(point_failures)
    for failure in failures:
        print(f"warning: {failure}", file=sys.stderr)
    if rows and len(failures) == len(rows):
        raise InfeasibleProblemError(
            [], "every (topology, mode, chains) cell was infeasible"
        )
    columns = ["seed", "mode", "rf_per_bs", "sum_rate", "min_rate", "jain"]
    return columns, rows


def _map_points(func, points):
    workers = _worker_count()
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, points))
    return [func(p) for p in points]


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        workers = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return workers


_RUNNERS = {
    "range-gain": _run_range_gain,
    "coverage": _run_coverage,
    "min-density": _run_min_density,
    "discovery": _run_discovery,
    "cells": _run_cells,
}


def _sort_key(row):
    # Column types are homogeneous, so position-wise comparison is safe;
    # rows are uniquely keyed by their leading sweep columns.
    return tuple(v if isinstance(v, str) else float(v) for v in row)


def run(cfg: ExperimentConfig) -> tuple[str, str]:
    """Execute one experiment; returns the CSV and metadata paths."""
    columns, rows = _RUNNERS[cfg.kind](cfg)
    rows = sorted(rows, key=_sort_key)
    os.makedirs(cfg.out_dir, exist_ok=True)
    stem = cfg.kind.replace("-", "_")
    csv_path = os.path.join(cfg.out_dir, f"{stem}.csv")
    meta_path = os.path.join(cfg.out_dir, f"{stem}.meta.json")
    lines = [",".join(columns)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(csv_path, "w", encoding="utf-8", newline="") as handle:
        handle.write("\n".join(lines) + "\n")
    metadata = {
        "kind": cfg.kind,
        "toolkit_version": __version__,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "csv": os.path.basename(csv_path),
        "columns": columns,
        "rows": len(rows),
        "config": cfg.resolved,
    }
    with open(meta_path, "w", encoding="utf-8", newline="") as handle:
        json.dump(metadata, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return csv_path, meta_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mmwave-mac",
        description="Run one experiment described by a config file.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runner = sub.add_parser("run", help="execute an experiment config")
    runner.add_argument("config", help="path to the experiment config file")
    runner.add_argument("--seed", type=int, default=None, help="override the config seed")
    runner.add_argument("--trials", type=int, default=None, help="override the trial count")
    runner.add_argument("--out", default=None, help="override the output directory")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(
            args.config,
            seed_override=args.seed,
            trials_override=args.trials,
            out_override=args.out,
        )
        csv_path, meta_path = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleProblemError as exc:
        print(f"infeasible problem: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {csv_path} and {meta_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
