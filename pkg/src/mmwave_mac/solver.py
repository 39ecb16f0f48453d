"""Heuristic and exhaustive solvers for the cell-formation problem.

The search decomposes into an outer loop over associations and a
deterministic inner rule that turns an association into beams and shares:

* every UE aims its narrowest permitted beam at its serving chain;
* every serving chain points at the circular mean of its UEs' directions
  and opens just wide enough to cover them all (never below the floor);
* idle chains keep a floor-width beam aimed away from the UE population;
* each chain splits its resources evenly over the UEs it serves, which is
  the optimal split under the log utility.

For a given association the inner rule scores a nested set of candidate
configurations (all-omni, directional BSs only, directional both ends, as
the mode permits) and keeps the best, so widening the mode can never
reduce the optimum of the exhaustive solver.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .cells import (
    RATE_FLOOR,
    Association,
    BeamConfig,
    CellFormationProblem,
    InfeasibleProblemError,
    ProblemSizeError,
    Solution,
    Utility,
    main_lobe_gain,
    objective_value,
    rate_matrix,
    sinr_matrix,
)
from .montecarlo import trial_rng
from .radio import TWO_PI, Mode, angular_distance, wrap_angle

# Feasibility slack on the minimum-rate constraint, absorbing float noise.
_RATE_TOL = 1e-9
# Objective gain required to accept a local-search move.
_IMPROVE_TOL = 1e-12
# Rates are floored at this value inside the search objective so that a
# transiently starved UE yields a very bad, but finite, score.
_SEARCH_RATE_FLOOR = 1e-12

BRUTE_FORCE_MAX_VIRTUAL = 4
BRUTE_FORCE_MAX_UE = 6


@dataclass(frozen=True)
class SolverParams:
    """Local-search knobs; identical params and seed give identical output."""

    seed: int = 0
    n_starts: int = 4
    max_moves: int = 10_000


def _circular_mean(angles: np.ndarray) -> float:
    s, c = np.sin(angles).sum(), np.cos(angles).sum()
    if math.hypot(s, c) < 1e-12:
        # Directions cancel out; fall back to the first (lowest-index) UE.
        return float(angles[0])
    return float(wrap_angle(math.atan2(s, c)))


def _fit_bs_beams(problem: CellFormationProblem, serving: np.ndarray):
    """Deterministic BS beams for one association (see module docstring)."""
    n_virtual = problem.n_virtual
    floor = problem.bs_beamwidth_floor
    widths = np.full(n_virtual, floor)
    boresights = np.empty(n_virtual)
    angles = problem.bs_to_ue_angles
    for i in range(n_virtual):
        served = np.flatnonzero(serving == i)
        if served.size == 0:
            # Idle chain: stay narrow and face away from the UE population.
            boresights[i] = wrap_angle(_circular_mean(angles[i]) + math.pi)
            continue
        mean = _circular_mean(angles[i, served])
        span = 2.0 * float(angular_distance(angles[i, served], mean).max())
        widths[i] = min(max(span, floor), TWO_PI)
        boresights[i] = mean
    return widths, boresights


def _candidate_beams(problem: CellFormationProblem, serving: np.ndarray) -> list[BeamConfig]:
    """Nested candidate configurations allowed by the problem's mode."""
    n_virtual, n_ue = problem.n_virtual, problem.n_ue
    omni = BeamConfig(
        bs_beamwidths=np.full(n_virtual, TWO_PI),
        bs_boresights=np.zeros(n_virtual),
        ue_beamwidths=np.full(n_ue, TWO_PI),
        ue_boresights=np.zeros(n_ue),
    )
    candidates = [omni]
    if problem.mode is Mode.OMNI:
        return candidates
    bs_widths, bs_boresights = _fit_bs_beams(problem, serving)
    candidates.append(
        BeamConfig(
            bs_beamwidths=bs_widths,
            bs_boresights=bs_boresights,
            ue_beamwidths=np.full(n_ue, TWO_PI),
            ue_boresights=np.zeros(n_ue),
        )
    )
    ue_floor = problem.ue_beamwidth_floor
    if problem.mode is Mode.FULLY and ue_floor < TWO_PI:
        candidates.append(
            BeamConfig(
                bs_beamwidths=bs_widths,
                bs_boresights=bs_boresights,
                ue_beamwidths=np.full(n_ue, ue_floor),
                ue_boresights=problem.ue_to_bs_angles[serving, np.arange(n_ue)],
            )
        )
    return candidates


def _score(problem: CellFormationProblem, serving: np.ndarray, beams: BeamConfig):
    """(search objective, feasible, ue_rates) for one beam configuration."""
    rates = rate_matrix(sinr_matrix(problem, beams))
    loads = np.bincount(serving, minlength=problem.n_virtual)
    ue_rates = rates[serving, np.arange(problem.n_ue)] / loads[serving]
    feasible = bool(np.all(ue_rates >= problem.min_rates - _RATE_TOL))
    if problem.utility is Utility.SUM:
        score = float(ue_rates.sum())
    else:
        score = float(np.log(np.maximum(ue_rates, _SEARCH_RATE_FLOOR)).sum())
    return score, feasible, ue_rates


def _evaluate(
    problem: CellFormationProblem, serving: np.ndarray, all_candidates: bool
):
    """Best (score, beams, ue_rates) over the candidate configurations.

    Infeasible candidates are skipped; if none is feasible the best
    infeasible score is returned with ``feasible=False`` so the search can
    still rank associations while repairing feasibility.
    """
    best = None
    for beams in _candidate_beams(problem, serving)[:: 1 if all_candidates else -1]:
        score, feasible, ue_rates = _score(problem, serving, beams)
        entry = (feasible, score, beams, ue_rates)
        if best is None or (feasible, score) > (best[0], best[1] + _IMPROVE_TOL):
            best = entry
        if not all_candidates:
            break
    return best


def _build_solution(problem, serving, beams, ue_rates) -> Solution:
    starved = np.flatnonzero(ue_rates < RATE_FLOOR)
    if starved.size:
        raise InfeasibleProblemError(
            starved, f"UE(s) {list(starved)} end up with a vanishing rate"
        )
    association = Association.from_serving(serving, problem.n_virtual)
    sinr = sinr_matrix(problem, beams)
    link_rates = rate_matrix(sinr)
    objective = objective_value(ue_rates, problem.utility)
    return Solution(
        mode=problem.mode,
        utility=problem.utility,
        beams=beams,
        association=association,
        sinr=sinr,
        link_rates=link_rates,
        ue_rates=ue_rates,
        objective=objective,
        sidelobe_gain=problem.radio.sidelobe_gain,
    )


def _best_rate_bound(problem: CellFormationProblem) -> np.ndarray:
    """Optimistic single-UE rates: best-case beams, no interference."""
    eps = problem.radio.sidelobe_gain
    gain = main_lobe_gain(problem.bs_beamwidth_floor, eps)
    gain *= main_lobe_gain(problem.ue_beamwidth_floor, eps)
    snr = problem.radio.tx_power_mw * gain * problem.channel_gains / problem.radio.noise_power_mw
    return np.log2(1.0 + snr)


def _check_reachable(problem: CellFormationProblem) -> np.ndarray:
    bound = _best_rate_bound(problem)
    unreachable = np.flatnonzero(bound.max(axis=0) < problem.min_rates - _RATE_TOL)
    if unreachable.size:
        raise InfeasibleProblemError(
            unreachable,
            f"UE(s) {list(unreachable)} cannot reach their minimum rate even "
            "alone on the best chain with best-case beams",
        )
    return bound


def _greedy_serving(problem: CellFormationProblem, bound: np.ndarray) -> np.ndarray:
    """Assign UEs in index order to the chain with the best optimistic rate
    per unit of expected load."""
    serving = np.zeros(problem.n_ue, dtype=int)
    loads = np.zeros(problem.n_virtual)
    for j in range(problem.n_ue):
        score = bound[:, j] / (loads + 1.0)
        serving[j] = int(np.argmax(score))  # argmax takes the lowest index on ties
        loads[serving[j]] += 1.0
    return serving


def _local_search(problem, serving, params, all_candidates):
    serving = serving.copy()
    best = _evaluate(problem, serving, all_candidates)
    moves = 0
    improved = True
    while improved and moves < params.max_moves:
        improved = False
        # Single-UE reassignment, first improvement.
        for j in range(problem.n_ue):
            current = serving[j]
            for i in range(problem.n_virtual):
                if i == current or moves >= params.max_moves:
                    continue
                serving[j] = i
                trial = _evaluate(problem, serving, all_candidates)
                if (trial[0], trial[1]) > (best[0], best[1] + _IMPROVE_TOL):
                    best, current = trial, i
                    moves += 1
                    improved = True
                else:
                    serving[j] = current
        # Pairwise swaps.
        for j1, j2 in itertools.combinations(range(problem.n_ue), 2):
            if serving[j1] == serving[j2] or moves >= params.max_moves:
                continue
            serving[j1], serving[j2] = serving[j2], serving[j1]
            trial = _evaluate(problem, serving, all_candidates)
            if (trial[0], trial[1]) > (best[0], best[1] + _IMPROVE_TOL):
                best = trial
                moves += 1
                improved = True
            else:
                serving[j1], serving[j2] = serving[j2], serving[j1]
    return serving, best


def solve(
    problem: CellFormationProblem,
    params: SolverParams | None = None,
    initial_servings: list[np.ndarray] | None = None,
) -> Solution:
    """Greedy-plus-local-search heuristic for the cell-formation problem.

    Multi-start: one greedy start, ``n_starts - 1`` random starts, plus any
    caller-provided warm starts. Deterministic for fixed params and seed.
    Raises ``InfeasibleProblemError`` (naming the UEs) when no explored
    association meets the minimum rates.
    """
    params = params or SolverParams()
    bound = _check_reachable(problem)
    # Evaluating every nested candidate per move is affordable only on
    # small instances; at scale the search scores the mode's own
    # configuration and the final answer is re-ranked over all candidates.
    all_candidates = problem.n_virtual * problem.n_ue <= 256

    starts = [_greedy_serving(problem, bound)]
    for k in range(max(params.n_starts - 1, 0)):
        rng = trial_rng(params.seed, k)
        starts.append(rng.integers(0, problem.n_virtual, size=problem.n_ue))
    for warm in initial_servings or []:
        warm = np.asarray(warm, dtype=int)
        if warm.shape != (problem.n_ue,) or warm.min() < 0 or warm.max() >= problem.n_virtual:
            raise ValueError("warm start must map every UE to a virtual BS index")
        starts.append(warm.copy())

    best_serving, best = None, None
    for start in starts:
        serving, result = _local_search(problem, start, params, all_candidates)
        if best is None or (result[0], result[1]) > (best[0], best[1] + _IMPROVE_TOL):
            best_serving, best = serving, result
    final = _evaluate(problem, best_serving, all_candidates=True)
    if not final[0]:
        violating = np.flatnonzero(final[3] < problem.min_rates - _RATE_TOL)
        raise InfeasibleProblemError(violating)
    return _build_solution(problem, best_serving, final[2], final[3])


def brute_force(problem: CellFormationProblem) -> Solution:
    """Exhaustive optimum over all associations under the inner beam rule.

    Guarded to tiny instances; ties broken toward the lexicographically
    smallest association (lowest indices win).
    """
    if problem.n_virtual > BRUTE_FORCE_MAX_VIRTUAL or problem.n_ue > BRUTE_FORCE_MAX_UE:
        raise ProblemSizeError(
            f"exhaustive search is limited to {BRUTE_FORCE_MAX_VIRTUAL} virtual BSs "
            f"and {BRUTE_FORCE_MAX_UE} UEs; got {problem.n_virtual} and {problem.n_ue}"
        )
    _check_reachable(problem)
    best = None
    best_serving = None
    for assignment in itertools.product(range(problem.n_virtual), repeat=problem.n_ue):
        serving = np.array(assignment, dtype=int)
        result = _evaluate(problem, serving, all_candidates=True)
        if not result[0]:
            continue
        if best is None or result[1] > best[1] + _IMPROVE_TOL:
            best, best_serving = result, serving
    if best is None:
        raise InfeasibleProblemError(
            range(problem.n_ue),
            "no association satisfies every UE's minimum rate",
        )
    return _build_solution(problem, best_serving, best[2], best[3])


@dataclass(frozen=True)
class SweepCell:
    """One (mode, RF-chain count) slot of a sweep; holds a solution or the
    error that prevented one."""

    mode: Mode
    rf_per_bs: int
    solution: Solution | None
    error: str | None = None


def mode_sweep(
    problem: CellFormationProblem,
    rf_chain_counts,
    params: SolverParams | None = None,
    modes=(Mode.OMNI, Mode.SEMI, Mode.FULLY),
) -> list[SweepCell]:
    """Solve the same topology across modes and RF-chain counts.

    Omnidirectional chains at one position are interchangeable, so the
    omni mode is evaluated once with a single chain per BS regardless of
    the requested counts. Per-cell failures are recorded, not raised.
    """
    cells = []
    for mode in modes:
        counts = [1] if mode is Mode.OMNI else list(rf_chain_counts)
        for count in counts:
            variant = problem.with_rf_chains(count).with_mode(mode)
            try:
                cells.append(SweepCell(mode, count, solve(variant, params)))
            except (InfeasibleProblemError, ValueError) as exc:
                cells.append(SweepCell(mode, count, None, error=str(exc)))
    return cells
