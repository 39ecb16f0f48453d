"""Experiment configuration files: flat ``key = value`` pairs under
``[section]`` headers, full-line ``#`` comments, no nesting.

Unknown sections or keys are rejected with their line number so a typo
cannot silently fall back to a default. The fully resolved configuration
(defaults filled in, command-line overrides applied) is echoed into every
run's metadata sidecar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .cells import Utility
from .radio import Mode, RadioParams

KINDS = ("range-gain", "coverage", "min-density", "discovery", "cells")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _parse_file(text: str, source: str):
    """Return {section: {key: (value, line_number)}}."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside of any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key '{current}.{key}'")
        sections[current][key] = (value.strip(), lineno)
    return sections


def _float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None


def _int(text: str, where: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None


def _float_list(text: str, where: str) -> tuple[float, ...]:
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise ConfigError(f"{where}: expected a comma-separated list of numbers")
    return tuple(_float(t, where) for t in items)


def _int_list(text: str, where: str) -> tuple[int, ...]:
    """Comma-separated integers; 'a..b' expands to the inclusive range."""
    out: list[int] = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        if ".." in item:
            lo, _, hi = item.partition("..")
            lo, hi = _int(lo, where), _int(hi, where)
            if hi < lo:
                raise ConfigError(f"{where}: empty range {item!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(_int(item, where))
    if not out:
        raise ConfigError(f"{where}: expected a comma-separated list of integers")
    return tuple(out)


def _mode_list(text: str, where: str) -> tuple[Mode, ...]:
    try:
        modes = tuple(Mode.parse(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    if not modes:
        raise ConfigError(f"{where}: expected a comma-separated list of modes")
    return modes


@dataclass(frozen=True)
class RangeGainSweep:
    gains_db: tuple[float, ...]
    alphas: tuple[float, ...]


@dataclass(frozen=True)
class CoverageSweep:
    densities: tuple[float, ...]
    modes: tuple[Mode, ...]
    theta_deg: float


@dataclass(frozen=True)
class MinDensitySweep:
    level: float
    thetas_deg: tuple[float, ...]
    modes: tuple[Mode, ...]


@dataclass(frozen=True)
class DiscoverySweep:
    densities: tuple[float, ...]
    modes: tuple[Mode, ...]
    thetas_deg: tuple[float, ...]
    mu: float


@dataclass(frozen=True)
class CellsSpec:
    n_bs: int
    n_ue: int
    area_side_m: float
    rf_chains: tuple[int, ...]
    modes: tuple[Mode, ...]
    topology_seeds: tuple[int, ...]
    min_rate: float
    bs_min_beamwidth_deg: float
    ue_min_beamwidth_deg: float
    utility: Utility
    solver_starts: int


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    trials: int
    out_dir: str
    radio: RadioParams
    sweep: object
    resolved: dict = field(repr=False, default_factory=dict)


class _Section:
    """One section's keys with line-aware errors and default tracking."""

    def __init__(self, source, name, raw):
        self.source = source
        self.name = name
        self.raw = dict(raw)
        self.used: dict[str, str] = {}

    def take(self, key, parse, default=None, required=False):
        if key in self.raw:
            value, lineno = self.raw.pop(key)
            where = f"{self.source}:{lineno}: '{self.name}.{key}'"
            result = parse(value, where)
        elif required:
            raise ConfigError(f"{self.source}: missing required key '{self.name}.{key}'")
        else:
            result = default
        self.used[key] = result
        return result

    def reject_leftovers(self):
        for key, (_, lineno) in self.raw.items():
            raise ConfigError(
                f"{self.source}:{lineno}: unknown key '{self.name}.{key}'"
            )


_SCALAR = {
    "float": _float,
    "int": _int,
    "str": lambda text, where: text,
}


def load_config(
    path: str,
    seed_override: int | None = None,
    trials_override: int | None = None,
    out_override: str | None = None,
) -> ExperimentConfig:
    """Parse, validate, and resolve one experiment configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    sections = _parse_file(text, path)

    known_sections = {"experiment", "radio", "sweep", "cells"}
    for name in sections:
        if name not in known_sections:
            raise ConfigError(f"{path}: unknown section [{name}]")

    exp = _Section(path, "experiment", sections.get("experiment", {}))
    kind = exp.take("kind", _SCALAR["str"], required=True)
    if kind not in KINDS:
        raise ConfigError(f"{path}: unknown experiment kind {kind!r}; expected one of {KINDS}")
    seed = exp.take("seed", _int, default=0)
    trials = exp.take("trials", _int, default=10_000)
    out_dir = exp.take("out", _SCALAR["str"], default="results")
    exp.reject_leftovers()

    if seed_override is not None:
        seed = seed_override
    if trials_override is not None:
        trials = trials_override
    if out_override is not None:
        out_dir = out_override
    if seed < 0 or seed >= 2**64:
        raise ConfigError(f"{path}: seed must fit in an unsigned 64-bit integer")
    if trials < 1:
        raise ConfigError(f"{path}: trials must be at least 1")

    radio_sec = _Section(path, "radio", sections.get("radio", {}))
    carrier_ghz = radio_sec.take("carrier_ghz", _float, default=28.0)
    tx_power_dbm = radio_sec.take("tx_power_dbm", _float, default=30.0)
    noise_dbm = radio_sec.take("noise_dbm", _float, default=-127.0)
    snr_threshold_db = radio_sec.take("snr_threshold_db", _float, default=0.0)
    pathloss_exponent = radio_sec.take("pathloss_exponent", _float, default=3.0)
    default_eps = 0.01 if kind == "cells" else 0.0
    sidelobe = radio_sec.take("sidelobe_gain", _float, default=default_eps)
    radio_sec.reject_leftovers()
    try:
        radio = RadioParams(
            carrier_frequency_hz=carrier_ghz * 1e9,
            tx_power_dbm=tx_power_dbm,
            noise_power_dbm=noise_dbm,
            snr_threshold_db=snr_threshold_db,
            pathloss_exponent=pathloss_exponent,
            sidelobe_gain=sidelobe,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid [radio] parameters: {exc}") from None

    sweep_sec = _Section(path, "sweep", sections.get("sweep", {}))
    cells_sec = _Section(path, "cells", sections.get("cells", {}))
    if kind != "cells" and sections.get("cells"):
        raise ConfigError(f"{path}: section [cells] is only valid for kind = cells")

    if kind == "range-gain":
        sweep = RangeGainSweep(
            gains_db=sweep_sec.take("gains_db", _float_list, required=True),
            alphas=sweep_sec.take("alphas", _float_list, required=True),
        )
    elif kind == "coverage":
        sweep = CoverageSweep(
            densities=sweep_sec.take("densities", _float_list, required=True),
            modes=sweep_sec.take("modes", _mode_list, default=(Mode.OMNI, Mode.SEMI, Mode.FULLY)),
            theta_deg=sweep_sec.take("theta_deg", _float, default=20.0),
        )
    elif kind == "min-density":
        sweep = MinDensitySweep(
            level=sweep_sec.take("level", _float, default=0.97),
            thetas_deg=sweep_sec.take("thetas_deg", _float_list, required=True),
            modes=sweep_sec.take("modes", _mode_list, default=(Mode.OMNI, Mode.SEMI, Mode.FULLY)),
        )
    elif kind == "discovery":
        sweep = DiscoverySweep(
            densities=sweep_sec.take("densities", _float_list, required=True),
            modes=sweep_sec.take("modes", _mode_list, default=(Mode.SEMI, Mode.FULLY)),
            thetas_deg=sweep_sec.take("thetas_deg", _float_list, default=(20.0,)),
            mu=sweep_sec.take("mu", _float, default=0.99),
        )
        if not 0.0 < sweep.mu < 1.0:
            raise ConfigError(f"{path}: 'sweep.mu' must lie in (0, 1)")
        if Mode.OMNI in sweep.modes:
            raise ConfigError(f"{path}: discovery is undefined for omni mode")
    else:  # cells
        utility_text = cells_sec.take("utility", _SCALAR["str"], default="logsum")
        try:
            utility = Utility.parse(utility_text)
        except ValueError as exc:
            raise ConfigError(f"{path}: 'cells.utility': {exc}") from None
        sweep = CellsSpec(
            n_bs=cells_sec.take("n_bs", _int, default=2),
            n_ue=cells_sec.take("n_ue", _int, default=30),
            area_side_m=cells_sec.take("area_side_m", _float, default=1000.0),
            rf_chains=cells_sec.take("rf_chains", _int_list, default=(3, 6, 12)),
            modes=cells_sec.take("modes", _mode_list, default=(Mode.OMNI, Mode.SEMI, Mode.FULLY)),
            topology_seeds=cells_sec.take("topology_seeds", _int_list, default=tuple(range(1, 11))),
            min_rate=cells_sec.take("min_rate", _float, default=0.0),
            bs_min_beamwidth_deg=cells_sec.take("bs_min_beamwidth_deg", _float, default=5.0),
            ue_min_beamwidth_deg=cells_sec.take("ue_min_beamwidth_deg", _float, default=10.0),
            utility=utility,
            solver_starts=cells_sec.take("solver_starts", _int, default=2),
        )
        if sweep.n_bs < 1 or sweep.n_ue < 1:
            raise ConfigError(f"{path}: cells experiment needs at least one BS and one UE")
        if any(c < 1 for c in sweep.rf_chains):
            raise ConfigError(f"{path}: RF chain counts must be positive")
    sweep_sec.reject_leftovers()
    cells_sec.reject_leftovers()

    for sweep_field in getattr(sweep, "__dataclass_fields__", {}):
        value = getattr(sweep, sweep_field)
        if sweep_field in ("densities",) and any(v <= 0 for v in value):
            raise ConfigError(f"{path}: densities must be positive")
        if sweep_field in ("theta_deg",) and not 0 < value <= 360:
            raise ConfigError(f"{path}: beamwidths must lie in (0, 360] degrees")
        if sweep_field in ("thetas_deg",) and any(not 0 < v <= 360 for v in value):
            raise ConfigError(f"{path}: beamwidths must lie in (0, 360] degrees")

    resolved = {
        "experiment": {"kind": kind, "seed": seed, "trials": trials, "out": out_dir},
        "radio": {k: v for k, v in radio_sec.used.items()},
    }
    section_name = "cells" if kind == "cells" else "sweep"
    used = cells_sec.used if kind == "cells" else sweep_sec.used
    resolved[section_name] = {k: _echo(v) for k, v in used.items()}
    return ExperimentConfig(
        kind=kind,
        seed=seed,
        trials=trials,
        out_dir=out_dir,
        radio=radio,
        sweep=sweep,
        resolved=resolved,
    )


def _echo(value):
    """JSON-friendly rendering of a resolved config value."""
    if isinstance(value, tuple):
        return [_echo(v) for v in value]
    if isinstance(value, (Mode, Utility)):
        return value.value
    return value


def theta_rad(theta_deg: float) -> float:
    return math.radians(theta_deg)
