"""Experiment configuration: INI parsing, validation, and object assembly.

The file format is a line-oriented `key = value` document with `[section]`
headers. Unknown sections or keys are rejected with their line numbers,
missing keys take the documented defaults, and dBm-to-watt plus
distance-to-pathloss conversions happen here and nowhere else. Environment
variables `D2D_EFFCAP_<SECTION>_<KEY>` override file values.
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass

from .channel import LinkBudget, SystemParams, dbm_to_watts, pathloss_db
from .errors import ConfigError
from .montecarlo import SimConfig
from .optimizer import GDConfig

ENV_PREFIX = "D2D_EFFCAP_"

# Schema: section -> key -> (type tag, default). Geometry is special-cased:
# the d_*_km family (defaults below) and the l_*_db family are mutually
# exclusive ways to state the same eight links.
_SCHEMA = {
    "system": {
        "p_dt_dbm": ("float", 27.0),
        "p_micro_dbm": ("float", 37.0),
        "p_macro_dbm": ("float", 47.0),
        "p_ut_dbm": ("float", 27.0),
        "noise_n0_w": ("float", 1e-12),
        "bandwidth_b": ("float", 1.0),
        "si_alpha": ("float", 0.0),
        "si_beta": ("float", 0.5),
        "block_len_l": ("int", 100),
        "rate_r": ("float", 0.5),
        "qos_theta": ("float", 0.01),
        "max_tx_m": ("int", 2),
        "duplex_mode": ("str", "full"),
    },
    "geometry": {
        "d_d_km": ("float", 0.056),
        "d_micro_ul_km": ("float", 0.060),
        "d_micro_dl_km": ("float", 0.080),
        "d_macro_ul_km": ("float", 0.075),
        "d_macro_dl_km": ("float", 0.120),
        "d_ut_dr_km": ("float", 0.378),
        "d_ut_micro_km": ("float", 0.378),
        "d_ut_macro_km": ("float", 0.470),
        "l_d_db": ("float", None),
        "l_micro_ul_db": ("float", None),
        "l_micro_dl_db": ("float", None),
        "l_macro_ul_db": ("float", None),
        "l_macro_dl_db": ("float", None),
        "l_ut_dr_db": ("float", None),
        "l_ut_micro_db": ("float", None),
        "l_ut_macro_db": ("float", None),
    },
    "modeselect": {
        "sigma_db": ("float", 1.0),
        "weighting": ("str", "uniform"),
        "detect_l_direct_db": ("float", None),
        "detect_l_micro_db": ("float", None),
        "detect_l_macro_db": ("float", None),
        "trials": ("int", 100_000),
    },
    "harq": {
        "mc_samples": ("int", 100_000),
        "schedule": ("str", ""),
    },
    "sweep": {
        "variable": ("str", "r"),
        "lo": ("float", 0.25),
        "hi": ("float", 10.0),
        "steps": ("int", 60),
        "with_mc": ("bool", False),
    },
    "montecarlo": {
        "num_paths": ("int", 10_000),
        "num_blocks": ("int", 1000),
        "arrival_rate_a": ("float", 0.0),
        "seed": ("int", 1234),
        "scenario": ("str", "schedule"),
        "queue_model": ("str", "n1"),
    },
    "optimizer": {
        "step_omega": ("float", 0.5),
        "max_iters": ("int", 200),
        "grad_tol": ("float", 1e-4),
        "r_init": ("float", 1.0),
        "gradient_mode": ("str", "numeric"),
        "fd_step": ("float", 1e-3),
        "r_min": ("float", 1e-3),
        "grid_lo": ("float", 0.25),
        "grid_hi": ("float", 10.0),
        "grid_steps": ("int", 200),
    },
}

_DIST_KEYS = (
    "d_d_km", "d_micro_ul_km", "d_micro_dl_km", "d_macro_ul_km",
    "d_macro_dl_km", "d_ut_dr_km", "d_ut_micro_km", "d_ut_macro_km",
)
_LOSS_KEYS = (
    "l_d_db", "l_micro_ul_db", "l_micro_dl_db", "l_macro_ul_db",
    "l_macro_dl_db", "l_ut_dr_db", "l_ut_micro_db", "l_ut_macro_db",
)
_DETECT_KEYS = ("detect_l_direct_db", "detect_l_micro_db", "detect_l_macro_db")

SWEEP_VARIABLES = ("r", "theta", "sigma", "beta", "l")

_KEY_LINE = re.compile(r"^\s*([^\s=:#;][^=:]*?)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    lo: float
    hi: float
    steps: int
    with_mc: bool

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(
                f"sweep variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}"
            )
        if self.steps < 1:
            raise ConfigError("sweep needs at least one grid point")
        if not self.lo < self.hi:
            raise ConfigError("sweep needs lo < hi")


@dataclass
class ExperimentConfig:
    """Everything a command needs, fully resolved."""

    params: SystemParams
    budget: LinkBudget
    sigma: float
    weighting: str
    detect_triple: tuple | None
    detect_trials: int
    mc_samples: int
    schedule: tuple | None
    sweep: SweepSpec
    sim: SimConfig
    gd: GDConfig
    grid: tuple
    echo: tuple

    @property
    def seed(self) -> int:
        return self.sim.seed


def _scan_key_lines(text: str) -> dict:
    """Map (section, key) to the 1-based line number of its assignment."""
    out = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_LINE.match(line)
        if m:
            section = m.group(1).strip()
            out.setdefault(("__section__", section), lineno)
            continue
        m = _KEY_LINE.match(line)
        if m and section is not None:
            out.setdefault((section, m.group(1)), lineno)
    return out


def _parse_value(raw: str, kind: str, where: str):
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            lowered = raw.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        return raw
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _load_values(path: str | None, env: dict) -> tuple:
    """Merge defaults, file values, and environment overrides.

    Returns (values, explicit) where `explicit` records which keys were set
    by the file or the environment (needed for the either-or geometry rule).
    """
    values = {s: {k: d for k, (_, d) in keys.items()} for s, keys in _SCHEMA.items()}
    explicit = set()

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from None
        lines = _scan_key_lines(text)
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        for section in parser.sections():
            if section not in _SCHEMA:
                lineno = lines.get(("__section__", section), "?")
                raise ConfigError(
                    f"{path}:{lineno}: unknown section [{section}]"
                )
            for key, raw in parser.items(section):
                if key not in _SCHEMA[section]:
                    lineno = lines.get((section, key), "?")
                    raise ConfigError(
                        f"{path}:{lineno}: unknown key {key!r} in [{section}]"
                    )
                kind = _SCHEMA[section][key][0]
                lineno = lines.get((section, key), "?")
                values[section][key] = _parse_value(
                    raw, kind, f"{path}:{lineno}: {section}.{key}"
                )
                explicit.add((section, key))

    for section, keys in _SCHEMA.items():
        for key, (kind, _) in keys.items():
            name = f"{ENV_PREFIX}{section.upper()}_{key.upper()}"
            if name in env:
                values[section][key] = _parse_value(
                    env[name], kind, f"environment {name}"
                )
                explicit.add((section, key))
    return values, explicit


def _build_budget(geom: dict, explicit: set) -> LinkBudget:
    dist_set = [k for k in _DIST_KEYS if ("geometry", k) in explicit]
    loss_set = [k for k in _LOSS_KEYS if ("geometry", k) in explicit]
    if dist_set and loss_set:
        raise ConfigError(
            "geometry accepts either distances (d_*_km) or explicit losses "
            f"(l_*_db), not both; got {dist_set + loss_set}"
        )
    if loss_set:
        missing = [k for k in _LOSS_KEYS if geom[k] is None]
        if missing:
            raise ConfigError(
                f"explicit-loss geometry needs all eight links; missing {missing}"
            )
        vals = [geom[k] for k in _LOSS_KEYS]
    else:
        vals = [pathloss_db(geom[k]) for k in _DIST_KEYS]
    names = ("L_d", "L_mc_ul", "L_mc_dl", "L_MC_ul", "L_MC_dl",
             "L_ut_dr", "L_ut_mc", "L_ut_MC")
    return LinkBudget.from_db(**dict(zip(names, vals)))


def _echo_lines(values: dict) -> tuple:
    out = []
    for section in sorted(values):
        for key in sorted(values[section]):
            v = values[section][key]
            if v is None:
                continue
            out.append(f"{section}.{key} = {v!r}" if isinstance(v, str)
                       else f"{section}.{key} = {v}")
    return tuple(out)


def load_config(path: str | None = None, seed_override: int | None = None,
                env: dict | None = None) -> ExperimentConfig:
    """Parse, validate, and assemble the experiment configuration."""
    if env is None:
        env = dict(os.environ)
    values, explicit = _load_values(path, env)

    sysv = values["system"]
    try:
        params = SystemParams(
            bandwidth_B=sysv["bandwidth_b"],
            noise_N0=sysv["noise_n0_w"],
            p_dt=dbm_to_watts(sysv["p_dt_dbm"]),
            p_mc=dbm_to_watts(sysv["p_micro_dbm"]),
            p_MC=dbm_to_watts(sysv["p_macro_dbm"]),
            p_ut=dbm_to_watts(sysv["p_ut_dbm"]),
            si_alpha=sysv["si_alpha"],
            si_beta=sysv["si_beta"],
            block_len_l=sysv["block_len_l"],
            rate_r=sysv["rate_r"],
            qos_theta=sysv["qos_theta"],
            max_tx_M=sysv["max_tx_m"],
            duplex_mode=sysv["duplex_mode"],
        )
        budget = _build_budget(values["geometry"], explicit)

        modev = values["modeselect"]
        detect_set = [k for k in _DETECT_KEYS if modev[k] is not None]
        if detect_set and len(detect_set) != 3:
            raise ConfigError(
                "explicit detection losses need all three of "
                f"{_DETECT_KEYS}; got only {detect_set}"
            )
        detect_triple = (
            tuple(modev[k] for k in _DETECT_KEYS) if detect_set else None
        )
        if modev["sigma_db"] < 0:
            raise ConfigError("modeselect.sigma_db must be nonnegative")
        if modev["weighting"] not in ("uniform", "paper-literal"):
            raise ConfigError(
                "modeselect.weighting must be 'uniform' or 'paper-literal'")

        harqv = values["harq"]
        schedule = None
        if harqv["schedule"].strip():
            schedule = tuple(s.strip() for s in harqv["schedule"].split(","))

        sweepv = values["sweep"]
        sweep = SweepSpec(
            variable=sweepv["variable"], lo=sweepv["lo"], hi=sweepv["hi"],
            steps=sweepv["steps"], with_mc=sweepv["with_mc"],
        )

        mcv = dict(values["montecarlo"])
        if seed_override is not None:
            mcv["seed"] = int(seed_override)
            values["montecarlo"]["seed"] = int(seed_override)
        sim = SimConfig(
            num_blocks=mcv["num_blocks"],
            num_paths=mcv["num_paths"],
            arrival_rate_a=mcv["arrival_rate_a"],
            seed=mcv["seed"],
            scenario=mcv["scenario"],
            queue_model=mcv["queue_model"],
        )

        optv = values["optimizer"]
        gd = GDConfig(
            step_omega=optv["step_omega"],
            max_iters=optv["max_iters"],
            grad_tol=optv["grad_tol"],
            r_init=optv["r_init"],
            gradient_mode=optv["gradient_mode"],
            fd_step=optv["fd_step"],
            r_min=optv["r_min"],
        )
        if not optv["grid_lo"] < optv["grid_hi"]:
            raise ConfigError("optimizer.grid_lo must be below optimizer.grid_hi")
        if optv["grid_steps"] < 2:
            raise ConfigError("optimizer.grid_steps must be >= 2")
        grid = (optv["grid_lo"], optv["grid_hi"], optv["grid_steps"])
    except ConfigError:
        raise
    except ValueError as exc:
        # Domain validation from the dataclasses, re-labeled as configuration.
        raise ConfigError(str(exc)) from None

    return ExperimentConfig(
        params=params,
        budget=budget,
        sigma=values["modeselect"]["sigma_db"],
        weighting=values["modeselect"]["weighting"],
        detect_triple=detect_triple,
        detect_trials=values["modeselect"]["trials"],
        mc_samples=values["harq"]["mc_samples"],
        schedule=schedule,
        sweep=sweep,
        sim=sim,
        gd=gd,
        grid=grid,
        echo=_echo_lines(values),
    )
