"""Config file loading.

Plain-text INI with nested sections. Every key has a default, the defaults
are exactly the shipped baseline, and unknown sections or keys are errors
so typos cannot silently fall back.
"""

from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from .params import InvalidParameterError, ModelParams


class ConfigError(ValueError):
    """Malformed, unknown, or inadmissible configuration input."""


class OfferKernel(Enum):
    DENSITY = "density"
    POINT_MASS = "point_mass"


class OutsideClosure(Enum):
    EFFORT = "effort"
    FIXED_RATE = "fixed_rate"


# Single source of truth for defaults; data/baseline.cfg is rendered from this
# mapping and a test pins the two together.
DEFAULTS: dict[str, dict[str, str]] = {
    "preferences": {
        "r_annual": "0.25",
    },
    "diffusion": {
        "mu_p_annual": "0.012",
        "mu_r_annual": "0.024",
        "sigma_p_annual": "0.08",
        "sigma_r_annual": "0.06",
        "rho": "0.0",
        "z0": "0.23",
    },
    "wage": {
        "gamma": "0.73",
        "beta_w": "0.4",
        "wage_feedback": "0.5",
        "sharing_reference": "0.3",
        "sigma_u2": "0.0046",
    },
    "search": {
        "kappa": "40.0",
        "eta": "2.0",
        "lambda0": "1.0",
        "lambda_bar": "0.8",
        "n_actions": "21",
        "offer_kernel": "density",
    },
    "outside": {
        "b_flow": "0.35",
        "closure": "effort",
        "lambda_u": "0.3",
        "kappa_u_scale": "0.4",
        "lambda_u_bar": "0.8",
        "vu_frozen_sel": "1.48",
        "vu_frozen_sel_search": "1.48",
    },
    "policy": {
        "firing_cost": "0.0",
        "search_subsidy": "0.0",
        "vol_multiplier": "1.0",
    },
    "entry": {
        "entry_rate": "1.0",
        "turnover_annual": "0.15",
        "entry_atoms": "",
    },
    "numerics": {
        "z_min": "-0.6",
        "z_max": "3.9",
        "n_nodes": "451",
        "omega": "0.5",
        "eps_m": "1e-11",
        "eps_w": "1e-11",
        "max_outer_iter": "400",
        "pi_tol": "1e-10",
        "pi_max_iter": "500",
        "vi_tol": "1e-9",
        "vi_max_iter": "200000",
        "vi_theta": "1.0",
        "vi_dt_years": "0",
        "match_boundary": "true",
    },
    "simulation": {
        "n_trajectories": "280000",
        "dt_sim_years": "0.08333333333333333",
        "seed": "20260823",
        "max_years": "60.0",
        "burn_in_years": "16.0",
    },
    "benchmark": {
        "t_ret_years": "40.0",
        "target_never_end": "0.10",
        "n_paths": "1000000",
    },
}


@dataclass(frozen=True)
class NumericsConfig:
    z_min: float
    z_max: float
    n_nodes: int
    omega: float
    eps_m: float
    eps_w: float
    max_outer_iter: int
    pi_tol: float
    pi_max_iter: int
    vi_tol: float
    vi_max_iter: int
    vi_theta: float
    vi_dt_years: float  # 0 means choose automatically from the CFL bound
    match_boundary: bool


@dataclass(frozen=True)
class SimulationConfig:
    n_trajectories: int
    dt_sim_years: float
    seed: int
    max_years: float
    burn_in_years: float = 16.0

    def __post_init__(self) -> None:
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be >= 1")
        if not 0.0 < self.dt_sim_years <= 1.0 / 12.0 + 1e-12:
            raise ConfigError("dt_sim_years must be positive and at most one month")
        if self.max_years <= 0.0:
            raise ConfigError("max_years must be positive")
        if not 0.0 <= self.burn_in_years < self.max_years:
            raise ConfigError("burn_in_years must lie in [0, max_years)")


@dataclass(frozen=True)
class BenchmarkConfig:
    t_ret_years: float
    target_never_end: float
    n_paths: int = 1_000_000


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    numerics: NumericsConfig
    simulation: SimulationConfig
    benchmark: BenchmarkConfig
    n_actions: int
    offer_kernel: OfferKernel
    closure: OutsideClosure
    vu_frozen_sel: float
    vu_frozen_sel_search: float
    entry_atoms: tuple[tuple[float, float], ...]  # (z, weight); empty = point at z0
    resolved_text: str

    def config_hash(self) -> str:
        return hashlib.sha256(self.resolved_text.encode("utf-8")).hexdigest()


def render_config(values: dict[str, dict[str, str]]) -> str:
    """Canonical plain-text rendering, stable section and key order."""
    out = io.StringIO()
    for section in DEFAULTS:
        out.write(f"[{section}]\n")
        for key in DEFAULTS[section]:
            out.write(f"{key} = {values[section][key]}\n")
        out.write("\n")
    return out.getvalue()


def baseline_config_path() -> Path:
    return Path(str(resources.files("wageladder").joinpath("data/baseline.cfg")))


def _merge_file(values: dict[str, dict[str, str]], path: str | Path) -> None:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
    for section in parser.sections():
        if section not in values:
            raise ConfigError(f"unknown config section [{section}]")
        for key, val in parser.items(section):
            if key not in values[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            values[section][key] = val


def _as_float(values, section, key) -> float:
    raw = values[section][key]
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: expected a number, got '{raw}'") from exc


def _as_int(values, section, key) -> int:
    raw = values[section][key]
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: expected an integer, got '{raw}'") from exc


def _as_bool(values, section, key) -> bool:
    raw = values[section][key].strip().lower()
    if raw in ("true", "yes", "1", "on"):
        return True
    if raw in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got '{raw}'")


def _as_enum(values, section, key, enum_cls):
    raw = values[section][key].strip().lower()
    for member in enum_cls:
        if member.value == raw:
            return member
    allowed = ", ".join(m.value for m in enum_cls)
    raise ConfigError(f"[{section}] {key}: expected one of {{{allowed}}}, got '{raw}'")


def _parse_entry_atoms(raw: str) -> tuple[tuple[float, float], ...]:
    raw = raw.strip()
    if not raw:
        return ()
    atoms = []
    for piece in raw.split(","):
        try:
            z_str, w_str = piece.split(":")
            atoms.append((float(z_str), float(w_str)))
        except ValueError as exc:
            raise ConfigError(
                f"entry_atoms: expected 'z:weight[,z:weight...]', got '{raw}'"
            ) from exc
    if any(w <= 0.0 for _, w in atoms):
        raise ConfigError("entry_atoms weights must be positive")
    return tuple(atoms)


def load_config(path: str | Path | None = None) -> RunConfig:
    """Resolve defaults plus an optional override file into a RunConfig.

    Raises ConfigError for unknown keys, type errors, or parameter values the
    model rejects.
    """
    values = {section: dict(keys) for section, keys in DEFAULTS.items()}
    if path is not None:
        _merge_file(values, path)

    try:
        params = ModelParams(
            r=_as_float(values, "preferences", "r_annual"),
            mu_P=_as_float(values, "diffusion", "mu_p_annual"),
            mu_R=_as_float(values, "diffusion", "mu_r_annual"),
            sigma_P=_as_float(values, "diffusion", "sigma_p_annual"),
            sigma_R=_as_float(values, "diffusion", "sigma_r_annual"),
            rho=_as_float(values, "diffusion", "rho"),
            z0=_as_float(values, "diffusion", "z0"),
            gamma=_as_float(values, "wage", "gamma"),
            sigma_u2=_as_float(values, "wage", "sigma_u2"),
            kappa=_as_float(values, "search", "kappa"),
            eta=_as_float(values, "search", "eta"),
            lambda0=_as_float(values, "search", "lambda0"),
            lambda_bar=_as_float(values, "search", "lambda_bar"),
            b=_as_float(values, "outside", "b_flow"),
            lambdaU=_as_float(values, "outside", "lambda_u"),
            entry_rate=_as_float(values, "entry", "entry_rate"),
            beta_w=_as_float(values, "wage", "beta_w"),
            F=_as_float(values, "policy", "firing_cost"),
            s=_as_float(values, "policy", "search_subsidy"),
            chi=_as_float(values, "policy", "vol_multiplier"),
            delta=_as_float(values, "entry", "turnover_annual"),
            R_ref=_as_float(values, "wage", "sharing_reference"),
            wage_feedback=_as_float(values, "wage", "wage_feedback"),
            kappa_u_scale=_as_float(values, "outside", "kappa_u_scale"),
            lambda_u_bar=_as_float(values, "outside", "lambda_u_bar"),
        )
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc

    numerics = NumericsConfig(
        z_min=_as_float(values, "numerics", "z_min"),
        z_max=_as_float(values, "numerics", "z_max"),
        n_nodes=_as_int(values, "numerics", "n_nodes"),
        omega=_as_float(values, "numerics", "omega"),
        eps_m=_as_float(values, "numerics", "eps_m"),
        eps_w=_as_float(values, "numerics", "eps_w"),
        max_outer_iter=_as_int(values, "numerics", "max_outer_iter"),
        pi_tol=_as_float(values, "numerics", "pi_tol"),
        pi_max_iter=_as_int(values, "numerics", "pi_max_iter"),
        vi_tol=_as_float(values, "numerics", "vi_tol"),
        vi_max_iter=_as_int(values, "numerics", "vi_max_iter"),
        vi_theta=_as_float(values, "numerics", "vi_theta"),
        vi_dt_years=_as_float(values, "numerics", "vi_dt_years"),
        match_boundary=_as_bool(values, "numerics", "match_boundary"),
    )
    if numerics.z_min >= numerics.z_max:
        raise ConfigError("z_min must be below z_max")
    if numerics.n_nodes < 3:
        raise ConfigError("n_nodes must be at least 3")
    if not 0.0 < numerics.omega <= 1.0:
        raise ConfigError("omega must lie in (0, 1]")
    if not 0.0 < numerics.vi_theta <= 1.0:
        raise ConfigError("vi_theta must lie in (0, 1]")

    simulation = SimulationConfig(
        n_trajectories=_as_int(values, "simulation", "n_trajectories"),
        dt_sim_years=_as_float(values, "simulation", "dt_sim_years"),
        seed=_as_int(values, "simulation", "seed"),
        max_years=_as_float(values, "simulation", "max_years"),
        burn_in_years=_as_float(values, "simulation", "burn_in_years"),
    )
    benchmark = BenchmarkConfig(
        t_ret_years=_as_float(values, "benchmark", "t_ret_years"),
        target_never_end=_as_float(values, "benchmark", "target_never_end"),
        n_paths=_as_int(values, "benchmark", "n_paths"),
    )
    if benchmark.t_ret_years <= 0.0:
        raise ConfigError("t_ret_years must be positive")
    if benchmark.n_paths < 1:
        raise ConfigError("n_paths must be >= 1")

    n_actions = _as_int(values, "search", "n_actions")
    if n_actions < 2:
        raise ConfigError("n_actions must be at least 2")

    return RunConfig(
        params=params,
        numerics=numerics,
        simulation=simulation,
        benchmark=benchmark,
        n_actions=n_actions,
        offer_kernel=_as_enum(values, "search", "offer_kernel", OfferKernel),
        closure=_as_enum(values, "outside", "closure", OutsideClosure),
        vu_frozen_sel=_as_float(values, "outside", "vu_frozen_sel"),
        vu_frozen_sel_search=_as_float(values, "outside", "vu_frozen_sel_search"),
        entry_atoms=_parse_entry_atoms(values["entry"]["entry_atoms"]),
        resolved_text=render_config(values),
    )
