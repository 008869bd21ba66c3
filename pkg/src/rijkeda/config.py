"""Run configuration: INI-style file parsing with strict validation.

A run is described by one key-value file with nested sections ([model],
[integrator], [covariance], [assimilation], [twin], [optimizer]); every
key has a default, a file overrides defaults, and command-line --set
overrides win over the file. Unknown sections or keys, malformed values,
and out-of-range values all raise ConfigError naming the offending field
before any computation starts.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .cost import BgKind, CovarianceSpec, ObsKind
from .errors import ConfigError
from .integrator import IntegratorConfig
from .model import ModelParams
from .optimize import OptimizerConfig
from .twin import TwinConfig

__all__ = ["RunConfig", "load_run_config", "DEFAULTS"]

DEFAULTS: dict[str, dict[str, str]] = {
    "model": {
        "n_modes": "10",
        "beta": "1.0",
        "tau": "0.02",
        "c1": "0.05",
        "c2": "0.01",
        "poly_coeffs": "-0.012, 0.059, -0.044, -0.108, 0.5",
        "x_f": "0.3",
    },
    "integrator": {
        "dt": "0.001",
        "t_end": "5.0",
    },
    "covariance": {
        "b_var": "2.5e-05",
        "r_var": "2.5e-05",
    },
    "assimilation": {
        "bg_kind": "pressure_modes",
        "obs_kind": "pressure_modes",
        "x_m": "0.8",
        "t_assim": "0.4",
        "n_obs": "100",
    },
    "twin": {
        "truth_perturbation": "0.05",
        "t_forecast": "5.0",
        "rng_seed": "1234",
        "zero_noise": "false",
    },
    "optimizer": {
        "rel_grad_tol": "0.0001",
        "max_iters": "500",
        "max_line_search_evals": "40",
        "restart_period": "0",
    },
}

_BOOL_WORDS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


def _convert(section: str, key: str, raw: str, conv):
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from exc


def _as_bool(raw: str) -> bool:
    word = raw.strip().lower()
    if word not in _BOOL_WORDS:
        raise ValueError(f"expected true/false, got {raw!r}")
    return _BOOL_WORDS[word]


def _as_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _as_bg_kind(raw: str) -> BgKind:
    try:
        return BgKind(raw.strip().lower())
    except ValueError:
        raise ValueError(f"expected one of {[k.value for k in BgKind]}, got {raw!r}")


def _as_obs_kind(raw: str) -> ObsKind:
    try:
        return ObsKind(raw.strip().lower())
    except ValueError:
        raise ValueError(f"expected one of {[k.value for k in ObsKind]}, got {raw!r}")


@dataclass(frozen=True)
class RunConfig:
    """Fully-typed union of all run settings (one attribute per config key)."""

    n_modes: int
    beta: float
    tau: float
    c1: float
    c2: float
    poly_coeffs: tuple[float, ...]
    x_f: float
    dt: float
    t_end: float
    b_var: float
    r_var: float
    bg_kind: BgKind
    obs_kind: ObsKind
    x_m: float
    t_assim: float
    n_obs: int
    truth_perturbation: float
    t_forecast: float
    rng_seed: int
    zero_noise: bool
    rel_grad_tol: float
    max_iters: int
    max_line_search_evals: int
    restart_period: int

    def model_params(self) -> ModelParams:
        return ModelParams(
            n_modes=self.n_modes,
            beta=self.beta,
            tau=self.tau,
            c1=self.c1,
            c2=self.c2,
            poly_coeffs=self.poly_coeffs,
            x_f=self.x_f,
        )

    def integrator(self, t_end: float | None = None) -> IntegratorConfig:
        return IntegratorConfig(t_end=self.t_end if t_end is None else t_end, dt=self.dt)

    def covariance(self) -> CovarianceSpec:
        return CovarianceSpec(b_var=self.b_var, r_var=self.r_var)

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig(
            rel_grad_tol=self.rel_grad_tol,
            max_iters=self.max_iters,
            max_line_search_evals=self.max_line_search_evals,
            restart_period=self.restart_period or None,
        )

    def twin_config(self) -> TwinConfig:
        return TwinConfig(
            params=self.model_params(),
            integrator=IntegratorConfig(t_end=self.t_forecast, dt=self.dt),
            t_assim=self.t_assim,
            t_forecast=self.t_forecast,
            n_obs=self.n_obs,
            rng_seed=self.rng_seed,
            truth_perturbation=self.truth_perturbation,
            b_var=self.b_var,
            r_var=self.r_var,
            bg_kind=self.bg_kind,
            obs_kind=self.obs_kind,
            x_m=self.x_m,
            optimizer=self.optimizer_config(),
            zero_noise=self.zero_noise,
        )

    def validate(self) -> None:
        """Construct every derived object once so bad values fail up front."""
        try:
            self.model_params()
            self.integrator()
            self.covariance()
            self.optimizer_config()
        except (ValueError, ConfigError) as exc:
            raise ConfigError(str(exc)) from exc

    def as_mapping(self) -> dict[str, dict[str, object]]:
        """Resolved settings grouped by section (for run metadata headers)."""
        return {
            "model": {
                "n_modes": self.n_modes,
                "beta": self.beta,
                "tau": self.tau,
                "c1": self.c1,
                "c2": self.c2,
                "poly_coeffs": ", ".join(format(a, ".15g") for a in self.poly_coeffs),
                "x_f": self.x_f,
            },
            "integrator": {"dt": self.dt, "t_end": self.t_end},
            "covariance": {"b_var": self.b_var, "r_var": self.r_var},
            "assimilation": {
                "bg_kind": self.bg_kind.value,
                "obs_kind": self.obs_kind.value,
                "x_m": self.x_m,
                "t_assim": self.t_assim,
                "n_obs": self.n_obs,
            },
            "twin": {
                "truth_perturbation": self.truth_perturbation,
                "t_forecast": self.t_forecast,
                "rng_seed": self.rng_seed,
                "zero_noise": self.zero_noise,
            },
            "optimizer": {
                "rel_grad_tol": self.rel_grad_tol,
                "max_iters": self.max_iters,
                "max_line_search_evals": self.max_line_search_evals,
                "restart_period": self.restart_period,
            },
        }


_CONVERTERS = {
    ("model", "n_modes"): int,
    ("model", "beta"): float,
    ("model", "tau"): float,
    ("model", "c1"): float,
    ("model", "c2"): float,
    ("model", "poly_coeffs"): _as_floats,
    ("model", "x_f"): float,
    ("integrator", "dt"): float,
    ("integrator", "t_end"): float,
    ("covariance", "b_var"): float,
    ("covariance", "r_var"): float,
    ("assimilation", "bg_kind"): _as_bg_kind,
    ("assimilation", "obs_kind"): _as_obs_kind,
    ("assimilation", "x_m"): float,
    ("assimilation", "t_assim"): float,
    ("assimilation", "n_obs"): int,
    ("twin", "truth_perturbation"): float,
    ("twin", "t_forecast"): float,
    ("twin", "rng_seed"): int,
    ("twin", "zero_noise"): _as_bool,
    ("optimizer", "rel_grad_tol"): float,
    ("optimizer", "max_iters"): int,
    ("optimizer", "max_line_search_evals"): int,
    ("optimizer", "restart_period"): int,
}

def _merge_file(raw: dict[tuple[str, str], str], path: Path) -> None:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with path.open("r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if (section, key) not in _CONVERTERS:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
            raw[(section, key)] = value


def _merge_overrides(raw: dict[tuple[str, str], str], overrides) -> None:
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        section, key = target.strip().split(".", 1)
        section, key = section.strip(), key.strip()
        if (section, key) not in _CONVERTERS:
            raise ConfigError(f"unknown config field '{section}.{key}'")
        raw[(section, key)] = value.strip()


def load_run_config(path=None, overrides=None) -> RunConfig:
    """Defaults, then the optional file, then --set overrides; validate all."""
    raw = {
        (section, key): value
        for section, entries in DEFAULTS.items()
        for key, value in entries.items()
    }
    if path is not None:
        _merge_file(raw, Path(path))
    _merge_overrides(raw, overrides)
    kwargs = {
        key: _convert(section, key, value, _CONVERTERS[(section, key)])
        for (section, key), value in raw.items()
    }
    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg
