"""Strict JSON run configuration.

Unknown keys are rejected with the offending key path; physical parameters
(box, kappas, conductivity profile, initial condition, horizon and step)
carry no defaults, while tolerances, strides, and solver knobs do.  See the
README for the full schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .grid import Grid, make_grid
from .initial import random_band_state, single_mode_state, zero_state
from .model import AState, ModelParams
from .snapshots import load_snapshot

__all__ = ["ConfigError", "RunConfig", "load_config", "parse_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _require_keys(section: dict, path: str, required, optional=()):
    allowed = set(required) | set(optional)
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")
    for key in required:
        if key not in section:
            raise ConfigError(f"missing key {path}.{key}" if path else f"missing key {key}")


def _get_number(section: dict, path: str, key: str, kind=float):
    label = f"{path}.{key}" if path else key
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{label} must be a number, got {value!r}")
    if kind is int and int(value) != value:
        raise ConfigError(f"{label} must be an integer, got {value!r}")
    return kind(value)


@dataclass
class RunConfig:
    """Validated run configuration; sections default to None when absent."""

    grid: Grid
    params: ModelParams
    initial: dict
    time: dict | None = None
    fixedpoint: dict = field(default_factory=dict)
    scaling: dict = field(default_factory=dict)
    besov: dict = field(default_factory=dict)
    seed: int | None = None

    def build_initial_state(self, fallback_seed: int = 0) -> AState:
        spec = self.initial
        preset = spec["preset"]
        if preset == "zero":
            return zero_state(self.grid)
        if preset == "single_mode":
            return single_mode_state(
                self.grid, spec["k"], spec["amplitude"], spec.get("component", "both")
            )
        if preset == "random_band":
            seed = spec.get("seed")
            if seed is None:
                seed = self.seed if self.seed is not None else fallback_seed
            return random_band_state(
                self.grid, seed, spec["band"], spec["amplitude"], spec.get("component", "both")
            )
        # preset == "file"
        a_field, _ = load_snapshot(spec["a"], self.grid)
        theta_field, _ = load_snapshot(spec["theta"], self.grid)
        return AState(a_field, theta_field)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a JSON object")
    _require_keys(
        raw, "", required=("grid", "params", "initial"),
        optional=("time", "fixedpoint", "scaling", "besov", "seed"),
    )

    gsec = raw["grid"]
    _require_keys(gsec, "grid", required=("d", "n", "L"))
    try:
        grid = make_grid(
            _get_number(gsec, "grid", "d", int),
            _get_number(gsec, "grid", "n", int),
            _get_number(gsec, "grid", "L"),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from exc

    psec = raw["params"]
    _require_keys(
        psec, "params",
        required=("kappa1", "kappa2", "kappa3_bar", "kappa3_profile"),
        optional=("kappa3_alpha", "eps_a", "equilibrium"),
    )
    profile = psec["kappa3_profile"]
    if profile not in ("zero", "tanh"):
        raise ConfigError(f"params.kappa3_profile must be 'zero' or 'tanh', got {profile!r}")
    if profile == "tanh" and "kappa3_alpha" not in psec:
        raise ConfigError("missing key params.kappa3_alpha (required for the tanh profile)")
    equilibrium = psec.get("equilibrium", [1.0, 1.0])
    if not (isinstance(equilibrium, list) and len(equilibrium) == 2):
        raise ConfigError("params.equilibrium must be a two-entry list")
    try:
        params = ModelParams(
            kappa1=_get_number(psec, "params", "kappa1"),
            kappa2=_get_number(psec, "params", "kappa2"),
            kappa3_bar=_get_number(psec, "params", "kappa3_bar"),
            kappa3_profile=profile,
            kappa3_alpha=_get_number(psec, "params", "kappa3_alpha")
            if "kappa3_alpha" in psec else 0.0,
            eps_a=_get_number(psec, "params", "eps_a") if "eps_a" in psec else 0.1,
            equilibrium=(float(equilibrium[0]), float(equilibrium[1])),
        )
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc

    isec = raw["initial"]
    if "preset" not in isec:
        raise ConfigError("missing key initial.preset")
    preset = isec["preset"]
    if preset == "zero":
        _require_keys(isec, "initial", required=("preset",))
    elif preset == "single_mode":
        _require_keys(isec, "initial", required=("preset", "k", "amplitude"),
                      optional=("component",))
        k = isec["k"]
        if not (isinstance(k, list) and len(k) == grid.d):
            raise ConfigError(f"initial.k must be a list of {grid.d} integers")
        _get_number(isec, "initial", "amplitude")
    elif preset == "random_band":
        _require_keys(isec, "initial", required=("preset", "band", "amplitude"),
                      optional=("component", "seed"))
        _get_number(isec, "initial", "band", int)
        _get_number(isec, "initial", "amplitude")
    elif preset == "file":
        _require_keys(isec, "initial", required=("preset", "a", "theta"))
    else:
        raise ConfigError(
            f"initial.preset must be one of zero, single_mode, random_band, file; got {preset!r}"
        )
    if isec.get("component", "both") not in ("a", "theta", "both"):
        raise ConfigError("initial.component must be 'a', 'theta' or 'both'")

    time = None
    if "time" in raw:
        tsec = raw["time"]
        _require_keys(
            tsec, "time", required=("T", "dt"),
            optional=("scheme", "snapshot_stride", "formulation", "write_snapshots"),
        )
        scheme = tsec.get("scheme", "ETDRK2")
        if scheme.upper() not in ("ETD1", "ETDRK2"):
            raise ConfigError(f"time.scheme must be ETD1 or ETDRK2, got {scheme!r}")
        formulation = tsec.get("formulation", "tilde")
        if formulation not in ("tilde", "a_form"):
            raise ConfigError(f"time.formulation must be 'tilde' or 'a_form', got {formulation!r}")
        T = _get_number(tsec, "time", "T")
        dt = _get_number(tsec, "time", "dt")
        if not (T > 0 and dt > 0 and dt <= T):
            raise ConfigError(f"time.T and time.dt must satisfy 0 < dt <= T, got T={T}, dt={dt}")
        time = {
            "T": T,
            "dt": dt,
            "scheme": scheme.upper(),
            "snapshot_stride": _get_number(tsec, "time", "snapshot_stride", int)
            if "snapshot_stride" in tsec else 1,
            "formulation": formulation,
            "write_snapshots": bool(tsec.get("write_snapshots", False)),
        }

    fixedpoint = {}
    if "fixedpoint" in raw:
        fsec = raw["fixedpoint"]
        _require_keys(fsec, "fixedpoint", required=(), optional=("tol", "max_iter", "c", "M"))
        fixedpoint = {
            "tol": _get_number(fsec, "fixedpoint", "tol") if "tol" in fsec else 1e-10,
            "max_iter": _get_number(fsec, "fixedpoint", "max_iter", int)
            if "max_iter" in fsec else 25,
            "c": _get_number(fsec, "fixedpoint", "c") if "c" in fsec else 0.05,
            "M": _get_number(fsec, "fixedpoint", "M") if "M" in fsec else 1.0,
        }
        if fixedpoint["tol"] <= 0:
            raise ConfigError("fixedpoint.tol must be positive")

    scaling = {}
    if "scaling" in raw:
        ssec = raw["scaling"]
        _require_keys(ssec, "scaling", required=(), optional=("lam",))
        scaling = {"lam": _get_number(ssec, "scaling", "lam", int) if "lam" in ssec else 2}
        if scaling["lam"] < 2:
            raise ConfigError("scaling.lam must be an integer >= 2")

    besov = {}
    if "besov" in raw:
        bsec = raw["besov"]
        _require_keys(bsec, "besov", required=(), optional=("s", "p", "r"))
        besov = {
            "s": _get_number(bsec, "besov", "s") if "s" in bsec else 1.5,
            "p": _get_number(bsec, "besov", "p") if "p" in bsec else 2.0,
            "r": _get_number(bsec, "besov", "r") if "r" in bsec else 1.0,
        }
        if besov["p"] < 1 or besov["r"] < 1:
            raise ConfigError("besov.p and besov.r must be >= 1")

    seed = None
    if "seed" in raw:
        seed = _get_number(raw, "", "seed", int)

    return RunConfig(
        grid=grid, params=params, initial=isec, time=time,
        fixedpoint=fixedpoint, scaling=scaling, besov=besov, seed=seed,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(raw)
