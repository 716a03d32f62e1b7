"""Suite configuration: packaged defaults, an optional JSON file, then flags."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import voluptuous as vol

from .const import (
    CONF_ALPHA,
    CONF_CARLEMAN_DELTA,
    CONF_CARLEMAN_ENSEMBLE,
    CONF_CARLEMAN_GRID_POINTS,
    CONF_CHOOSE_M_ENSEMBLE,
    CONF_COEFFS,
    CONF_DELTA,
    CONF_DEPTH,
    CONF_EMIT_GRID,
    CONF_ENSEMBLE,
    CONF_FAMILY,
    CONF_FIELD,
    CONF_FINAL3_FLOOR,
    CONF_GAMMA,
    CONF_GAMMAS,
    CONF_GRID_POINTS,
    CONF_HORIZON,
    CONF_INTERVALS,
    CONF_J0,
    CONF_L_SIGN,
    CONF_LAMBDA0,
    CONF_M,
    CONF_MAX_BLOCK,
    CONF_MU,
    CONF_PERIOD,
    CONF_PLOT_DATA,
    CONF_REPORT,
    CONF_RESIDUAL_SAMPLES,
    CONF_SEED,
    CONF_SOBOLEV_S,
    CONF_SYMBOL,
    CONF_T_MAX,
    CONF_TIME_CELLS,
    CONF_VERIFY,
    DEFAULT_ALPHA,
    DEFAULT_CARLEMAN_DELTA,
    DEFAULT_CARLEMAN_ENSEMBLE,
    DEFAULT_CARLEMAN_GRID_POINTS,
    DEFAULT_CHOOSE_M_ENSEMBLE,
    DEFAULT_DELTA,
    DEFAULT_DEPTH,
    DEFAULT_ENSEMBLE,
    DEFAULT_FAMILY,
    DEFAULT_FINAL3_FLOOR,
    DEFAULT_GAMMA,
    DEFAULT_GAMMAS,
    DEFAULT_GRID_POINTS,
    DEFAULT_HORIZON,
    DEFAULT_INTERVALS,
    DEFAULT_J0,
    DEFAULT_L_SIGN,
    DEFAULT_LAMBDA0,
    DEFAULT_M,
    DEFAULT_MAX_BLOCK,
    DEFAULT_MU,
    DEFAULT_PERIOD,
    DEFAULT_RESIDUAL_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_SOBOLEV_S,
    DEFAULT_T_MAX,
    DEFAULT_TIME_CELLS,
    DEFAULT_VERIFY,
    SUITE_ALL,
    SUITES,
)
from .errors import ConfigurationError
from .osgood_weight import REGISTRY_NAMES

_LOGGER = logging.getLogger(__name__)

PROFILE_RESOURCE = "default_suite_profile.json"


def _power_of_two(value: Any) -> int:
    number = int(value)
    if number < 8 or number & (number - 1):
        raise vol.Invalid(f"expected a power of two >= 8, got {value}")
    return number


def _gamma_list(value: Any) -> list[float]:
    if isinstance(value, str):
        value = [part for part in value.split(",") if part.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise vol.Invalid("expected a non-empty list of gammas")
    gammas = [float(part) for part in value]
    if any(g <= 0.0 for g in gammas):
        raise vol.Invalid("gammas must be positive")
    return gammas


def _auto_or_int(minimum: int):
    def validate(value: Any) -> str | int:
        if value == "auto":
            return "auto"
        number = int(value)
        if number < minimum:
            raise vol.Invalid(f"expected 'auto' or an integer >= {minimum}, got {value}")
        return number

    return validate


def _modulus_name(value: Any) -> str:
    name = str(value)
    if name in REGISTRY_NAMES or name.startswith("holder:"):
        return name
    raise vol.Invalid(f"unknown modulus {name!r}")


_POSITIVE = vol.All(vol.Coerce(float), vol.Range(min=0.0, min_included=False))
_OPEN_UNIT = vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False, max_included=False))

SUITE_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_GRID_POINTS, default=DEFAULT_GRID_POINTS): _power_of_two,
        vol.Optional(CONF_PERIOD, default=DEFAULT_PERIOD): _POSITIVE,
        vol.Optional(CONF_MU, default=DEFAULT_MU): _modulus_name,
        vol.Optional(CONF_ALPHA, default=DEFAULT_ALPHA): _OPEN_UNIT,
        vol.Optional(CONF_HORIZON, default=DEFAULT_HORIZON): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, min_included=False)),
        vol.Optional(CONF_GAMMA, default=DEFAULT_GAMMA): _POSITIVE,
        vol.Optional(CONF_GAMMAS, default=DEFAULT_GAMMAS): _gamma_list,
        vol.Optional(CONF_T_MAX, default=DEFAULT_T_MAX): vol.All(vol.Coerce(float), vol.Range(min=1.0, min_included=False)),
        vol.Optional(CONF_SOBOLEV_S, default=DEFAULT_SOBOLEV_S): vol.Coerce(float),
        vol.Optional(CONF_FIELD, default=None): vol.Any(None, str),
        vol.Optional(CONF_ENSEMBLE, default=DEFAULT_ENSEMBLE): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_SYMBOL, default=None): vol.Any(None, str),
        vol.Optional(CONF_M, default=DEFAULT_M): _auto_or_int(1),
        vol.Optional(CONF_LAMBDA0, default=DEFAULT_LAMBDA0): _POSITIVE,
        vol.Optional(CONF_CHOOSE_M_ENSEMBLE, default=DEFAULT_CHOOSE_M_ENSEMBLE): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_FAMILY, default=DEFAULT_FAMILY): vol.In(["identity", "synthetic"]),
        vol.Optional(CONF_DELTA, default=DEFAULT_DELTA): vol.All(vol.Coerce(float), vol.Range(min=0.0, max=1.0, max_included=False)),
        vol.Optional(CONF_DEPTH, default=DEFAULT_DEPTH): vol.All(vol.Coerce(int), vol.Range(min=1, max=12)),
        vol.Optional(CONF_VERIFY, default=DEFAULT_VERIFY): vol.In(["all", "none"]),
        vol.Optional(CONF_COEFFS, default=None): vol.Any(None, str),
        vol.Optional(CONF_CARLEMAN_DELTA, default=DEFAULT_CARLEMAN_DELTA): vol.All(
            vol.Coerce(float), vol.Range(min=0.0, max=1.0, max_included=False)
        ),
        vol.Optional(CONF_CARLEMAN_ENSEMBLE, default=DEFAULT_CARLEMAN_ENSEMBLE): vol.All(vol.Coerce(int), vol.Range(min=10)),
        vol.Optional(CONF_CARLEMAN_GRID_POINTS, default=DEFAULT_CARLEMAN_GRID_POINTS): _power_of_two,
        vol.Optional(CONF_TIME_CELLS, default=DEFAULT_TIME_CELLS): vol.All(vol.Coerce(int), vol.Range(min=4)),
        vol.Optional(CONF_MAX_BLOCK, default=DEFAULT_MAX_BLOCK): vol.All(vol.Coerce(int), vol.Range(min=0)),
        vol.Optional(CONF_FINAL3_FLOOR, default=DEFAULT_FINAL3_FLOOR): _POSITIVE,
        vol.Optional(CONF_INTERVALS, default=DEFAULT_INTERVALS): vol.All(vol.Coerce(int), vol.Range(min=1000)),
        vol.Optional(CONF_J0, default=DEFAULT_J0): _auto_or_int(2),
        vol.Optional(CONF_RESIDUAL_SAMPLES, default=DEFAULT_RESIDUAL_SAMPLES): vol.All(vol.Coerce(int), vol.Range(min=1)),
        vol.Optional(CONF_L_SIGN, default=DEFAULT_L_SIGN): vol.All(vol.Coerce(int), vol.In([-1, 1])),
        vol.Optional(CONF_EMIT_GRID, default=None): vol.Any(None, str),
        vol.Optional(CONF_REPORT, default=None): vol.Any(None, str),
        vol.Optional(CONF_PLOT_DATA, default=None): vol.Any(None, str),
    },
    extra=vol.PREVENT_EXTRA,
)


@dataclass(frozen=True)
class SuiteConfig:
    suite: str
    parameters: dict[str, Any] = field(default_factory=dict)
    output_path: str | None = None

    def __getitem__(self, key: str) -> Any:
        return self.parameters[key]


def default_profile() -> dict[str, Any]:
    """The packaged default profile, as shipped next to the package."""
    text = resources.files(__package__).joinpath(PROFILE_RESOURCE).read_text(encoding="utf-8")
    return json.loads(text)


def _invalid_key(err: vol.Invalid) -> str:
    path = ".".join(str(part) for part in err.path) or "<root>"
    return path


def validate(parameters: dict[str, Any]) -> dict[str, Any]:
    """Apply the schema; an invalid or unknown key becomes a ConfigurationError naming it."""
    try:
        return SUITE_SCHEMA(parameters)
    except vol.MultipleInvalid as err:
        first = err.errors[0]
        key = _invalid_key(first)
        raise ConfigurationError(f"invalid configuration key {key!r}: {first.msg}", f"bad_key:{key}") from err
    except vol.Invalid as err:
        key = _invalid_key(err)
        raise ConfigurationError(f"invalid configuration key {key!r}: {err.msg}", f"bad_key:{key}") from err


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigurationError(f"cannot read config file {path}: {err}", "bad_config_file") from err
    if not isinstance(payload, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object", "bad_config_file")
    return payload


def build_config(
    suite: str,
    overrides: dict[str, Any] | None = None,
    config_file: str | Path | None = None,
) -> SuiteConfig:
    """Packaged defaults < config file < overrides; ``None`` overrides are ignored."""
    if suite not in (*SUITES, SUITE_ALL):
        raise ConfigurationError(f"unknown suite {suite!r}", f"bad_suite:{suite}")
    merged: dict[str, Any] = dict(default_profile())
    if config_file is not None:
        merged.update(load_config_file(config_file))
    merged.update({key: value for key, value in (overrides or {}).items() if value is not None})
    parameters = validate(merged)
    _LOGGER.debug("config for %s: %s", suite, parameters)
    return SuiteConfig(suite, parameters, parameters.get(CONF_REPORT))
