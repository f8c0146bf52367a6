# magweyl/config.py

"""
magweyl - Run configuration

YAML configuration with the sections scenario, regime, grid, sweep and
constants. Loading is strict: unknown keys and wrong types are rejected with a
message naming the offending key and the allowed ones.
"""
import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from . import __version__
from .asymptote import C_I, C_II, C_LOG, CORRECTION_THRESHOLD, EPS_SS, RegimeParams
from .critpoints import DEDUP_RADIUS, DEFAULT_SEARCH_RADIUS, MAX_ITER, NEWTON_TOL, NONDEG_TOL
from .errors import ScenarioLoadError
from .fields import CONTRAVARIANT, DEFAULT_EPSILON, DEFAULT_EPSILON0, METRIC_READINGS

# --- Constants ---
CONFIG_HASH_SALT = "magweyl-config-salt"
BUILTINS = (
    "constant_field",
    "radial",
    "saddle",
    "saddle_family",
    "sphere",
    "bowl_field",
    "tilted",
    "polynomial",
)
SWEEP_AXES = ("h", "mu", "sigma")
POLYNOMIAL_KEYS = ("g11", "g12", "g22", "A1", "A2", "V")
DEFAULT_PSI_RADIUS = 0.45


@dataclass
class ScenarioSection:
    name: str = "constant_field"
    builtin: str = "constant_field"
    params: Dict[str, Any] = field(default_factory=dict)
    polynomials: Optional[Dict[str, List[List[float]]]] = None
    metric_reading: str = CONTRAVARIANT
    psi: Dict[str, Any] = field(
        default_factory=lambda: {"center": [0.0, 0.0], "radius": DEFAULT_PSI_RADIUS}
    )
    level_shift: Optional[Dict[str, Any]] = None
    perturbation: float = 0.0


@dataclass
class RegimeSection:
    mu: float = 1.0
    h: float = 0.1
    kappa2: Optional[float] = None
    varsigma: Optional[float] = None


@dataclass
class GridSection:
    n: int = 48
    half_width: float = 1.0


@dataclass
class SweepSection:
    axis: str = "h"
    points: List[float] = field(default_factory=list)
    mu_exponent: Optional[float] = None
    mu_scale: float = 1.0
    refine_check: bool = True
    coarse_ratio: float = 0.75


@dataclass
class ConstantsSection:
    C_i: float = C_I
    C_ii: float = C_II
    C_log: float = C_LOG
    eps_ss: float = EPS_SS
    correction_threshold: float = CORRECTION_THRESHOLD
    epsilon: float = DEFAULT_EPSILON
    epsilon0: float = DEFAULT_EPSILON0
    newton_tol: float = NEWTON_TOL
    nondeg_tol: float = NONDEG_TOL
    dedup_radius: float = DEDUP_RADIUS
    max_iter: int = MAX_ITER
    search_radius: float = DEFAULT_SEARCH_RADIUS


SECTIONS = {
    "scenario": ScenarioSection,
    "regime": RegimeSection,
    "grid": GridSection,
    "sweep": SweepSection,
    "constants": ConstantsSection,
}


@dataclass
class RunConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    regime: RegimeSection = field(default_factory=RegimeSection)
    grid: GridSection = field(default_factory=GridSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    constants: ConstantsSection = field(default_factory=ConstantsSection)
    seed: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if data["seed"] is None:
            del data["seed"]
        return data

    def regime_params(self) -> RegimeParams:
        c = self.constants
        return RegimeParams(
            mu=self.regime.mu,
            h=self.regime.h,
            C_i=c.C_i,
            C_ii=c.C_ii,
            C_log=c.C_log,
            eps_ss=c.eps_ss,
            kappa2=self.regime.kappa2,
            varsigma=self.regime.varsigma,
            correction_threshold=c.correction_threshold,
        )

    def with_regime(self, **changes) -> "RunConfig":
        clone = copy.deepcopy(self)
        clone.regime = replace(clone.regime, **changes)
        return clone

    def with_grid(self, n: int) -> "RunConfig":
        clone = copy.deepcopy(self)
        clone.grid = replace(clone.grid, n=int(n))
        return clone


# --- Validation ---
def _fail(message: str):
    raise ScenarioLoadError(f"FATAL: {message}")


def _check_keys(section: str, data: Dict, allowed):
    extra = set(data) - set(allowed)
    if extra:
        _fail(
            f"Unsupported keys in '{section}': {', '.join(sorted(extra))}. "
            f"Allowed: {', '.join(allowed)}."
        )


def _coerce(section: str, key: str, value: Any, default: Any):
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            _fail(f"'{section}.{key}' must be a boolean; got {type(value).__name__}.")
        return value
    if isinstance(default, int) and key in ("n", "max_iter"):
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(f"'{section}.{key}' must be an integer; got {type(value).__name__}.")
        return value
    if isinstance(default, float) or key in ("mu_exponent", "kappa2", "varsigma"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            _fail(f"'{section}.{key}' must be a number; got {type(value).__name__}.")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            _fail(f"'{section}.{key}' must be a string; got {type(value).__name__}.")
        return value
    return value


def _section(name: str, data: Any):
    cls = SECTIONS[name]
    if data is None:
        return cls()
    if not isinstance(data, dict):
        _fail(f"Section '{name}' must be a mapping.")
    allowed = [f.name for f in fields(cls)]
    _check_keys(name, data, allowed)
    defaults = cls()
    values = {
        key: _coerce(name, key, value, getattr(defaults, key)) for key, value in data.items()
    }
    return cls(**values)


def _validate_scenario(s: ScenarioSection):
    if s.builtin not in BUILTINS:
        _fail(f"Unknown builtin '{s.builtin}'. Allowed: {', '.join(BUILTINS)}.")
    if s.metric_reading not in METRIC_READINGS:
        _fail(f"metric_reading must be one of {', '.join(METRIC_READINGS)}.")
    if not isinstance(s.params, dict):
        _fail("'scenario.params' must be a mapping.")
    if s.polynomials is not None:
        if s.builtin != "polynomial":
            _fail("'scenario.polynomials' is only allowed with builtin: polynomial.")
        if not isinstance(s.polynomials, dict):
            _fail("'scenario.polynomials' must be a mapping of field name -> table.")
        _check_keys("scenario.polynomials", s.polynomials, POLYNOMIAL_KEYS)
        for key, table in s.polynomials.items():
            if not (isinstance(table, list) and all(isinstance(row, list) for row in table)):
                _fail(f"Polynomial table '{key}' must be a list of lists of numbers.")
    elif s.builtin == "polynomial":
        _fail("builtin: polynomial needs 'scenario.polynomials'.")
    if not isinstance(s.psi, dict):
        _fail("'scenario.psi' must be a mapping with center and radius.")
    _check_keys("scenario.psi", s.psi, ("center", "radius"))
    s.psi = {
        "center": [float(v) for v in s.psi.get("center", [0.0, 0.0])],
        "radius": float(s.psi.get("radius", DEFAULT_PSI_RADIUS)),
    }
    if len(s.psi["center"]) != 2:
        _fail("'scenario.psi.center' must have two coordinates.")
    if s.level_shift is not None:
        if not isinstance(s.level_shift, dict):
            _fail("'scenario.level_shift' must be a mapping with nbar and W.")
        _check_keys("scenario.level_shift", s.level_shift, ("nbar", "W"))
        nbar = s.level_shift.get("nbar", 0)
        if isinstance(nbar, bool) or not isinstance(nbar, int) or nbar < 0:
            _fail("'scenario.level_shift.nbar' must be a nonnegative integer.")


def _validate(cfg: RunConfig):
    _validate_scenario(cfg.scenario)
    if cfg.regime.mu is None or cfg.regime.h is None:
        _fail("'regime.mu' and 'regime.h' are required.")
    if cfg.grid.n < 6:
        _fail(f"'grid.n' must be at least 6 interior nodes; got {cfg.grid.n}.")
    if cfg.grid.half_width <= 0:
        _fail("'grid.half_width' must be positive.")
    if cfg.sweep.axis not in SWEEP_AXES:
        _fail(f"'sweep.axis' must be one of {', '.join(SWEEP_AXES)}.")
    if not isinstance(cfg.sweep.points, list):
        _fail("'sweep.points' must be a list of numbers.")
    cfg.sweep.points = [float(p) for p in cfg.sweep.points]
    if not 0 < cfg.sweep.coarse_ratio < 1:
        _fail("'sweep.coarse_ratio' must lie strictly between 0 and 1.")


def config_from_dict(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        _fail("Config root must be a mapping.")
    _check_keys("<root>", data, (*SECTIONS, "seed"))
    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        _fail("'seed' must be a nonnegative integer.")
    cfg = RunConfig(**{name: _section(name, data.get(name)) for name in SECTIONS}, seed=seed)
    _validate(cfg)
    return cfg


def load_config(source: Union[str, Path]) -> RunConfig:
    """Load a config from a YAML file path."""
    path = Path(source)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ScenarioLoadError(f"FATAL: Could not parse config '{path}': {e}") from e
    except OSError as e:
        raise ScenarioLoadError(f"FATAL: Could not read config '{path}': {e}") from e
    return config_from_dict(data)


def loads_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        raise ScenarioLoadError(f"FATAL: Could not parse config: {e}") from e
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=False)


def config_hash(cfg: RunConfig) -> str:
    h = hashlib.sha256()
    h.update(CONFIG_HASH_SALT.encode("utf-8"))
    h.update(__version__.encode("utf-8"))
    h.update(json.dumps(cfg.to_dict(), sort_keys=True).encode("utf-8"))
    return h.hexdigest()
