"""JSON analysis configuration: parsing, validation and a lossless echo.

Schema (keys follow the model symbols; SI units, angles in rad, speeds in rad/s)::

    {
      "system": "single" | "two",
      "params": {
        "J": .., "D": ..,
        "T_m": ..                      (single)   | "T_m1": .., "T_m2": ..   (two)
        "R": .., "L": ..               aggregate style (single)
        "R_s", "R_l", "R_L", "L_s", "L_l"         component style (single)
        "R": .., "R_L": .., "L": .., "L3": ..     aggregate style (two)
        "R_s": .., "R_L": .., "L": .., "L3": ..   component style (two)
        "b": ..  or  "M_f": .., "i_f": ..
      },
      "variant": "derived",    optional, see below
      "tol": 1e-8,             residual tolerance
      "seed": 0,               seed for extra random Newton starts
      "newton_grid": [12, 6],  omega x delta start grid (two-machine)
      "newton_random_starts": 0,
      "simulation": {"omega0": .., "t_end": .., "rtol": .., "atol": .., "method": "rk45",
                     "h": .., "frame": "dq", "stride": 1},
      "basin": {"grid": "a:b:step", "horizon": 200}
    }

Variants: ``derived`` (self-consistent model, default) or ``printed``
(published coefficient forms); the two-machine system also accepts
``appendix`` (verbatim appendix polynomial coefficients).
"""

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .frames import ExcitationParams
from .single import VARIANTS, SingleMachineParams
from .two import POLY_VARIANTS, TwoMachineParams

DEFAULT_TOL = 1e-8

_SINGLE_COMPONENT = ("R_s", "R_l", "R_L", "L_s", "L_l")
_SIM_KEYS = {"omega0", "t_end", "rtol", "atol", "method", "h", "frame", "stride"}
_BASIN_KEYS = {"grid", "horizon"}
_TOP_KEYS = {"system", "params", "variant", "tol", "seed", "newton_grid", "newton_random_starts",
             "simulation", "basin"}


@dataclass
class AnalysisConfig:
    system: str
    params: object  # SingleMachineParams | TwoMachineParams
    variant: str = "derived"
    tol: float = DEFAULT_TOL
    seed: int = 0
    newton_grid: tuple = (12, 6)
    newton_random_starts: int = 0
    simulation: dict = field(default_factory=dict)
    basin: dict = field(default_factory=dict)

    def to_dict(self):
        """Resolved parameters in aggregate form; ``parse_config`` accepts it back."""
        p = self.params
        if self.system == "single":
            params = {"J": p.J, "D": p.D, "T_m": p.T_m, "R": p.R, "L": p.L, "b": p.b}
        else:
            params = {"J": p.J, "D": p.D, "T_m1": p.T_m1, "T_m2": p.T_m2, "R": p.R,
                      "R_L": p.R_L, "L": p.L, "L3": p.L3, "b": p.b}
        out = {"system": self.system, "params": params, "variant": self.variant, "tol": self.tol,
               "seed": self.seed}
        if self.system == "two":
            out["newton_grid"] = list(self.newton_grid)
            out["newton_random_starts"] = self.newton_random_starts
        if self.simulation:
            out["simulation"] = dict(self.simulation)
        if self.basin:
            out["basin"] = dict(self.basin)
        return out


def _number(d, key, where="params"):
    if key not in d:
        raise ConfigError(f"{where}.{key} is required")
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{where}.{key} must be a finite number")
    return float(v)


def _excitation(d):
    has_b = "b" in d
    has_mf = "M_f" in d or "i_f" in d
    if has_b == has_mf:
        raise ConfigError("params: give exactly one of b or (M_f, i_f)")
    if has_b:
        return _number(d, "b")
    return ExcitationParams(_number(d, "M_f"), _number(d, "i_f")).b


def _check_keys(d, allowed, where):
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"{where}.{extra[0]} is not a recognised field")


def _single_params(d):
    common = ("J", "D", "T_m", "b", "M_f", "i_f")
    aggregate = [k for k in ("R", "L") if k in d]
    component = [k for k in _SINGLE_COMPONENT if k in d]
    if aggregate and component:
        raise ConfigError(
            f"params.{component[0]} conflicts with params.{aggregate[0]}: "
            "use either aggregate (R, L) or component (R_s, R_l, R_L, L_s, L_l) parameters")
    if not aggregate and not component:
        raise ConfigError("params.R is required (or the component set R_s, R_l, R_L, L_s, L_l)")
    b = _excitation(d)
    J, D, T_m = (_number(d, k) for k in ("J", "D", "T_m"))
    if aggregate:
        _check_keys(d, common + ("R", "L"), "params")
        return SingleMachineParams(J=J, D=D, T_m=T_m, R=_number(d, "R"), L=_number(d, "L"), b=b)
    _check_keys(d, common + _SINGLE_COMPONENT, "params")
    comp = {k: _number(d, k) for k in _SINGLE_COMPONENT}
    return SingleMachineParams.from_components(J=J, D=D, T_m=T_m, b=b, **comp)


def _two_params(d):
    allowed = ("J", "D", "T_m1", "T_m2", "R", "R_s", "R_L", "L", "L3", "b", "M_f", "i_f")
    _check_keys(d, allowed, "params")
    if ("R" in d) == ("R_s" in d):
        raise ConfigError("params: give exactly one of R (aggregate) or R_s (component)")
    b = _excitation(d)
    vals = {k: _number(d, k) for k in ("J", "D", "T_m1", "T_m2", "R_L", "L", "L3")}
    if "R" in d:
        return TwoMachineParams.from_aggregate(R=_number(d, "R"), b=b, **vals)
    return TwoMachineParams(R_s=_number(d, "R_s"), b=b, **vals)


def parse_config(data):
    """Build an :class:`AnalysisConfig` from an already-decoded JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, _TOP_KEYS, "config")
    system = data.get("system")
    if system not in ("single", "two"):
        raise ConfigError("system must be 'single' or 'two'")
    d = data.get("params")
    if not isinstance(d, dict):
        raise ConfigError("params must be an object")
    params = _single_params(d) if system == "single" else _two_params(d)
    variant = data.get("variant", "derived")
    allowed = VARIANTS if system == "single" else POLY_VARIANTS
    if variant not in allowed:
        raise ConfigError(f"variant must be one of {', '.join(allowed)}")
    tol = _number(data, "tol", "config") if "tol" in data else DEFAULT_TOL
    if tol <= 0:
        raise ConfigError("tol must be positive")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    grid = data.get("newton_grid", [12, 6])
    if (not isinstance(grid, (list, tuple)) or len(grid) != 2
            or not all(isinstance(g, int) and not isinstance(g, bool) and g > 0 for g in grid)):
        raise ConfigError("newton_grid must be two positive integers")
    n_rand = data.get("newton_random_starts", 0)
    if isinstance(n_rand, bool) or not isinstance(n_rand, int) or n_rand < 0:
        raise ConfigError("newton_random_starts must be a non-negative integer")
    sim = data.get("simulation", {})
    if not isinstance(sim, dict):
        raise ConfigError("simulation must be an object")
    _check_keys(sim, _SIM_KEYS, "simulation")
    basin = data.get("basin", {})
    if not isinstance(basin, dict):
        raise ConfigError("basin must be an object")
    _check_keys(basin, _BASIN_KEYS, "basin")
    return AnalysisConfig(system, params, variant, tol, seed, tuple(grid), n_rand, dict(sim), dict(basin))


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
