"""Time-domain experiments: trajectories, abc/dq frame consistency, basin probes."""

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .frames import abc_to_dq, dq_to_abc
from .numerics import IntegratorOptions, integrate
from .single import SingleMachineParams, rhs_abc_single, rhs_dq_single, solve_single_equilibria
from .two import ABC_STATE_NAMES, STATE_NAMES, TwoMachineParams, rhs_abc_two, rhs_dq_two

SINGLE_DQ_NAMES = ("theta", "omega", "i_d", "i_q")
SINGLE_ABC_NAMES = ("theta", "omega", "i_a", "i_b", "i_c")
STEADY_TOL = 1e-8
STEADY_COUNT = 100


@dataclass
class SimConfig:
    """``x0`` is given in the dq frame; for ``frame="abc"`` it is mapped with ``eta0``.

    For the two-machine system the dq state carries only ``delta``, so the
    average angle at t=0 is ``eta0`` (default 0).
    """

    system: str
    params: object
    x0: np.ndarray
    frame: str = "dq"
    options: IntegratorOptions = field(default_factory=lambda: IntegratorOptions(t_end=10.0))
    stride: int = 1
    eta0: float = 0.0

    def __post_init__(self):
        if self.system not in ("single", "two"):
            raise ConfigError("system must be 'single' or 'two'")
        if self.frame not in ("abc", "dq", "both"):
            raise ConfigError("frame must be 'abc', 'dq' or 'both'")
        want = 4 if self.system == "single" else 9
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.shape != (want,):
            raise ConfigError(f"initial state for system '{self.system}' must have {want} entries")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1")
        kind = SingleMachineParams if self.system == "single" else TwoMachineParams
        if not isinstance(self.params, kind):
            raise ConfigError(f"params must be {kind.__name__}")


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    names: tuple
    system: str
    frame: str
    status: str = "t_end"
    terminal_derivative_norm: float = float("nan")

    @property
    def omega(self):
        if self.system == "single":
            return self.x[:, 1]
        k = 1 if self.frame == "dq" else 2
        return 0.5 * (self.x[:, k] + self.x[:, k + 1])

    @property
    def delta(self):
        if self.system != "two":
            raise AttributeError("delta is only defined for the two-machine system")
        if self.frame == "dq":
            return self.x[:, 0]
        return 0.5 * (self.x[:, 1] - self.x[:, 0])

    def to_csv(self, fh=None):
        """Write ``t`` plus every state column with 17 significant digits."""
        own = fh is None
        fh = fh or io.StringIO()
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t",) + tuple(self.names))
        for t, row in zip(self.t, self.x):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
        return fh.getvalue() if own else None


def dq_to_abc_state(system, x_dq, eta0=0.0):
    x = np.asarray(x_dq, dtype=float)
    if system == "single":
        theta, w = x[0], x[1]
        return np.concatenate([[theta, w], dq_to_abc(theta, x[2:4])])
    d, w1, w2 = x[:3]
    cur = [dq_to_abc(eta0, x[3 + 2 * k: 5 + 2 * k]) for k in range(3)]
    return np.concatenate([[eta0 - d, eta0 + d, w1, w2], *cur])


def abc_to_dq_state(system, x_abc):
    x = np.asarray(x_abc, dtype=float)
    if system == "single":
        theta, w = x[0], x[1]
        return np.concatenate([[theta, w], abc_to_dq(theta, x[2:5])])
    th1, th2, w1, w2 = x[:4]
    eta = 0.5 * (th1 + th2)
    cur = [abc_to_dq(eta, x[4 + 3 * k: 7 + 3 * k]) for k in range(3)]
    return np.concatenate([[0.5 * (th2 - th1), w1, w2], *cur])


def _model(system, frame, p):
    if system == "single":
        f = rhs_dq_single if frame == "dq" else rhs_abc_single
        names = SINGLE_DQ_NAMES if frame == "dq" else SINGLE_ABC_NAMES
    else:
        f = rhs_dq_two if frame == "dq" else rhs_abc_two
        names = STATE_NAMES if frame == "dq" else ABC_STATE_NAMES
    return (lambda t, x: f(x, p)), names


def _angle_mask(system, frame):
    """Components that must settle for steady-state detection (angles excluded)."""
    n = {("single", "dq"): 4, ("single", "abc"): 5, ("two", "dq"): 9, ("two", "abc"): 13}[(system, frame)]
    mask = np.ones(n, bool)
    if system == "single":
        mask[0] = False
    elif frame == "abc":
        mask[:2] = False
    return mask


def _run(cfg, frame):
    rhs, names = _model(cfg.system, frame, cfg.params)
    x0 = cfg.x0 if frame == "dq" else dq_to_abc_state(cfg.system, cfg.x0, cfg.eta0)
    opts = cfg.options
    if opts.steady_mask is None:
        # angles keep advancing; exclude them from detection and the terminal norm
        opts = replace(opts, steady_mask=_angle_mask(cfg.system, frame))
    sol = integrate(rhs, x0, opts)
    keep = np.arange(0, len(sol.t), cfg.stride)
    if len(sol.t) and keep[-1] != len(sol.t) - 1:
        keep = np.append(keep, len(sol.t) - 1)
    return Trajectory(sol.t[keep], sol.x[keep], names, cfg.system, frame, sol.status,
                      sol.terminal_derivative_norm)


def simulate(cfg):
    """Integrate the configured model; ``frame="both"`` returns ``(dq, abc)``."""
    if cfg.frame == "both":
        return _run(cfg, "dq"), _run(cfg, "abc")
    return _run(cfg, cfg.frame)


@dataclass
class FrameConsistency:
    current_deviation: float  # max_t |U(eta) i_abc - i_dq|
    mechanical_deviation: float  # max_t over speeds (and delta)
    bound: float  # 10 x integrator tolerance

    @property
    def ok(self):
        return max(self.current_deviation, self.mechanical_deviation) <= self.bound


def frame_consistency(cfg, n_samples=201):
    """Integrate both frames on a shared output grid and compare after transforming."""
    t_eval = np.linspace(0.0, cfg.options.t_end, n_samples)
    opts = replace(cfg.options, t_eval=t_eval, steady_tol=None)
    c = replace(cfg, options=opts, frame="both", stride=1)
    dq, abc = simulate(c)
    if len(dq.t) != len(abc.t):
        raise RuntimeError("integrations stopped at different times")
    cur_dev = mech_dev = 0.0
    for xd, xa in zip(dq.x, abc.x):
        mapped = abc_to_dq_state(cfg.system, xa)
        if cfg.system == "single":
            cur_dev = max(cur_dev, float(np.max(np.abs(mapped[2:] - xd[2:]))))
            mech_dev = max(mech_dev, abs(mapped[1] - xd[1]))
        else:
            cur_dev = max(cur_dev, float(np.max(np.abs(mapped[3:] - xd[3:]))))
            mech_dev = max(mech_dev, float(np.max(np.abs(mapped[:3] - xd[:3]))))
    return FrameConsistency(cur_dev, mech_dev, 10 * cfg.options.tolerance)


@dataclass
class BasinResult:
    omega0: float
    label: object  # equilibrium speed, or "none"
    final_omega: float
    t_final: float
    status: str


def basin_probe(p, omega0_grid, horizon=200.0, rtol=1e-8, atol=1e-10, match_tol=1e-4, equilibria=None,
                h_max=0.1):
    """Label each start ``(theta, omega, i_d, i_q) = (0, omega0, 0, 0)`` by its attractor.

    Integration stops at steady state (``|f| < 1e-8 (1 + |x|)`` over the
    non-angle states for 100 consecutive steps) or at ``horizon``. The label
    is the equilibrium speed within ``match_tol`` of the final speed, else
    ``"none"``.
    """
    eqs = solve_single_equilibria(p) if equilibria is None else equilibria
    speeds = [e.omega_e for e in eqs]
    out = []
    for w0 in omega0_grid:
        opts = IntegratorOptions(method="rk45", t_end=horizon, h=1e-2, h_max=h_max, rtol=rtol, atol=atol,
                                 steady_tol=STEADY_TOL, steady_count=STEADY_COUNT)
        cfg = SimConfig("single", p, [0.0, float(w0), 0.0, 0.0], "dq", opts)
        tr = simulate(cfg)
        wf = float(tr.x[-1, 1])
        label = "none"
        if tr.status == "steady" and speeds:
            k = int(np.argmin([abs(wf - s) for s in speeds]))
            if abs(wf - speeds[k]) <= match_tol:
                label = speeds[k]
        out.append(BasinResult(float(w0), label, wf, float(tr.t[-1]), tr.status))
    return out


def parse_grid(spec):
    """``"a:b:step"`` -> inclusive grid of floats."""
    try:
        a, b, step = (float(v) for v in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"grid must look like a:b:step, got {spec!r}") from exc
    if step <= 0 or b < a or not all(map(math.isfinite, (a, b, step))):
        raise ConfigError("grid needs a <= b and step > 0")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return [a + k * step for k in range(n)]
