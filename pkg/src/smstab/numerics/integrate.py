"""Explicit Runge-Kutta integration: fixed-step RK4 and adaptive Dormand-Prince 5(4)."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import StiffnessError

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass
class IntegratorOptions:
    """Integrator settings.

    ``steady_tol`` enables early stopping once
    ``max|f(x)[steady_mask]| < steady_tol * (1 + max|x[steady_mask]|)`` has held
    for ``steady_count`` consecutive accepted steps. ``steady_mask`` selects
    the components that must settle (angles that keep advancing are excluded).
    ``h_max`` caps the adaptive step, which keeps "consecutive steps" a
    meaningful duration near a steady state.
    """

    method: str = "rk45"
    t_end: float = 1.0
    h: float = 1e-2
    rtol: float = 1e-8
    atol: float = 1e-10
    h_min: float = 1e-14
    h_max: float = float("inf")
    max_steps: int = 10_000_000
    steady_tol: float = None
    steady_count: int = 100
    steady_mask: np.ndarray = None
    t_eval: np.ndarray = None

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.h > 0 and self.h_max > 0 and self.rtol > 0 and self.atol > 0 and self.t_end >= 0):
            raise ValueError("step size and tolerances must be positive")

    @property
    def tolerance(self):
        return self.rtol if self.method == "rk45" else self.h**4


@dataclass
class Solution:
    t: np.ndarray
    x: np.ndarray
    status: str = "t_end"
    n_steps: int = 0
    n_rejected: int = 0
    terminal_derivative_norm: float = float("nan")
    extras: dict = field(default_factory=dict)


class _SteadyDetector:
    def __init__(self, opts, n):
        self.tol = opts.steady_tol
        self.need = opts.steady_count
        self.mask = np.ones(n, bool) if opts.steady_mask is None else np.asarray(opts.steady_mask)
        self.run = 0

    def update(self, x, fx):
        if self.tol is None:
            return False
        xm = x[self.mask]
        lim = self.tol * (1.0 + (np.max(np.abs(xm)) if xm.size else 0.0))
        if np.max(np.abs(fx[self.mask]), initial=0.0) < lim:
            self.run += 1
        else:
            self.run = 0
        return self.run >= self.need


def _rk4_step(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(rhs, x0, opts, t0=0.0):
    """Integrate ``x' = rhs(t, x)`` from ``t0`` to ``t0 + opts.t_end``.

    With ``opts.t_eval`` the output is sampled exactly at those times (steps
    are clipped to land on them); otherwise every accepted step is recorded.
    """
    x = np.array(x0, dtype=float)
    t_stop = t0 + opts.t_end
    steady = _SteadyDetector(opts, x.size)
    t_eval = None if opts.t_eval is None else np.asarray(opts.t_eval, dtype=float)
    ts, xs = [], []
    next_eval = 0

    def record(t, x):
        ts.append(t)
        xs.append(x.copy())

    if t_eval is None:
        record(t0, x)
    else:
        while next_eval < len(t_eval) and t_eval[next_eval] <= t0 + 1e-14:
            record(t_eval[next_eval], x)
            next_eval += 1

    def target(t):
        if t_eval is not None and next_eval < len(t_eval):
            return min(t_stop, t_eval[next_eval])
        return t_stop

    t = t0
    status = "t_end"
    nsteps = nrej = 0
    if opts.method == "rk4":
        while t < t_stop - 1e-14 * max(1.0, abs(t_stop)):
            h = min(opts.h, target(t) - t)
            x = _rk4_step(rhs, t, x, h)
            t += h
            nsteps += 1
            fx = rhs(t, x)
            if t_eval is None:
                record(t, x)
            elif next_eval < len(t_eval) and abs(t - t_eval[next_eval]) <= 1e-12 * max(1.0, abs(t)):
                record(t_eval[next_eval], x)
                next_eval += 1
            if steady.update(x, fx):
                status = "steady"
                break
            if nsteps >= opts.max_steps:
                status = "max_steps"
                break
    else:
        h = opts.h
        k1 = rhs(t, x)
        while t < t_stop - 1e-14 * max(1.0, abs(t_stop)):
            tgt = target(t)
            h_try = min(h, opts.h_max, tgt - t)
            if h_try < opts.h_min:
                if tgt - t < opts.h_min:
                    h_try = tgt - t
                else:
                    raise StiffnessError(
                        f"step size {h:.3e} fell below h_min={opts.h_min:.1e} at t={t:.6g}; "
                        "the problem is probably stiff",
                        partial=Solution(np.array(ts), np.array(xs), status="stiff"),
                    )
            k = [k1]
            for i in range(1, 7):
                xi = x + h_try * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
                k.append(rhs(t + _C[i] * h_try, xi))
            x_new = x + h_try * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
            err_vec = h_try * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
            sc = opts.atol + opts.rtol * np.maximum(np.abs(x), np.abs(x_new))
            err = float(np.sqrt(np.mean((err_vec / sc) ** 2)))
            if err <= 1.0:
                t += h_try
                x = x_new
                k1 = k[6]  # FSAL
                nsteps += 1
                if t_eval is None:
                    record(t, x)
                elif next_eval < len(t_eval) and abs(t - t_eval[next_eval]) <= 1e-12 * max(1.0, abs(t)):
                    record(t_eval[next_eval], x)
                    next_eval += 1
                fac = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
                # a step clipped onto an output time must not shrink the natural step
                h = max(h, h_try * fac) if h_try < h else h_try * fac
                if steady.update(x, k1):
                    status = "steady"
                    break
                if nsteps >= opts.max_steps:
                    status = "max_steps"
                    break
            else:
                nrej += 1
                h = h_try * max(0.2, 0.9 * err ** -0.2)
    fx = rhs(t, x)
    mask = steady.mask
    return Solution(
        t=np.array(ts),
        x=np.array(xs),
        status=status,
        n_steps=nsteps,
        n_rejected=nrej,
        terminal_derivative_norm=float(np.max(np.abs(fx[mask]), initial=0.0)),
    )
