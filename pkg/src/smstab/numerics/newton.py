"""Damped Newton with backtracking line search, and a deterministic multistart driver."""

from dataclasses import dataclass

import numpy as np

from ..errors import NumericFailure
from .linalg import lu_solve


@dataclass
class NewtonOptions:
    tol: float = 1e-12
    max_iter: int = 60
    min_damping: float = 2.0**-20
    fd_step: float = 1e-7
    dedup_tol: float = 1e-6


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residual_norm: float


def fd_jacobian(residual, x, step=1e-7):
    """Central-difference Jacobian, step relative to each component's magnitude."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(residual(x))
    J = np.empty((f0.size, x.size))
    for k in range(x.size):
        h = step * max(1.0, abs(x[k]))
        e = np.zeros_like(x)
        e[k] = h
        J[:, k] = (np.asarray(residual(x + e)) - np.asarray(residual(x - e))) / (2 * h)
    return J


def newton_solve(residual, x0, jacobian=None, opts=None, abort=None):
    """Minimise ``|F(x)|^2`` by Newton steps halved until the merit decreases.

    Convergence is declared when ``max|F| <= opts.tol``. The caller is
    responsible for scaling ``F`` so that this absolute test is meaningful.
    ``abort(x)`` returning True stops the iteration early (non-converged).
    """
    opts = opts or NewtonOptions()
    x = np.array(x0, dtype=float)
    F = np.asarray(residual(x), dtype=float)
    merit = F @ F
    for it in range(1, opts.max_iter + 1):
        if not np.all(np.isfinite(F)):
            return NewtonResult(x, False, it, float("inf"))
        if np.max(np.abs(F)) <= opts.tol:
            return NewtonResult(x, True, it - 1, float(np.max(np.abs(F))))
        Jx = jacobian(x) if jacobian is not None else fd_jacobian(residual, x, opts.fd_step)
        try:
            dx = lu_solve(Jx, -F)
        except NumericFailure:
            return NewtonResult(x, False, it, float(np.max(np.abs(F))))
        lam = 1.0
        while lam >= opts.min_damping:
            x_try = x + lam * dx
            F_try = np.asarray(residual(x_try), dtype=float)
            m_try = F_try @ F_try
            if np.all(np.isfinite(F_try)) and m_try < (1.0 - 1e-4 * lam) * merit:
                break
            lam *= 0.5
        else:
            # stalled: accept only if already essentially converged
            ok = np.max(np.abs(F)) <= 1e3 * opts.tol
            return NewtonResult(x, ok, it, float(np.max(np.abs(F))))
        x, F, merit = x_try, F_try, m_try
        if abort is not None and abort(x):
            return NewtonResult(x, False, it, float(np.max(np.abs(F))))
    ok = np.max(np.abs(F)) <= opts.tol
    return NewtonResult(x, bool(ok), opts.max_iter, float(np.max(np.abs(F))))


def dedupe(points, tol=1e-6, distance=None):
    """Cluster points closer than ``tol`` (scaled by 1 + |x|); order-independent.

    Points are sorted lexicographically before clustering so the result does
    not depend on the order they were found in.
    """
    if len(points) == 0:
        return []
    pts = sorted((np.asarray(p, dtype=float) for p in points), key=lambda p: tuple(p))
    if distance is None:
        def distance(a, b):
            return np.max(np.abs(a - b) / (1.0 + np.abs(a)))
    out = []
    for p in pts:
        if not any(distance(q, p) <= tol for q in out):
            out.append(p)
    return out


def newton_multistart(residual, starts, jacobian=None, opts=None, accept=None,
                      canonical=None, distance=None, abort=None):
    """Run :func:`newton_solve` from every start and return distinct solutions.

    ``canonical`` maps a converged point to a representative (e.g. wrapping an
    angle); ``accept`` filters converged points; ``abort`` is passed to
    :func:`newton_solve`. The result is sorted and
    independent of the order of ``starts``. An empty list means every start
    failed; that is not an error.
    """
    opts = opts or NewtonOptions()
    found = []
    for s in starts:
        res = newton_solve(residual, s, jacobian, opts, abort)
        if not res.converged:
            continue
        x = canonical(res.x) if canonical is not None else res.x
        if accept is not None and not accept(x):
            continue
        found.append(x)
    return dedupe(found, opts.dedup_tol, distance)
