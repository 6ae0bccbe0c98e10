"""dq (rotating-frame) transform, back-EMF and electrical torque.

Three-phase quantities are plain length-3 arrays (a, b, c); dq quantities
are length-2 arrays (d, q). Angles are never wrapped.

The transform drops zero-sequence content: ``abc_to_dq(eta, (1, 1, 1)) == 0``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError, SingularVelocityError

SQRT_2_3 = math.sqrt(2.0 / 3.0)
SQRT_3_2 = math.sqrt(1.5)
PHASES = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ExcitationParams:
    """Field winding data. ``b`` is always derived, never stored."""

    M_f: float
    i_f: float

    @property
    def b(self):
        return SQRT_3_2 * self.M_f * self.i_f

    @classmethod
    def from_b(cls, b):
        """Excitation with unit field current and ``M_f = b / sqrt(3/2)``."""
        return cls(M_f=b / SQRT_3_2, i_f=1.0)


def _check_angle(eta):
    eta = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(eta)):
        raise DomainError("rotor angle must be finite")
    return eta


def dq_matrix(eta):
    """2x3 transform U(eta); rows are orthonormal."""
    eta = float(_check_angle(eta))
    ang = eta - PHASES
    return SQRT_2_3 * np.vstack([np.cos(ang), np.sin(ang)])


def abc_to_dq(eta, v_abc):
    return dq_matrix(eta) @ np.asarray(v_abc, dtype=float)


def dq_to_abc(eta, v_dq):
    return dq_matrix(eta).T @ np.asarray(v_dq, dtype=float)


def _b_of(exc):
    return exc.b if isinstance(exc, ExcitationParams) else float(exc)


def back_emf(theta, omega, exc):
    """Stator back-EMF ``M_f i_f omega sin(theta - k 2pi/3)``.

    ``exc`` is an :class:`ExcitationParams` or the constant ``b`` itself.
    """
    theta = float(_check_angle(theta))
    return _b_of(exc) / SQRT_3_2 * omega * np.sin(theta - PHASES)


def electrical_torque(e_abc, i_abc, omega):
    """Electrical torque ``e.i / omega``."""
    if omega == 0:
        raise SingularVelocityError("electrical torque is undefined at omega = 0")
    return float(np.dot(e_abc, i_abc)) / omega


def dq_derivative_identity_check(eta_traj, i_abc_traj, h):
    """Max deviation of d(i_dq)/dt from ``eta' J2 U i_abc + U d(i_abc)/dt``.

    All derivatives are central differences on a uniform grid of step ``h``,
    so for smooth trajectories the deviation is O(h^2).
    """
    eta = _check_angle(eta_traj)
    i_abc = np.asarray(i_abc_traj, dtype=float)
    if eta.ndim != 1 or len(eta) < 3 or len(i_abc) != len(eta):
        raise InsufficientDataError("need at least 3 matched samples")
    i_dq = np.array([abc_to_dq(e, i) for e, i in zip(eta, i_abc)])
    worst = 0.0
    for k in range(1, len(eta) - 1):
        lhs = (i_dq[k + 1] - i_dq[k - 1]) / (2 * h)
        eta_dot = (eta[k + 1] - eta[k - 1]) / (2 * h)
        di = (i_abc[k + 1] - i_abc[k - 1]) / (2 * h)
        U = dq_matrix(eta[k])
        rhs = eta_dot * J2 @ U @ i_abc[k] + U @ di
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst
