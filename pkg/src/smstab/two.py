"""Two identical synchronous machines with resistive loads, tied by a line inductance.

dq state ``[delta, omega1, omega2, i_d1, i_q1, i_d2, i_q2, i_d3, i_q3]`` with
``delta = (theta2 - theta1)/2`` and average speed ``omega = (omega1 + omega2)/2``.
abc state ``[theta1, theta2, omega1, omega2, i_abc1, i_abc2, i_abc3]`` (13 entries).

Equilibrium speeds are the positive real roots of a polynomial obtained by
eliminating the currents and the angle. Three variants are available:

``derived`` (default)
    Re-derived from the abc model; degree 14 in omega.
``printed``
    The same elimination carried out on the published closed-form currents
    (an extra factor 1/2 and flipped ``e`` terms); degree 18.
``appendix``
    The published K/G/H coefficient formulas and assembly taken verbatim.

Every candidate is checked against the steady-state equations of the
derived dq model, so non-derived variants can only ever produce
"candidates", never silently accepted equilibria.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainError, SingularVelocityError
from .frames import back_emf, electrical_torque
from .numerics import (NewtonOptions, Poly, Spectrum, eigenvalues, lu_solve, newton_multistart,
                       polynomial_roots)
from .numerics.newton import newton_solve

STATE_NAMES = ("delta", "omega1", "omega2", "i_d1", "i_q1", "i_d2", "i_q2", "i_d3", "i_q3")
ABC_STATE_NAMES = ("theta1", "theta2", "omega1", "omega2",
                   "i_a1", "i_b1", "i_c1", "i_a2", "i_b2", "i_c2", "i_a3", "i_b3", "i_c3")
POLY_VARIANTS = ("derived", "printed", "appendix")
REAL_TOL = 1e-7
TINY = 1e-250


@dataclass(frozen=True)
class TwoMachineParams:
    """Per-machine parameters. ``R = R_s + R_L`` enters the dq model."""

    J: float
    D: float
    T_m1: float
    T_m2: float
    R_s: float
    R_L: float
    L: float
    L3: float
    b: float

    def __post_init__(self):
        for name in ("J", "D", "T_m1", "T_m2", "R_s", "R_L", "L", "L3", "b"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number")
        for name in ("J", "D", "R_L", "L", "L3"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("R_s", "b", "T_m1", "T_m2"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @classmethod
    def from_aggregate(cls, J, D, T_m1, T_m2, R, R_L, L, L3, b):
        if R < R_L:
            raise ConfigError("R must satisfy R >= R_L (R = R_s + R_L with R_s >= 0)")
        return cls(J=J, D=D, T_m1=T_m1, T_m2=T_m2, R_s=R - R_L, R_L=R_L, L=L, L3=L3, b=b)

    @property
    def R(self):
        return self.R_s + self.R_L

    @property
    def T_d(self):
        return self.T_m2 - self.T_m1

    @property
    def T_s(self):
        return self.T_m1 + self.T_m2

    @property
    def omega_bound(self):
        """No equilibrium can spin faster: dissipated power must be positive."""
        return self.T_s / (2 * self.D)


# ---------------------------------------------------------------- dynamics

def _row_terms(x, p, variant="derived"):
    """Right-hand sides before dividing by J, L, L3, as tuples of terms."""
    d, w1, w2, id1, iq1, id2, iq2, id3, iq3 = x
    w = 0.5 * (w1 + w2)
    s, c = math.sin(d), math.cos(d)
    b, R, L, RL, L3, D = p.b, p.R, p.L, p.R_L, p.L3, p.D
    if variant == "derived":
        m1 = (-D * w1, b * s * id1, -b * c * iq1, p.T_m1)
        m2 = (-D * w2, -b * s * id2, -b * c * iq2, p.T_m2)
        q2_src = b * c * w2
    elif variant == "printed":
        m1 = (-D * w1, -b * s * id1, b * c * iq1, p.T_m1)
        m2 = (-D * w2, b * s * id2, -b * c * iq2, p.T_m2)
        q2_src = -b * c * w2
    else:
        raise ValueError(f"unknown model variant {variant!r}")
    return [
        (0.5 * w2, -0.5 * w1),
        m1,
        m2,
        (-R * id1, -L * w * iq1, -b * s * w1, RL * id3),
        (-R * iq1, L * w * id1, b * c * w1, RL * iq3),
        (-R * id2, -L * w * iq2, b * s * w2, -RL * id3),
        (-R * iq2, L * w * id2, q2_src, -RL * iq3),
        (-2 * RL * id3, RL * id1, -RL * id2, -L3 * w * iq3),
        (-2 * RL * iq3, RL * iq1, -RL * iq2, L3 * w * id3),
    ]


def _divisors(p):
    return np.array([1.0, p.J, p.J, p.L, p.L, p.L, p.L, p.L3, p.L3])


def rhs_dq_two(x, p, variant="derived"):
    """dq-frame derivative. ``variant="printed"`` uses the published sign pattern."""
    rows = _row_terms(x, p, variant)
    return np.array([sum(r) for r in rows]) / _divisors(p)


def rhs_abc_two(x, p):
    th1, th2, w1, w2 = x[:4]
    i1, i2, i3 = (np.asarray(x[4 + 3 * k: 7 + 3 * k], dtype=float) for k in range(3))
    if w1 == 0 or w2 == 0:
        raise SingularVelocityError("abc model needs omega1, omega2 != 0")
    e1 = back_emf(th1, w1, p.b)
    e2 = back_emf(th2, w2, p.b)
    Rt = p.R_s + p.R_L
    return np.concatenate([
        [w1, w2,
         (-p.D * w1 - electrical_torque(e1, i1, w1) + p.T_m1) / p.J,
         (-p.D * w2 - electrical_torque(e2, i2, w2) + p.T_m2) / p.J],
        (-Rt * i1 + e1 + p.R_L * i3) / p.L,
        (-Rt * i2 + e2 - p.R_L * i3) / p.L,
        (-2 * p.R_L * i3 + p.R_L * (i1 - i2)) / p.L3,
    ])


def equilibrium_residual_two(x, p):
    """Relative residual of the eight steady-state equations (rows after delta).

    Each row contributes ``|sum of terms| / sum |terms|``; the maximum is returned.
    """
    worst = 0.0
    for terms in _row_terms(x, p)[1:]:
        scale = sum(abs(t) for t in terms)
        if scale > TINY:  # rows made of subnormal terms carry no relative precision
            worst = max(worst, abs(sum(terms)) / scale)
    return worst


# ---------------------------------------------------------------- closed forms

@dataclass(frozen=True)
class TwoMachineAux:
    X: float
    a: float
    e: float
    Z: float  # R^2 + L^2 w^2
    N: float  # a^2 + e^2


def aux(omega, p):
    w = omega
    X = 4 * p.R_L**2 + (p.L3 * w) ** 2
    a = -p.R + 4 * p.R_L**3 / X
    e = -p.L * w - 2 * p.L3 * w * p.R_L**2 / X
    return TwoMachineAux(X, a, e, p.R**2 + p.L**2 * w**2, a * a + e * e)


def closed_form_currents(omega, delta, p, variant="derived"):
    """Steady-state currents ``(i_d1, i_q1, i_d2, i_q2, i_d3, i_q3)`` at given (omega, delta)."""
    x = aux(omega, p)
    if x.N == 0:
        raise DomainError("degenerate network: a^2 + e^2 = 0")
    s, c = math.sin(delta), math.cos(delta)
    w = omega
    if variant == "derived":
        k, es = p.b * w, 1.0
    else:
        k, es = 0.5 * p.b * w, -1.0
    id1 = k * (-p.L * w * c / x.Z + x.a * s / x.N)
    iq1 = k * (p.R * c / x.Z + es * x.e * s / x.N)
    id2 = k * (-p.L * w * c / x.Z - x.a * s / x.N)
    iq2 = k * (p.R * c / x.Z - es * x.e * s / x.N)
    dd, dq = id1 - id2, iq1 - iq2
    RL, L3 = p.R_L, p.L3
    id3 = (2 * RL**2 * dd - L3 * w * RL * dq) / x.X
    iq3 = (L3 * w * RL * dd + 2 * RL**2 * dq) / x.X
    return np.array([id1, iq1, id2, iq2, id3, iq3])


def current_matrix(omega, p):
    """Coefficient matrix of the six linear steady-state current equations."""
    R, L, RL, L3, w = p.R, p.L, p.R_L, p.L3, omega
    return np.array([
        [-R, -L * w, 0, 0, RL, 0],
        [L * w, -R, 0, 0, 0, RL],
        [0, 0, -R, -L * w, -RL, 0],
        [0, 0, L * w, -R, 0, -RL],
        [RL, 0, -RL, 0, -2 * RL, -L3 * w],
        [0, RL, 0, -RL, L3 * w, -2 * RL],
    ], dtype=float)


def solve_currents_linear(omega, delta, p):
    """Steady-state currents by a direct linear solve (independent of the closed forms)."""
    s, c = math.sin(delta), math.cos(delta)
    b, w = p.b, omega
    rhs = np.array([b * s * w, -b * c * w, -b * s * w, -b * c * w, 0.0, 0.0])
    return lu_solve(current_matrix(omega, p), rhs)


@dataclass
class DeltaRecovery:
    omega: float
    sc: float  # sin(delta) cos(delta)
    s2: float  # sin^2(delta)
    c2: float  # cos^2(delta)
    cond_i: bool  # |sc| <= 0.5
    cond_ii: bool  # s2 + c2 == 1
    cond_iii: bool  # omega > 0
    real_angle: bool  # s2, c2 in [0, 1] and sc = +-sqrt(s2 c2)
    delta: float = float("nan")  # representative in (-pi/2, pi/2]
    aliases: tuple = ()  # same physical state, other representatives in (-pi, pi]
    reason: str = ""

    @property
    def valid(self):
        return self.cond_i and self.cond_ii and self.cond_iii and self.real_angle


def recover_delta(omega, p, variant="derived", tol=1e-8):
    """Angle at an equilibrium speed from the torque sum/difference relations."""
    if variant not in POLY_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    derived = variant == "derived"
    beta = 2 * p.b**2 if derived else p.b**2
    w = omega
    x = aux(w, p)
    with np.errstate(all="ignore"):
        den_sc = beta * w * (-p.L * w / x.Z + (-x.e if derived else x.e) / x.N)
        den_2 = beta * w * (x.a * x.Z + p.R * x.N)
        sc = np.float64(p.T_d) / den_sc if den_sc != 0 else (0.0 if p.T_d == 0 else math.inf)
        s2 = ((2 * p.D * w - p.T_s) * x.Z + p.R * beta * w) * x.N / np.float64(den_2)
        c2 = (x.a * beta * w + (p.T_s - 2 * p.D * w) * x.N) * x.Z / np.float64(den_2)
    sc, s2, c2 = float(sc), float(s2), float(c2)
    out = DeltaRecovery(w, sc, s2, c2, False, False, w > 0, False)
    if not all(math.isfinite(v) for v in (sc, s2, c2)):
        out.reason = "degenerate denominator"
        return out
    out.cond_i = abs(sc) <= 0.5 + tol
    out.cond_ii = abs(s2 + c2 - 1.0) <= tol
    in_range = -tol <= s2 <= 1 + tol and -tol <= c2 <= 1 + tol
    if in_range:
        s2c, c2c = min(max(s2, 0.0), 1.0), min(max(c2, 0.0), 1.0)
        sgn = 1.0 if sc >= 0 else -1.0
        out.real_angle = abs(sc - sgn * math.sqrt(s2c * c2c)) <= 1e-6
        # double-angle form stays well conditioned near delta = +-pi/2
        d = 0.5 * math.atan2(2 * sc, c2 - s2)
        if d <= -math.pi / 2:
            d += math.pi
        out.delta = d
        out.aliases = (d - math.pi,) if d > 0 else (d + math.pi,)
    reasons = []
    if not out.cond_iii:
        reasons.append("non-positive speed")
    if not out.cond_i:
        reasons.append(f"|sin*cos| = {abs(sc):.6g} > 0.5")
    if not out.cond_ii:
        reasons.append(f"sin^2 + cos^2 = {s2 + c2:.12g}")
    if not in_range:
        reasons.append("sin^2 or cos^2 outside [0, 1]")
    elif not out.real_angle:
        reasons.append("sin*cos inconsistent with sin^2*cos^2")
    out.reason = "; ".join(reasons)
    return out


# ---------------------------------------------------------------- polynomial

@dataclass
class PolyCoefficients18:
    variant: str
    K: np.ndarray  # K0..K8
    G: np.ndarray  # G0..G10 (odd entries zero)
    H: np.ndarray  # H0..H10 (odd entries zero)
    coeffs: np.ndarray  # ascending, length 19
    labels: list

    @property
    def poly(self):
        return Poly(self.coeffs, labels=self.labels)

    @property
    def degree(self):
        return self.poly.degree


def _factors(p, variant):
    """Polynomial factors (in omega) of ``P1 S2 T3^2 = T_d^2 Z W M2^2``."""
    D, R, L, RL, L3, b = p.D, p.R, p.L, p.R_L, p.L3, p.b
    Ts, Td = p.T_s, p.T_d
    beta = 2 * b**2 if variant == "derived" else b**2
    w = Poly([0.0, 1.0])
    Z = Poly([R**2, 0.0, L**2])
    X = Poly([4 * RL**2, 0.0, L3**2])
    Y = Poly([4 * RL**4 - 8 * R * RL**3, 0.0, 4 * L * L3 * RL**2])  # R_L^2 (4 L L3 w^2 - 8 R R_L) + 4 R_L^4
    W = Z * X + Y
    alpha = X * (-R) + 4 * RL**3
    P1 = (w * (2 * D) - Ts) * Z + w * (R * beta)
    S2 = alpha * w * beta + (Poly([Ts, -2 * D])) * W
    if variant == "derived":
        T3 = -(w * L) * Y + w * (2 * L3 * RL**2) * Z
    else:
        T3 = -(w * (2 * L)) * Z * X - w * (2 * L3 * RL**2) * Z - (w * L) * Y
    M2 = Z * (4 * RL**3) + Y * R
    rhs = Z * W * M2**2 * Td**2
    return P1, S2, T3, rhs


def _pad(c, n):
    out = np.zeros(n)
    c = np.asarray(c, dtype=float)[:n]
    out[: len(c)] = c
    return out


def _appendix_khg(p):
    """K, G, H exactly as tabulated in the published appendix."""
    R, L, D, b, RL, L3, Ts, Td = p.R, p.L, p.D, p.b, p.R_L, p.L3, p.T_s, p.T_d
    K = [
        -4 * RL**4 * R**2 * Ts**2 + 8 * RL**3 * R**3 * Ts**2 - 4 * RL**2 * R**4 * Ts**2,
        4 * b**2 * RL**4 * R * Ts - 12 * b**2 * RL**3 * R**2 * Ts + 16 * D * RL**4 * R**2 * Ts
        + 8 * b**2 * RL**2 * R**3 * Ts - 32 * D * RL**3 * R**3 * Ts + 16 * D * RL**2 * R**4 * Ts,
        4 * b**4 * RL**3 * R - 8 * b**2 * D * RL**4 * R - 4 * b**4 * RL**2 * R**2 + 24 * b**2 * D * RL**3 * R**2
        - 16 * D**2 * RL**4 * R**2 - 16 * b**2 * D * RL**2 * R**3 + 32 * D**2 * RL**3 * R**3
        - 16 * D**2 * RL**2 * R**4 - 4 * L**2 * RL**4 * Ts**2 + 8 * L**2 * RL**3 * R * Ts**2
        - 4 * L3 * L * RL**2 * R**2 * Ts**2 - 8 * L**2 * RL**2 * R**2 * Ts**2 + R**4 * Ts**2,
        -4 * b**2 * L**2 * RL**3 * Ts + 16 * D * L**2 * RL**4 * Ts + 4 * L3 * b**2 * L * RL**2 * R * Ts
        + 8 * b**2 * L**2 * RL**2 * R * Ts - 32 * D * L**2 * RL**3 * R * Ts + 16 * L3 * D * L * RL**2 * R**2 * Ts
        + 32 * D * L**2 * RL**2 * R**2 * Ts - 2 * b**2 * R**3 * Ts - 4 * D * R**4 * Ts,
        8 * b**2 * D * L**2 * RL**3 - 16 * D**2 * L**2 * RL**4 - 8 * L3 * b**2 * D * L * RL**2 * R
        - 16 * b**2 * D * L**2 * RL**2 * R + 32 * D**2 * L**2 * RL**3 * R + b**4 * R**2
        - 16 * L3 * D**2 * L * RL**2 * R**2 - 32 * D**2 * L**2 * RL**2 * R**2 + 4 * b**2 * D * R**3
        + 4 * D**2 * R**4 - 4 * L3 * L**3 * RL**2 * Ts**2 - 4 * L**4 * RL**2 * Ts**2 + 2 * L**2 * R**2 * Ts**2,
        16 * L3 * D * L**3 * RL**2 * Ts + 16 * D * L**4 * RL**2 * Ts - 2 * b**2 * L**2 * R * Ts
        - 8 * D * L**2 * R**2 * Ts,
        -16 * L3 * D**2 * L**3 * RL**2 - 16 * D**2 * L**4 * RL**2 + 4 * b**2 * D * L**2 * R
        + 8 * D**2 * L**2 * R**2 + L**4 * Ts**2,
        -4 * D * L**4 * Ts,
        4 * D**2 * L**4,
    ]
    G = np.zeros(11)
    G[10] = 4 * L**6
    G[8] = -32 * L**6 * RL**2 - 24 * L3 * L**5 * RL**2 + 8 * L**4 * R**2
    G[6] = (64 * L**6 * RL**4 + 96 * L3 * L**5 * RL**4 - 52 * L**4 * RL**4 + 32 * L**4 * RL**3 * R
            - 64 * L**4 * RL**2 * R**2 - 32 * L3 * L**3 * RL**2 * R**2 + 4 * L**2 * R**4)
    G[4] = (-8 * L3 * L * RL**2 * R**4 + 64 * L**4 * RL**6 - 128 * L**4 * RL**5 * R + 128 * L**4 * RL**4 * R**2
            + 48 * L3 * L**3 * RL**6 - 96 * L3 * L**3 * RL**5 * R + 128 * L3 * L**3 * RL**4 * R**2
            - 40 * L**2 * RL**4 * R**2 + 32 * L**2 * RL**3 * R**3 - 32 * L**2 * RL**2 * R**4)
    G[2] = (16 * L**2 * RL**8 - 64 * L**2 * RL**7 * R + 128 * L**2 * RL**6 * R**2 - 128 * L**2 * RL**5 * R**3
            + 64 * L**2 * RL**4 * R**4 + 16 * L3 * L * RL**6 * R**2 - 32 * L3 * L * RL**5 * R**3
            + 32 * L3 * L * RL**4 * R**4 - 4 * RL**4 * R**4)
    T2 = Td**2
    H = np.zeros(11)
    H[10] = T2 * (-16 * L**8 * RL**6 - 32 * L3 * L**7 * R * RL**5 + 16 * L**6 * R**2 * RL**4)
    H[8] = T2 * (64 * L**8 * RL**8 + 64 * L3 * L**7 * RL**8 - 160 * L**6 * R * RL**7
                 + 128 * L3 * L**7 * R * RL**7 - 64 * L**6 * R**2 * RL**6 - 96 * L3 * L**5 * R**2 * RL**6
                 - 32 * L3 * L**5 * R**3 * RL**5 + 32 * L**4 * R**4 * RL**4)
    H[6] = T2 * (64 * L**6 * RL**10 - 208 * L**4 * R**2 * RL**8 - 192 * L3 * L**5 * R**2 * RL**8
                 + 256 * L3 * L**5 * R * RL**9 + 128 * L3 * L**5 * R**3 * RL**7 + 96 * L**4 * R**3 * RL**7
                 - 96 * L**4 * R**4 * RL**6 - 128 * L3 * L**3 * R**4 * RL**6
                 + 32 * L3 * L**3 * R**5 * RL**5 + 16 * L**2 * R**6 * RL**4)
    H[4] = T2 * (128 * L**4 * R * RL**11 - 256 * L**4 * R**2 * RL**10 + 192 * L3 * L**3 * R**2 * RL**10
                 + 256 * L**4 * R**3 * RL**9 - 256 * L3 * L**3 * R**3 * RL**9 - 128 * L**4 * R**4 * RL**8
                 + 192 * L3 * L**3 * R**4 * RL**8 - 224 * L**2 * R**4 * RL**8 - 128 * L3 * L**3 * R**5 * RL**7
                 + 288 * L**2 * R**5 * RL**7 - 64 * L**2 * R**6 * RL**6 - 32 * L3 * L * R**6 * RL**6
                 + 32 * L3 * L * R**7 * RL**5)
    H[2] = T2 * (64 * L**2 * R**2 * RL**12 - 128 * L**2 * R**3 * RL**11 + 64 * L**2 * R**4 * RL**10
                 + 192 * L3 * L * R**4 * RL**10 - 512 * L3 * L * R**5 * RL**9 + 448 * L3 * L * R**6 * RL**8
                 - 16 * R**6 * RL**8 - 128 * L3 * L * R**7 * RL**7 + 32 * R**7 * RL**7 - 16 * R**8 * RL**6)
    H[0] = T2 * (64 * R**4 * RL**12 - 256 * R**5 * RL**11 + 384 * R**6 * RL**10
                 - 256 * R**7 * RL**9 + 64 * R**8 * RL**8)
    return np.array(K, dtype=float), G, H


def _labels():
    labels = []
    for k in range(19):
        parts = [f"K{k - j}*G{j}" for j in (2, 4, 6, 8, 10) if 0 <= k - j <= 8]
        s = " + ".join(parts) if parts else ""
        if k % 2 == 0 and k <= 10:
            s = f"{s} - H{k}" if s else f"-H{k}"
        labels.append(s or "0")
    return labels


def assemble_poly18(p, variant="derived"):
    """Coefficients of ``sum K_i G_j w^(i+j) - sum H_k w^k``.

    For ``appendix`` the top coefficient follows the published assembly
    (``-K8 G10``); the other variants use the product's own sign.
    """
    if variant not in POLY_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "appendix":
        K, G, H = _appendix_khg(p)
    else:
        P1, S2, T3, rhs = _factors(p, variant)
        K = _pad((P1 * S2).coeffs, 9)
        G = _pad((T3**2).coeffs, 11)
        H = _pad(rhs.coeffs, 11)
    c = np.zeros(19)
    for i in range(9):
        for j in range(11):
            c[i + j] += K[i] * G[j]
    c[:11] -= H
    labels = _labels()
    if variant == "appendix":
        c[18] = -K[8] * G[10]
        labels[18] = "-K8*G10"
    return PolyCoefficients18(variant, K, G, H, c, labels)


def product_form(omega, p, variant="derived"):
    """``P1 S2 T3^2 - T_d^2 Z W M2^2`` evaluated factor by factor."""
    P1, S2, T3, rhs = _factors(p, variant)
    return P1(omega) * S2(omega) * T3(omega) ** 2 - rhs(omega)


# ---------------------------------------------------------------- equilibria

@dataclass
class TwoEquilibrium:
    omega_e: float
    delta_e: float
    currents: np.ndarray  # i_d1, i_q1, i_d2, i_q2, i_d3, i_q3
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    residual_norm: float
    sc: float = float("nan")
    s2: float = float("nan")
    c2: float = float("nan")
    aliases: tuple = ()

    def state(self):
        return np.concatenate([[self.delta_e, self.omega_e, self.omega_e], self.currents])


@dataclass
class RejectedRoot:
    value: complex
    reason: str


@dataclass
class TwoSolve:
    variant: str
    poly: PolyCoefficients18
    roots: Spectrum
    candidates: list  # pass conditions (i)-(iii)
    equilibria: list  # candidates that also pass the residual check
    rejected: list
    newton: list = field(default_factory=list)  # (omega, delta) from the Newton route
    agreement: bool = True
    flags: list = field(default_factory=list)


def canonical_delta(delta, currents=None):
    """Map delta into (-pi/2, pi/2]; a shift by pi flips the sign of every dq current."""
    k = math.floor((math.pi / 2 - delta) / math.pi)
    d = delta + k * math.pi
    if currents is None:
        return d
    return d, (currents if k % 2 == 0 else -np.asarray(currents))


def _delta_gap(a, b):
    return abs((a - b + math.pi / 2) % math.pi - math.pi / 2)


def _polish_root(r, p, variant, dpoly, iters=4):
    g = (lambda w: product_form(w, p, variant)) if variant != "appendix" else None
    f = g if g is not None else dpoly[0]
    df = dpoly[1]
    for _ in range(iters):
        fr = f(r)
        d = df(r)
        if d == 0 or fr == 0:
            break
        r_new = r - fr / d
        if abs(f(r_new)) >= abs(fr):
            break
        r = r_new
    return r


def _zero_excitation(p, tol):
    """With b = 0 the machines decouple; torques balance only if T_m1 = T_m2."""
    if p.T_d != 0 or p.T_s == 0:
        return []
    w = p.T_m1 / p.D
    x = np.array([0.0, w, w, 0, 0, 0, 0, 0, 0])
    return [TwoEquilibrium(w, 0.0, np.zeros(6), True, True, True, equilibrium_residual_two(x, p))]


def solve_two_equilibria(p, variant="derived", tol=1e-8, newton_check=True, newton_grid=(12, 6),
                         seed=0, n_random=0):
    """All equilibria through the polynomial route, cross-checked by Newton multistart.

    Real positive roots (``|Im| <= 1e-7 (1 + |Re|)``) are turned into angle and
    currents; those passing conditions (i)-(iii) are ``candidates`` and those
    whose steady-state residual is also below ``tol`` are ``equilibria``.
    With ``newton_check`` the Newton route is run independently and any
    disagreement is recorded in ``flags`` with ``agreement = False``.
    ``n_random`` extra Newton starts are drawn with ``seed``.
    """
    pc = assemble_poly18(p, variant)
    if p.b == 0:
        eqs = _zero_excitation(p, tol)
        return TwoSolve(variant, pc, Spectrum(np.array([])), list(eqs), eqs, [],
                        [(e.omega_e, e.delta_e) for e in eqs], True,
                        ["zero excitation: closed-form decoupled solution"])
    poly = pc.poly
    roots = polynomial_roots(poly)
    dpoly = (poly, poly.derivative())
    candidates, equilibria, rejected = [], [], []
    for z in roots:
        if abs(z.imag) > REAL_TOL * (1 + abs(z.real)):
            continue
        r = float(z.real)
        if r <= 0:
            rejected.append(RejectedRoot(r, "non-positive speed"))
            continue
        r = _polish_root(r, p, variant, dpoly)
        rec = recover_delta(r, p, variant)
        if not rec.valid:
            rejected.append(RejectedRoot(r, rec.reason))
            continue
        cur = closed_form_currents(r, rec.delta, p, "derived" if variant == "derived" else "printed")
        x = np.concatenate([[rec.delta, r, r], cur])
        res = equilibrium_residual_two(x, p)
        eq = TwoEquilibrium(r, rec.delta, cur, rec.cond_i, rec.cond_ii, rec.cond_iii, res,
                            rec.sc, rec.s2, rec.c2, rec.aliases)
        candidates.append(eq)
        if res <= tol:
            equilibria.append(eq)
        else:
            rejected.append(RejectedRoot(r, f"steady-state residual {res:.3e} exceeds {tol:.1e}"))
    # multiplicities (e.g. double roots) collapse to one state
    equilibria = _unique(equilibria)
    candidates = _unique(candidates)
    out = TwoSolve(variant, pc, roots, candidates, equilibria, rejected)
    if newton_check:
        starts = newton_starts(p, newton_grid) + random_starts(p, n_random, seed)
        nw = newton_equilibria(p, tol=tol, starts=starts)
        out.newton = [(e.omega_e, e.delta_e) for e in nw]
        out.agreement, out.flags = compare_routes(equilibria, nw)
    return out


def _unique(eqs, tol=1e-9):
    out = []
    for e in sorted(eqs, key=lambda e: (e.omega_e, e.delta_e)):
        if not any(abs(e.omega_e - o.omega_e) <= tol * max(1, e.omega_e)
                   and _delta_gap(e.delta_e, o.delta_e) <= 1e-7 for o in out):
            out.append(e)
    return out


def compare_routes(poly_eqs, newton_eqs, tol=1e-6):
    """Match two equilibrium sets in (omega, delta); returns (agree, flags)."""
    def close(a, b):
        return (abs(a.omega_e - b.omega_e) <= tol * max(1.0, abs(a.omega_e))
                and _delta_gap(a.delta_e, b.delta_e) <= tol)
    flags = []
    for a in poly_eqs:
        if not any(close(a, b) for b in newton_eqs):
            flags.append(f"polynomial route only: omega={a.omega_e:.10g}, delta={a.delta_e:.10g}")
    for b in newton_eqs:
        if not any(close(a, b) for a in poly_eqs):
            flags.append(f"Newton route only: omega={b.omega_e:.10g}, delta={b.delta_e:.10g}")
    return not flags, flags


# ---------------------------------------------------------------- Newton route

def _newton_system(p):
    """Scaled residual and Jacobian of the 8 steady-state equations in z = (w, delta, currents)."""
    s_m = max(p.T_m1, p.T_m2, p.D * p.omega_bound, 1e-300)
    s_e = max(p.b * p.omega_bound, 1e-300)
    scale = np.array([s_m, s_m] + [s_e] * 6)
    div = _divisors(p)[1:]

    def to_x(z):
        return np.concatenate([[z[1], z[0], z[0]], z[2:]])

    def F(z):
        rows = _row_terms(to_x(z), p)[1:]
        return np.array([sum(r) for r in rows]) / scale

    def Jz(z):
        A = jacobian_dq_two(to_x(z), p)[1:]
        A = A * div[:, None]
        cols = np.column_stack([A[:, 1] + A[:, 2], A[:, 0], A[:, 3:]])
        return cols / scale[:, None]

    return F, Jz, to_x


def newton_starts(p, grid=(12, 6)):
    """Deterministic start grid: omega in (0, T_s/2D], delta in (-pi/2, pi/2)."""
    nw, nd = grid
    ws = p.omega_bound * np.arange(1, nw + 1) / nw
    ds = -math.pi / 2 + math.pi * (np.arange(nd) + 0.5) / nd
    starts = []
    for w in ws:
        for d in ds:
            try:
                cur = solve_currents_linear(w, d, p)
            except ArithmeticError:
                continue
            starts.append(np.concatenate([[w, d], cur]))
    return starts


def random_starts(p, n, seed=0):
    """``n`` starts with omega uniform in (0, T_s/2D] and delta uniform in (-pi/2, pi/2)."""
    if n <= 0 or p.T_s == 0:
        return []
    rng = np.random.default_rng(seed)
    starts = []
    for w, d in zip(p.omega_bound * (1 - rng.random(n)), math.pi * (rng.random(n) - 0.5)):
        try:
            starts.append(np.concatenate([[w, d], solve_currents_linear(w, d, p)]))
        except ArithmeticError:
            continue
    return starts


def newton_equilibria(p, tol=1e-8, grid=(12, 6), starts=None):
    """Equilibria by damped Newton on the full 8-equation system from a start grid."""
    if p.b == 0:
        return _zero_excitation(p, tol)
    if p.T_s == 0:
        return []
    F, Jz, to_x = _newton_system(p)

    def canonical(z):
        d, cur = canonical_delta(z[1], z[2:])
        return np.concatenate([[z[0], d], cur])

    def accept(z):
        return z[0] > 0 and equilibrium_residual_two(to_x(z), p) <= tol

    def distance(a, b):
        return max(abs(a[0] - b[0]) / max(1.0, abs(a[0])), _delta_gap(a[1], b[1]))

    w_max = p.omega_bound

    def abort(z):
        # equilibria have 0 < omega <= T_s/(2D); a start that leaves that band is lost
        return not (0 < z[0] <= 1.5 * w_max)

    opts = NewtonOptions(tol=1e-13, max_iter=40, min_damping=2.0**-12, dedup_tol=1e-7)
    sols = newton_multistart(F, starts if starts is not None else newton_starts(p, grid),
                             jacobian=Jz, opts=opts, accept=accept, canonical=canonical,
                             distance=distance, abort=abort)
    out = []
    for z in sols:
        x = to_x(z)
        out.append(TwoEquilibrium(float(z[0]), float(z[1]), z[2:].copy(), True, True, z[0] > 0,
                                  equilibrium_residual_two(x, p)))
    return sorted(out, key=lambda e: (e.omega_e, e.delta_e))


def refine_equilibrium(eq, p, tol=1e-13):
    """A few Newton steps on the 8-equation system starting from ``eq``."""
    F, Jz, to_x = _newton_system(p)
    z0 = np.concatenate([[eq.omega_e, eq.delta_e], eq.currents])
    res = newton_solve(F, z0, Jz, NewtonOptions(tol=tol, max_iter=20))
    return res


# ---------------------------------------------------------------- stability

def jacobian_dq_two(x, p):
    """Analytic Jacobian of ``rhs_dq_two`` at an arbitrary state."""
    d, w1, w2, id1, iq1, id2, iq2, id3, iq3 = x
    w = 0.5 * (w1 + w2)
    s, c = math.sin(d), math.cos(d)
    b, R, L, RL, L3, D, J = p.b, p.R, p.L, p.R_L, p.L3, p.D, p.J
    A = np.zeros((9, 9))
    A[0, 1], A[0, 2] = -0.5, 0.5
    A[1, [0, 1, 3, 4]] = [b * (c * id1 + s * iq1) / J, -D / J, b * s / J, -b * c / J]
    A[2, [0, 2, 5, 6]] = [b * (-c * id2 + s * iq2) / J, -D / J, -b * s / J, -b * c / J]
    A[3, [0, 1, 2, 3, 4, 7]] = [-b * c * w1 / L, -b * s / L - iq1 / 2, -iq1 / 2, -R / L, -w, RL / L]
    A[4, [0, 1, 2, 3, 4, 8]] = [-b * s * w1 / L, b * c / L + id1 / 2, id1 / 2, w, -R / L, RL / L]
    A[5, [0, 1, 2, 5, 6, 7]] = [b * c * w2 / L, -iq2 / 2, b * s / L - iq2 / 2, -R / L, -w, -RL / L]
    A[6, [0, 1, 2, 5, 6, 8]] = [-b * s * w2 / L, id2 / 2, b * c / L + id2 / 2, w, -R / L, -RL / L]
    A[7, [1, 2, 3, 5, 7, 8]] = [-iq3 / 2, -iq3 / 2, RL / L3, -RL / L3, -2 * RL / L3, -w]
    A[8, [1, 2, 4, 6, 7, 8]] = [id3 / 2, id3 / 2, RL / L3, -RL / L3, w, -2 * RL / L3]
    return A


def fd_jacobian_two(x, p, step=1e-4, variant="derived"):
    """Central-difference Jacobian of ``rhs_dq_two``.

    The speed rows cancel torques of order ``T_m`` down to zero, so their
    rounding error is about ``eps T_m / h``; a relative step of 1e-4 keeps
    that below the O(h^2) truncation error.
    """
    x = np.asarray(x, dtype=float)
    Jn = np.zeros((9, 9))
    for k in range(9):
        h = step * max(1.0, abs(x[k]))
        e = np.zeros(9)
        e[k] = h
        Jn[:, k] = (rhs_dq_two(x + e, p, variant) - rhs_dq_two(x - e, p, variant)) / (2 * h)
    return Jn


class TwoVerdict(str, Enum):
    LOCALLY_STABLE = "LocallyStable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass
class TwoStabilityReport:
    A: np.ndarray
    B: np.ndarray
    eigenvalues: Spectrum = None
    verdict: TwoVerdict = None
    max_real: float = float("nan")

    @property
    def blocks(self):
        A = self.A
        return {"A_mm": A[:3, :3], "A_me": A[:3, 3:], "A_em": A[3:, :3], "A_ee": A[3:, 3:]}


def jacobian_two(eq, p):
    """Linearisation ``A``, ``B`` at an equilibrium; inputs ``u = (T_m1/J, T_m2/J)``."""
    A = jacobian_dq_two(eq.state(), p)
    B = np.zeros((9, 2))
    B[1, 0] = B[2, 1] = 1.0
    return TwoStabilityReport(A, B)


def eigen_stability_two(report, eps=1e-7):
    spec = eigenvalues(report.A)
    mx = spec.max_real
    if mx < -eps:
        v = TwoVerdict.LOCALLY_STABLE
    elif mx > eps:
        v = TwoVerdict.UNSTABLE
    else:
        v = TwoVerdict.MARGINAL
    report.eigenvalues, report.verdict, report.max_real = spec, v, mx
    return report


def analyze_two_equilibrium(eq, p, eps=1e-7):
    return eigen_stability_two(jacobian_two(eq, p), eps)
