"""Single synchronous generator feeding a series R-L load.

States: dq ``[theta, omega, i_d, i_q]``; abc ``[theta, omega, i_a, i_b, i_c]``.

Two published slips are corrected by default (``variant="derived"``) and
kept available as ``variant="printed"``:

* the omega coefficient of the equilibrium cubic is ``b^2 R + D R^2``;
  ``b^2 R^2 + D R^2`` only coincides with it when ``R = 1``;
* the omega-column of the linearisation is ``(-i_q, (b + L i_d)/L)``.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainError, InconsistencyError, SingularVelocityError
from .frames import back_emf, electrical_torque
from .numerics import Poly, Spectrum, eigenvalues, polynomial_roots

VARIANTS = ("derived", "printed")
MARGINAL = 1e-9
TINY = 1e-250


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


@dataclass(frozen=True)
class SingleMachineParams:
    """Aggregated machine + load parameters (R = R_s + R_l + R_L, L = L_s + L_l)."""

    J: float
    D: float
    T_m: float
    R: float
    L: float
    b: float

    def __post_init__(self):
        for name in ("J", "D", "T_m", "R", "L", "b"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number")
        for name in ("J", "D", "R", "L"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.b < 0:
            raise ConfigError("b must be non-negative")
        if self.T_m < 0:
            raise ConfigError("T_m must be non-negative")

    @classmethod
    def from_components(cls, J, D, T_m, b, R_s, R_l, R_L, L_s, L_l):
        for name, v in (("R_s", R_s), ("R_l", R_l), ("R_L", R_L), ("L_s", L_s), ("L_l", L_l)):
            if v < 0:
                raise ConfigError(f"{name} must be non-negative")
        return cls(J=J, D=D, T_m=T_m, R=R_s + R_l + R_L, L=L_s + L_l, b=b)


# ---------------------------------------------------------------- dynamics

def rhs_dq_single(x, p):
    _, w, i_d, i_q = x
    return np.array([
        w,
        (-p.D * w - p.b * i_q + p.T_m) / p.J,
        (-p.R * i_d - p.L * w * i_q) / p.L,
        (p.L * w * i_d - p.R * i_q + p.b * w) / p.L,
    ])


def rhs_abc_single(x, p):
    theta, w = x[0], x[1]
    i = np.asarray(x[2:5], dtype=float)
    if w == 0:
        raise SingularVelocityError("abc model needs omega != 0 (torque divides by omega)")
    e = back_emf(theta, w, p.b)
    T_e = electrical_torque(e, i, w)
    di = (-p.R * i + e) / p.L
    return np.concatenate([[w, (-p.D * w - T_e + p.T_m) / p.J], di])


# ---------------------------------------------------------------- equilibria

def equilibrium_cubic(p, variant="derived"):
    """Cubic in omega whose roots are the equilibrium speeds (ascending coefficients)."""
    _check_variant(variant)
    c1 = p.b**2 * p.R + p.D * p.R**2 if variant == "derived" else p.b**2 * p.R**2 + p.D * p.R**2
    labels = ["-T_m*R^2",
              "b^2*R + D*R^2" if variant == "derived" else "b^2*R^2 + D*R^2",
              "-T_m*L^2", "D*L^2"]
    return Poly([-p.T_m * p.R**2, c1, -p.T_m * p.L**2, p.D * p.L**2], labels=labels)


class CubicClass(str, Enum):
    ONE_REAL = "OneReal"
    REPEATED_REAL = "RepeatedReal"
    THREE_DISTINCT_REAL = "ThreeDistinctReal"


@dataclass
class CubicSolve:
    coeffs: np.ndarray
    p: float
    q: float
    shift: float
    discriminant: float
    cls: CubicClass
    roots: np.ndarray  # real roots, ascending, with multiplicity

    def depressed_roots(self):
        return self.roots - self.shift


def cubic_discriminant_closed_form(p):
    """Discriminant of the (corrected) depressed equilibrium cubic in terms of the parameters."""
    D, L, R, b, T = p.D, p.L, p.R, p.b, p.T_m
    num = (4 * T**4 * R**2 * L**4
           + T**2 * R**2 * L**2 * (8 * D**2 * R**2 - 20 * D * R * b**2 - b**4)
           + 4 * D * R**3 * (b**2 + D * R) ** 3)
    return num / (108 * D**4 * L**6)


def _repeated(delta, p, q):
    return abs(delta) <= 1e-10 * max(abs(p / 3) ** 3, (q / 2) ** 2)


def solve_cubic_cardano(c, polish_iters=2):
    """Real roots of a cubic by Cardano's formula.

    ``Delta = (q/2)^2 + (p/3)^3`` classifies the roots; ``|Delta|`` within
    ``1e-10 * max(|p/3|^3, (q/2)^2)`` counts as zero (repeated root). When
    ``Delta < 0`` the complex cube root gives all three real roots. Each root
    then gets ``polish_iters`` Newton steps on the original cubic.
    """
    if not isinstance(c, Poly):
        c = Poly(c)
    if c.degree != 3 or c.coeffs[3] <= 0:
        raise DomainError("solve_cubic_cardano needs a cubic with positive leading coefficient")
    c0, c1, c2, c3 = (float(v) for v in c.coeffs)
    shift = -c2 / (3 * c3)
    pp = c1 / c3 - c2**2 / (3 * c3**2)
    qq = 2 * c2**3 / (27 * c3**3) - c2 * c1 / (3 * c3**2) + c0 / c3
    delta = (qq / 2) ** 2 + (pp / 3) ** 3
    if _repeated(delta, pp, qq):
        cls = CubicClass.REPEATED_REAL
        u = float(np.cbrt(-qq / 2))
        ys = [2 * u, -u, -u]
    elif delta > 0:
        cls = CubicClass.ONE_REAL
        sd = math.sqrt(delta)
        ys = [float(np.cbrt(-qq / 2 + sd) + np.cbrt(-qq / 2 - sd))]
    else:
        cls = CubicClass.THREE_DISTINCT_REAL
        u = complex(-qq / 2, math.sqrt(-delta)) ** (1.0 / 3.0)
        rot = complex(-0.5, math.sqrt(3) / 2)
        ys = [2 * (u * rot**k).real for k in range(3)]
    dc = c.derivative()
    roots = []
    for y in ys:
        r = y + shift
        for _ in range(polish_iters):
            g = dc(r)
            if g == 0:
                break
            r_new = r - c(r) / g
            if abs(c(r_new)) >= abs(c(r)):
                break
            r = r_new
        roots.append(float(r))
    return CubicSolve(c.coeffs.copy(), float(pp), float(qq), float(shift), float(delta), cls, np.sort(roots))


def equilibrium_currents_single(omega_e, p):
    i_q = p.b * omega_e * p.R / (p.R**2 + p.L**2 * omega_e**2)
    i_d = -(p.L * omega_e / p.R) * i_q
    return i_d, i_q


def equilibrium_residual_single(omega, i_d, i_q, p):
    """Relative residual of the steady-state equations: max_row |sum| / sum |terms|."""
    rows = [
        (-p.D * omega, -p.b * i_q, p.T_m),
        (-p.R * i_d, -p.L * omega * i_q),
        (p.L * omega * i_d, -p.R * i_q, p.b * omega),
    ]
    worst = 0.0
    for terms in rows:
        scale = sum(abs(t) for t in terms)
        if scale > TINY:  # rows made of subnormal terms carry no relative precision
            worst = max(worst, abs(sum(terms)) / scale)
    return worst


@dataclass
class SingleEquilibrium:
    omega_e: float
    i_d_e: float
    i_q_e: float
    residual_norm: float

    def state(self, theta=0.0):
        return np.array([theta, self.omega_e, self.i_d_e, self.i_q_e])


@dataclass
class RejectedRoot:
    value: float
    reason: str


def classify_cubic_roots(p, variant="derived", tol=1e-9):
    """Split cubic roots into equilibria (omega > 0) and rejected roots."""
    cs = solve_cubic_cardano(equilibrium_cubic(p, variant))
    if variant == "derived":
        closed = cubic_discriminant_closed_form(p)
        scale = max(abs(cs.q) ** 2 / 4, abs(cs.p) ** 3 / 27, 1e-300)
        if abs(closed - cs.discriminant) > 1e-8 * scale:
            raise InconsistencyError(
                f"discriminant mismatch: p,q form {cs.discriminant!r} vs closed form {closed!r}")
    eqs, rejected = [], []
    for r in sorted(set(cs.roots.tolist())):
        if r <= 0:
            rejected.append(RejectedRoot(r, "non-positive speed"))
            continue
        i_d, i_q = equilibrium_currents_single(r, p)
        res = equilibrium_residual_single(r, i_d, i_q, p)
        if res > tol and variant == "printed":
            rejected.append(RejectedRoot(r, f"steady-state residual {res:.3e} exceeds {tol:.1e}"))
            continue
        if res > tol:
            raise InconsistencyError(f"equilibrium at omega={r!r} has residual {res:.3e} > {tol:.1e}")
        eqs.append(SingleEquilibrium(r, i_d, i_q, res))
    return cs, eqs, rejected


def solve_single_equilibria(p, variant="derived", tol=1e-9):
    """Equilibria for every positive real root of the cubic, ascending in omega."""
    return classify_cubic_roots(p, variant, tol)[1]


# ---------------------------------------------------------------- stability

@dataclass
class LyapunovReport:
    rhs_currents: float  # L^2 (i_q^2 + i_d^2) / (4R)
    rhs_omega: float  # (b^2 / 4R) L^2 w^2 / (R^2 + L^2 w^2)
    minors: tuple  # leading principal minors of Q
    minor_ok: tuple
    holds: bool


def lyapunov_q(eq, p):
    a = p.L * eq.i_q_e / 2
    c = p.L * eq.i_d_e / 2
    return np.array([[-p.D, -a, c], [-a, -p.R, 0.0], [c, 0.0, -p.R]])


def lyapunov_check(eq, p):
    """Negative semi-definiteness of Q via its leading principal minors."""
    w = eq.omega_e
    rhs_i = p.L**2 * (eq.i_q_e**2 + eq.i_d_e**2) / (4 * p.R)
    rhs_w = p.b**2 / (4 * p.R) * p.L**2 * w**2 / (p.R**2 + p.L**2 * w**2)
    if abs(rhs_i - rhs_w) > 1e-12 * max(1.0, rhs_w):
        raise InconsistencyError(f"Lyapunov bound forms disagree: {rhs_i!r} vs {rhs_w!r}")
    a = p.L * eq.i_q_e / 2
    c = p.L * eq.i_d_e / 2
    m1 = -p.D
    m2 = p.D * p.R - a**2
    m3 = p.R * (a**2 + c**2 - p.D * p.R)  # det Q
    ok = (m1 <= 0, m2 >= 0, m3 <= 0)
    holds = all(ok) and p.D >= rhs_w
    return LyapunovReport(rhs_i, rhs_w, (m1, m2, m3), ok, holds)


def linearize_single(eq, p, variant="derived"):
    """Jacobian of (omega, i_d, i_q) dynamics at an equilibrium."""
    _check_variant(variant)
    w, i_d, i_q = eq.omega_e, eq.i_d_e, eq.i_q_e
    if variant == "derived":
        a21, a31 = -i_q, (p.b + p.L * i_d) / p.L
    else:
        a21, a31 = -i_q / p.L, (p.b + i_d) / p.L
    return np.array([
        [-p.D / p.J, 0.0, -p.b / p.J],
        [a21, -p.R / p.L, -w],
        [a31, w, -p.R / p.L],
    ])


@dataclass
class RouthReport:
    a2: float
    a1: float
    a0: float
    conditions: tuple  # (a2 > 0, a1 > 0, a0 > 0, a2 a1 > a0)
    stable: bool


def routh_coefficients(omega, p):
    R, L, D, J, b, w = p.R, p.L, p.D, p.J, p.b, omega
    z = L**2 * w**2 + R**2
    a2 = 2 * R / L + D / J
    a1 = R**2 / L**2 + w**2 + 2 * R * D / (L * J) + b**2 * R**2 / (J * L * z)
    a0 = D * (R**2 + L**2 * w**2) / (J * L**2) + b**2 * R * (R**2 - L**2 * w**2) / (J * L**2 * z)
    return a2, a1, a0


def routh_hurwitz_single(eq, p, check=True):
    """Routh-Hurwitz test on the cubic characteristic polynomial.

    With ``check`` the verdict is compared against the eigenvalues of the
    derived linearisation; a definite disagreement raises.
    """
    a2, a1, a0 = routh_coefficients(eq.omega_e, p)
    cond = (a2 > 0, a1 > 0, a0 > 0, a2 * a1 > a0)
    rep = RouthReport(a2, a1, a0, cond, all(cond))
    if check:
        mx = eigenvalues(linearize_single(eq, p)).max_real
        if (rep.stable and mx > MARGINAL) or (not rep.stable and mx < -MARGINAL):
            raise InconsistencyError(
                f"Routh-Hurwitz verdict {rep.stable} contradicts max Re(lambda) = {mx:.3e}")
    return rep


class SingleClass(str, Enum):
    LYAPUNOV_STABLE = "LyapunovStable"
    LINEARLY_STABLE = "LinearlyStable"
    UNSTABLE = "Unstable"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class SingleStabilityReport:
    equilibrium: SingleEquilibrium
    lyapunov: LyapunovReport
    routh: RouthReport
    eigenvalues: Spectrum
    classification: SingleClass
    linearization_variant: str = "derived"
    notes: list = field(default_factory=list)


def analyze_single_equilibrium(eq, p, variant="derived"):
    lyap = lyapunov_check(eq, p)
    routh = routh_hurwitz_single(eq, p)
    spec = eigenvalues(linearize_single(eq, p, variant))
    mx = eigenvalues(linearize_single(eq, p)).max_real
    if lyap.holds:
        cls = SingleClass.LYAPUNOV_STABLE
    elif abs(mx) < MARGINAL:
        cls = SingleClass.INCONCLUSIVE
    elif routh.stable:
        cls = SingleClass.LINEARLY_STABLE
    else:
        cls = SingleClass.UNSTABLE
    return SingleStabilityReport(eq, lyap, routh, spec, cls, variant)


def analyze_single(p, variant="derived"):
    return [analyze_single_equilibrium(eq, p, variant) for eq in solve_single_equilibria(p)]


def polynomial_route_roots(p, variant="derived"):
    """Cubic roots by the companion-matrix solver (the cross-check route)."""
    return polynomial_roots(equilibrium_cubic(p, variant))
