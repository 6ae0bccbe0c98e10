import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve

from smstab.errors import NumericFailure, StiffnessError
from smstab.numerics import (
    IntegratorOptions,
    NewtonOptions,
    Poly,
    balance,
    dedupe,
    eigenvalues,
    hessenberg,
    integrate,
    lu_solve,
    newton_multistart,
    newton_solve,
    polynomial_roots,
    root_residual_ok,
)


def _match(a, b):
    """Max distance after greedy pairing of two complex multisets."""
    b = list(b)
    worst = 0.0
    for z in a:
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(k)))
    return worst


# ---------------------------------------------------------------- linear solve

def test_lu_solve_matches_numpy():
    rng = np.random.default_rng(1)
    for n in (1, 2, 5, 9):
        A = rng.normal(size=(n, n))
        b = rng.normal(size=n)
        assert lu_solve(A, b) == pytest.approx(np.linalg.solve(A, b), rel=1e-10, abs=1e-12)


def test_lu_solve_needs_pivoting():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert lu_solve(A, np.array([2.0, 3.0])) == pytest.approx([3.0, 2.0])


def test_lu_solve_singular():
    with pytest.raises(NumericFailure):
        lu_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))


# ---------------------------------------------------------------- eigenvalues

def test_eigenvalues_match_numpy_on_random_matrices():
    rng = np.random.default_rng(7)
    for n in range(1, 13):
        for _ in range(5):
            A = rng.normal(size=(n, n)) * 10.0 ** rng.uniform(-3, 3)
            got = eigenvalues(A).values
            ref = np.linalg.eigvals(A)
            scale = max(1.0, np.max(np.abs(ref)))
            assert _match(got, ref) <= 1e-9 * scale


def test_eigenvalues_sorted_descending_real():
    spec = eigenvalues(np.diag([-3.0, 2.0, 0.5]))
    assert [z.real for z in spec] == [2.0, 0.5, -3.0]
    assert spec.max_real == 2.0


def test_eigenvalues_complex_pair():
    spec = eigenvalues(np.array([[0.0, -2.0], [2.0, 0.0]]))
    assert sorted(z.imag for z in spec) == pytest.approx([-2.0, 2.0])
    assert spec.max_real == pytest.approx(0.0, abs=1e-15)


def test_hessenberg_is_similar_and_upper_hessenberg():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(7, 7))
    H = hessenberg(A)
    assert np.all(np.abs(np.tril(H, -2)) <= 1e-14 * np.max(np.abs(A)))
    assert _match(np.linalg.eigvals(H), np.linalg.eigvals(A)) < 1e-10
    B = balance(A)
    B = B[0] if isinstance(B, tuple) else B
    assert _match(np.linalg.eigvals(B), np.linalg.eigvals(A)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=9, max_size=9))
def test_eigenvalue_trace_and_count(entries):
    A = np.array(entries).reshape(3, 3)
    spec = eigenvalues(A)
    assert len(spec) == 3
    assert sum(spec.values).real == pytest.approx(np.trace(A), abs=1e-9 * (1 + np.abs(A).sum()))


# ---------------------------------------------------------------- polynomials

def test_poly_arithmetic():
    p = Poly([1.0, 2.0])  # 1 + 2x
    q = Poly([0.0, 1.0, 1.0])
    assert (p * q).coeffs.tolist() == [0.0, 1.0, 3.0, 2.0]
    assert (p + q).coeffs.tolist() == [1.0, 3.0, 1.0]
    assert (p**2)(3.0) == 49.0
    assert Poly([5.0, 0.0, 3.0]).derivative().coeffs.tolist() == [0.0, 6.0]
    assert Poly([0.0]).degree == -1


def test_polynomial_roots_from_roots():
    roots = [1.0, -2.0, 3.5, 0.25]
    got = polynomial_roots(Poly.from_roots(roots))
    assert sorted(z.real for z in got) == pytest.approx(sorted(roots), rel=1e-12)


def test_polynomial_roots_match_numpy():
    rng = np.random.default_rng(11)
    for deg in (2, 5, 10, 18):
        c = rng.normal(size=deg + 1)
        got = polynomial_roots(Poly(c)).values
        ref = np.roots(c[::-1])
        assert _match(got, ref) <= 1e-8 * max(1.0, np.max(np.abs(ref)))


def test_polynomial_roots_badly_scaled():
    # roots spread over 12 decades
    roots = [1e-6, 1e-3, 1.0, 1e3, 1e6]
    got = sorted(z.real for z in polynomial_roots(Poly.from_roots(roots)))
    for g, r in zip(got, roots):
        assert g == pytest.approx(r, rel=1e-9)


def test_root_residual_ok():
    p = Poly.from_roots([2.0, 3.0])
    assert root_residual_ok(p, 2.0)
    assert not root_residual_ok(p, 2.1)


# ---------------------------------------------------------------- integration

def test_rk45_exponential_decay():
    sol = integrate(lambda t, x: -x, [1.0], IntegratorOptions(t_end=5.0, rtol=1e-10, atol=1e-12))
    assert sol.x[-1, 0] == pytest.approx(math.exp(-5.0), rel=1e-8)
    assert sol.status == "t_end"
    assert np.all(np.diff(sol.t) > 0)


def test_rk45_matches_scipy_on_damped_pendulum():
    def f(t, x):
        return np.array([x[1], -0.3 * x[1] - 4.0 * math.sin(x[0])])
    t_eval = np.linspace(0, 10, 11)
    ours = integrate(f, [2.5, 0.0], IntegratorOptions(t_end=10, rtol=1e-10, atol=1e-12, t_eval=t_eval))
    ref = solve_ivp(f, (0, 10), [2.5, 0.0], t_eval=t_eval, rtol=1e-12, atol=1e-14, method="DOP853")
    assert ours.t.tolist() == t_eval.tolist()
    assert ours.x == pytest.approx(ref.y.T, abs=1e-7)


def test_rk4_is_fourth_order():
    errs = []
    for h in (0.1, 0.05):
        sol = integrate(lambda t, x: np.array([x[1], -x[0]]), [1.0, 0.0],
                        IntegratorOptions(method="rk4", t_end=2.0, h=h))
        errs.append(abs(sol.x[-1, 0] - math.cos(2.0)))
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.1)


def test_steady_state_detection():
    opts = IntegratorOptions(t_end=100.0, h_max=0.1, steady_tol=1e-8, steady_count=100)
    sol = integrate(lambda t, x: -(x - 3.0), [0.0], opts)
    assert sol.status == "steady"
    assert sol.t[-1] < 100.0
    assert sol.terminal_derivative_norm < 1e-8 * 4


def test_stiff_problem_raises_with_partial():
    opts = IntegratorOptions(t_end=1.0, h_min=1e-3, rtol=1e-10, atol=1e-12)
    with pytest.raises(StiffnessError) as exc:
        integrate(lambda t, x: -1e6 * (x - np.cos(t)), [0.0], opts)
    assert exc.value.partial is not None


def test_bad_options():
    with pytest.raises(ValueError):
        IntegratorOptions(method="euler")
    with pytest.raises(ValueError):
        IntegratorOptions(rtol=0.0)


# ---------------------------------------------------------------- Newton

def _circle_line(x):
    return np.array([x[0] ** 2 + x[1] ** 2 - 4.0, x[0] - x[1] ** 3 + 1.0])


def test_newton_matches_scipy_fsolve():
    res = newton_solve(_circle_line, [1.0, 1.0])
    ref = fsolve(_circle_line, [1.0, 1.0], xtol=1e-14)
    assert res.converged
    assert res.x == pytest.approx(ref, abs=1e-10)


def test_newton_reports_failure():
    # x^2 + 1 = 0 has no real root
    res = newton_solve(lambda x: np.array([x[0] ** 2 + 1.0]), [0.5], opts=NewtonOptions(max_iter=30))
    assert not res.converged


def test_newton_abort_hook():
    res = newton_solve(_circle_line, [1.0, 1.0], abort=lambda x: True)
    assert not res.converged and res.iterations == 1


def test_multistart_is_order_independent():
    starts = [np.array(s) for s in ([2.0, 2.0], [-2.0, -2.0], [1.0, 0.0], [0.0, -1.5], [-1, 1.5])]
    a = newton_multistart(_circle_line, starts)
    b = newton_multistart(_circle_line, starts[::-1])
    assert len(a) == len(b) >= 1
    for u, v in zip(a, b):
        assert u == pytest.approx(v, abs=1e-9)
        assert np.max(np.abs(_circle_line(u))) < 1e-10


def test_dedupe():
    pts = [np.array([1.0]), np.array([1.0 + 1e-9]), np.array([2.0])]
    assert len(dedupe(pts, tol=1e-6)) == 2
    assert dedupe([]) == []
