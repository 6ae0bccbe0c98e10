import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from smstab.errors import ConfigError, DomainError
from smstab.single import (
    CubicClass,
    SingleClass,
    SingleMachineParams,
    analyze_single,
    classify_cubic_roots,
    cubic_discriminant_closed_form,
    equilibrium_cubic,
    equilibrium_residual_single,
    linearize_single,
    lyapunov_check,
    lyapunov_q,
    polynomial_route_roots,
    rhs_abc_single,
    rhs_dq_single,
    routh_coefficients,
    routh_hurwitz_single,
    solve_cubic_cardano,
    solve_single_equilibria,
)

SQ7 = math.sqrt(7.0)

pos = st.floats(0.05, 20.0)
params = st.builds(SingleMachineParams, J=pos, D=pos, T_m=st.floats(0.0, 50.0), R=pos, L=pos,
                   b=st.floats(0.0, 20.0))


def _fd(f, x, h=1e-6):
    J = np.empty((len(x), len(x)))
    for k in range(len(x)):
        e = np.zeros(len(x))
        e[k] = h
        J[:, k] = (f(x + e) - f(x - e)) / (2 * h)
    return J


def test_case1_cubic_is_integer(case1):
    assert equilibrium_cubic(case1).coeffs.tolist() == [-9.0, 17.0, -9.0, 1.0]


def test_case1_roots(case1):
    got = [e.omega_e for e in solve_single_equilibria(case1)]
    assert got == pytest.approx([1.0, 4 - SQ7, 4 + SQ7], abs=1e-12)


def test_case1_cubic_class(case1):
    cs, eqs, rejected = classify_cubic_roots(case1)
    assert cs.cls is CubicClass.THREE_DISTINCT_REAL
    assert cs.discriminant < 0
    assert cs.discriminant == pytest.approx(cubic_discriminant_closed_form(case1), rel=1e-12)
    assert rejected == []


def test_cardano_matches_numpy_and_companion_route(case1):
    ref = np.sort(np.roots(equilibrium_cubic(case1).coeffs[::-1]).real)
    assert solve_cubic_cardano(equilibrium_cubic(case1)).roots == pytest.approx(ref, abs=1e-12)
    comp = sorted(z.real for z in polynomial_route_roots(case1))
    assert comp == pytest.approx(ref, abs=1e-12)


def test_cardano_classes():
    assert solve_cubic_cardano([-1.0, 0.0, 0.0, 1.0]).cls is CubicClass.ONE_REAL  # x^3 - 1
    rep = solve_cubic_cardano([2.0, -3.0, 0.0, 1.0])  # (x-1)^2 (x+2)
    assert rep.cls is CubicClass.REPEATED_REAL
    assert rep.roots == pytest.approx([-2.0, 1.0, 1.0], abs=1e-7)
    assert solve_cubic_cardano([-6.0, 11.0, -6.0, 1.0]).roots == pytest.approx([1.0, 2.0, 3.0])


def test_cardano_domain():
    with pytest.raises(DomainError):
        solve_cubic_cardano([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        solve_cubic_cardano([1.0, 0.0, 0.0, -1.0])


@settings(max_examples=200, deadline=None)
@given(params)
def test_discriminant_closed_form_agrees(p):
    assume(p.b > 0 and p.T_m > 0)
    cs = solve_cubic_cardano(equilibrium_cubic(p))
    scale = max(cs.q**2 / 4, abs(cs.p) ** 3 / 27, 1e-300)
    assert abs(cs.discriminant - cubic_discriminant_closed_form(p)) <= 1e-8 * scale


@settings(max_examples=200, deadline=None)
@given(params)
def test_every_equilibrium_solves_steady_state(p):
    for e in solve_single_equilibria(p):
        assert e.omega_e > 0
        assert equilibrium_residual_single(e.omega_e, e.i_d_e, e.i_q_e, p) <= 1e-8
        assert np.max(np.abs(rhs_dq_single(e.state(), p)[1:])) <= 1e-8 * (1 + p.T_m + p.b * e.omega_e)


def test_printed_cubic_differs_when_r_not_one():
    p = SingleMachineParams(J=1, D=1, T_m=9, R=2, L=1, b=4)
    d = equilibrium_cubic(p, "derived").coeffs
    pr = equilibrium_cubic(p, "printed").coeffs
    assert d[1] == 16 * 2 + 4 and pr[1] == 16 * 4 + 4
    _, eqs, rejected = classify_cubic_roots(p, "printed")
    # printed-form roots do not zero the steady-state equations; they are rejected with a reason
    assert eqs == [] and all("residual" in r.reason for r in rejected if r.value > 0)


def test_zero_excitation():
    p = SingleMachineParams(J=1, D=2, T_m=5, R=1, L=1, b=0)
    eqs = solve_single_equilibria(p)
    assert [e.omega_e for e in eqs] == pytest.approx([2.5])
    assert eqs[0].i_d_e == 0 and eqs[0].i_q_e == 0


def test_linearization_matches_finite_differences(case1):
    for e in solve_single_equilibria(case1):
        fd = _fd(lambda y: rhs_dq_single(np.concatenate([[0.0], y]), case1)[1:],
                 np.array([e.omega_e, e.i_d_e, e.i_q_e]))
        assert linearize_single(e, case1) == pytest.approx(fd, abs=1e-7)


def test_routh_coefficients_case1(case1):
    assert routh_coefficients(1.0, case1) == (3.0, 12.0, 2.0)
    a2, a1, a0 = routh_coefficients(4 - SQ7, case1)
    assert a0 == pytest.approx(-1.8745078663875, rel=1e-10)


def test_routh_coefficients_equal_characteristic_polynomial(case1):
    for e in solve_single_equilibria(case1):
        ref = np.poly(np.linalg.eigvals(linearize_single(e, case1)))
        assert routh_coefficients(e.omega_e, case1) == pytest.approx(ref[1:].real, rel=1e-10)


def test_case1_verdicts(case1):
    eqs = solve_single_equilibria(case1)
    assert [routh_hurwitz_single(e, case1).stable for e in eqs] == [True, False, True]
    top = np.linalg.eigvals(linearize_single(eqs[0], case1)).real.max()
    assert top == pytest.approx(-0.17377913088675, abs=1e-10)


@pytest.mark.parametrize("J", [0.1, 1.0, 10.0])
def test_a0_sign_independent_of_inertia(J):
    p = SingleMachineParams(J=J, D=1, T_m=9, R=1, L=1, b=4)
    signs = [routh_coefficients(e.omega_e, p)[2] > 0 for e in solve_single_equilibria(p)]
    assert signs == [True, False, True]


def test_lyapunov_case1(case1):
    e = solve_single_equilibria(case1)[0]
    rep = lyapunov_check(e, case1)
    assert rep.rhs_omega == 2.0
    assert rep.rhs_currents == pytest.approx(2.0, rel=1e-14)
    assert not rep.holds


@settings(max_examples=100, deadline=None)
@given(params)
def test_lyapunov_minors_match_semidefiniteness(p):
    for e in solve_single_equilibria(p):
        rep = lyapunov_check(e, p)
        w = np.linalg.eigvalsh(lyapunov_q(e, p))
        tol = 1e-9 * np.max(np.abs(w))
        if all(rep.minor_ok) and min(abs(m) for m in rep.minors) > tol:
            assert w.max() <= tol
        if w.max() > tol:
            assert not all(rep.minor_ok)


def test_lyapunov_stable_example():
    p = SingleMachineParams(J=1, D=3, T_m=9, R=1, L=1, b=1)
    reports = analyze_single(p)
    assert reports and all(r.classification is SingleClass.LYAPUNOV_STABLE for r in reports)


def test_classification_case1(case1):
    cls = [r.classification for r in analyze_single(case1)]
    assert cls == [SingleClass.LINEARLY_STABLE, SingleClass.UNSTABLE, SingleClass.LINEARLY_STABLE]


def test_abc_model_consistent_with_dq(case1):
    from smstab.frames import dq_to_abc
    th, w = 0.7, 2.0
    i_dq = np.array([0.4, -0.3])
    x_abc = np.concatenate([[th, w], dq_to_abc(th, i_dq)])
    f_abc = rhs_abc_single(x_abc, case1)
    f_dq = rhs_dq_single(np.array([th, w, *i_dq]), case1)
    assert f_abc[:2] == pytest.approx(f_dq[:2], rel=1e-13)


def test_params_validation():
    with pytest.raises(ConfigError, match="L must be positive"):
        SingleMachineParams(J=1, D=1, T_m=9, R=1, L=-1, b=4)
    with pytest.raises(ConfigError):
        SingleMachineParams(J=1, D=1, T_m=9, R=1, L=1, b=float("nan"))
    p = SingleMachineParams.from_components(J=1, D=1, T_m=9, b=4, R_s=0.2, R_l=0.3, R_L=0.5,
                                            L_s=0.25, L_l=0.75)
    assert (p.R, p.L) == (1.0, 1.0)
    with pytest.raises(ConfigError, match="R_s"):
        SingleMachineParams.from_components(J=1, D=1, T_m=9, b=4, R_s=-1, R_l=1, R_L=1, L_s=1, L_l=1)
