import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from smstab.errors import DomainError, InsufficientDataError, SingularVelocityError
from smstab.frames import (
    ExcitationParams,
    abc_to_dq,
    back_emf,
    dq_derivative_identity_check,
    dq_matrix,
    dq_to_abc,
    electrical_torque,
)

angles = st.floats(-1e3, 1e3, allow_nan=False)


@given(angles)
def test_rows_orthonormal(eta):
    U = dq_matrix(eta)
    assert U @ U.T == pytest.approx(np.eye(2), abs=1e-13)


@given(angles, st.floats(-50, 50), st.floats(0.1, 10))
def test_back_emf_maps_to_q_axis(theta, omega, b):
    e = back_emf(theta, omega, b)
    assert abc_to_dq(theta, e) == pytest.approx([0.0, b * omega], abs=1e-13 * max(1, abs(b * omega)))


def test_back_emf_in_other_frame():
    b, w, th, eta = 2.0, 3.0, 0.7, 0.2
    got = abc_to_dq(eta, back_emf(th, w, b))
    assert got == pytest.approx([b * w * math.sin(th - eta), b * w * math.cos(th - eta)], abs=1e-13)


def test_excitation_b():
    exc = ExcitationParams(M_f=2.0, i_f=1.5)
    assert exc.b == pytest.approx(math.sqrt(1.5) * 3.0)
    assert ExcitationParams.from_b(4.0).b == pytest.approx(4.0)
    assert back_emf(0.3, 2.0, exc) == pytest.approx(back_emf(0.3, 2.0, exc.b))


def test_zero_sequence_dropped():
    assert abc_to_dq(1.234, [1.0, 1.0, 1.0]) == pytest.approx([0.0, 0.0], abs=1e-15)


def test_round_trip_balanced():
    i_dq = np.array([0.3, -1.2])
    assert abc_to_dq(0.9, dq_to_abc(0.9, i_dq)) == pytest.approx(i_dq, abs=1e-15)


def test_torque_is_b_times_iq():
    b, w, th = 4.0, 1.7, 0.4
    i_dq = np.array([-0.8, 2.5])
    i_abc = dq_to_abc(th, i_dq)
    assert electrical_torque(back_emf(th, w, b), i_abc, w) == pytest.approx(b * i_dq[1], rel=1e-13)


def test_torque_singular():
    with pytest.raises(SingularVelocityError):
        electrical_torque(np.zeros(3), np.ones(3), 0.0)


def test_nonfinite_angle():
    with pytest.raises(DomainError):
        dq_matrix(float("nan"))
    with pytest.raises(DomainError):
        back_emf(float("inf"), 1.0, 1.0)


def _traj(h, n=41):
    t = np.arange(n) * h
    eta = 0.3 + 2.0 * t + 0.5 * t**2
    i_abc = np.column_stack([np.sin(3 * t + k) + 0.2 * t for k in range(3)])
    return eta, i_abc


def test_derivative_identity_second_order():
    hs = [0.02, 0.01, 0.005]
    errs = [dq_derivative_identity_check(*_traj(h), h) for h in hs]
    orders = [math.log2(errs[k] / errs[k + 1]) for k in range(2)]
    assert min(orders) >= 1.9


def test_derivative_identity_needs_samples():
    with pytest.raises(InsufficientDataError):
        dq_derivative_identity_check([0.0, 0.1], np.zeros((2, 3)), 0.1)
