import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from unicp import su2
from unicp.errors import DomainError

angles = st.floats(-10.0, 10.0, allow_nan=False)
eps_st = st.floats(0.0, 1.0, allow_nan=False)

SX = np.array([[0, 1], [1, 0]], complex)
SY = np.array([[0, -1j], [1j, 0]], complex)
SZ = np.diag([1.0 + 0j, -1.0])


@given(eps_st, angles, angles)
def test_propagator_is_special_unitary(eps, a, b):
    u = su2.propagator(eps, a, b)
    assert su2.is_unitary(u)
    assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-12)


@given(eps_st, angles, angles)
def test_transition_probability_is_one_minus_eps_squared(eps, a, b):
    u = su2.make_propagator(su2.PulseParams(eps, a, b))
    assert su2.transition_probability(u) == pytest.approx(1 - eps**2, abs=1e-12)


@given(st.floats(1e-6, 1.0), st.floats(-3.1, 3.1), st.floats(-3.1, 3.1), st.floats(0, 2 * np.pi))
def test_extract_params_round_trip_with_global_phase(eps, a, b, g):
    u = np.exp(1j * g) * su2.propagator(eps, a, b)
    p = su2.extract_params(u)
    assert p.epsilon == pytest.approx(eps, abs=1e-10)
    # sqrt(1 - eps^2) amplifies rounding in eps as eps -> 1
    tol = 1e-10 + 1e-15 / np.sqrt(max(1.0 - eps**2, 1e-30))
    assert su2.equal_up_to_phase(su2.make_propagator(p), u, tol=tol)


@pytest.mark.parametrize("g", [0.0, 1.0, 2.0, np.pi, 5.5])
@pytest.mark.parametrize("a", [0.0, 1.0, -2.5])
def test_extract_params_exact_at_zero_transfer(a, g):
    u = np.exp(1j * g) * su2.propagator(1.0, a, 0.0)
    p = su2.extract_params(u)
    assert p.epsilon == 1.0
    assert su2.equal_up_to_phase(su2.make_propagator(p), u, tol=1e-14)


@given(eps_st, angles, angles, angles)
def test_shift_phase_adds_to_beta(eps, a, b, phi):
    u = su2.propagator(eps, a, b)
    r = su2.phase_rotation(phi)
    assert np.allclose(su2.shift_phase(u, phi), su2.dagger(r) @ u @ r, atol=1e-12)
    assert np.allclose(su2.shift_phase(u, phi), su2.propagator(eps, a, b + phi), atol=1e-12)


@given(angles)
def test_phase_rotation_matches_matrix_exponential(phi):
    assert np.allclose(su2.phase_rotation(phi), expm(-0.5j * phi * SZ), atol=1e-12)


def test_resonant_pi_pulse_is_perfect_inversion():
    # x rotation by pi: exp(-i pi sx / 2) = -i sx
    u = expm(-0.5j * np.pi * SX)
    p = su2.extract_params(u)
    assert p.epsilon == pytest.approx(0.0, abs=1e-14)
    assert p.alpha == 0.0
    assert su2.transition_probability(u) == pytest.approx(1.0)


def test_identity_has_unit_epsilon():
    p = su2.extract_params(np.eye(2))
    assert p.epsilon == pytest.approx(1.0)
    assert p.transition_probability == pytest.approx(0.0)


@pytest.mark.parametrize("theta, axis", [(np.pi / 2, SX), (np.pi / 3, SY), (2.0, SX + SY)])
def test_extract_params_of_rotations(theta, axis):
    n = axis / np.sqrt(0.5 * np.trace(axis @ axis).real)
    u = expm(-0.5j * theta * n)
    assert su2.extract_params(u).epsilon == pytest.approx(abs(np.cos(theta / 2)), abs=1e-12)


def test_compose_order_last_pulse_leftmost():
    a = su2.propagator(0.3, 0.1, 0.2)
    b = su2.propagator(0.5, 1.0, -0.4)
    assert np.allclose(su2.compose([a, b]), b @ a)
    assert np.allclose(su2.compose([]), np.eye(2))


def test_apply_to_ground_state():
    u = su2.propagator(0.6, 0.0, 0.0)
    c = su2.apply(u, np.array([1.0, 0.0]))
    assert np.abs(c[1]) ** 2 == pytest.approx(1 - 0.36)


@pytest.mark.parametrize("eps", [-0.1, 1.5, np.nan])
def test_pulse_params_rejects_bad_epsilon(eps):
    with pytest.raises(DomainError):
        su2.PulseParams(eps)


def test_extract_params_rejects_non_unitary():
    with pytest.raises(ValueError):
        su2.extract_params(np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_equal_up_to_phase_detects_difference():
    u = su2.propagator(0.2, 0.3, 0.4)
    assert su2.equal_up_to_phase(1j * u, u)
    assert not su2.equal_up_to_phase(su2.propagator(0.2, 0.3, 0.5), u)


@settings(max_examples=50)
@given(st.lists(st.tuples(eps_st, angles, angles), min_size=1, max_size=6))
def test_products_stay_unitary(params):
    mats = [su2.propagator(*p) for p in params]
    assert su2.unitarity_defect(su2.compose(mats)) < 1e-12
