import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unicp import su2
from unicp.errors import ResourceLimitError
from unicp.sequences import CATALOG, PhaseLaw, catalog_lookup, compose_sequence, phases_from_law
from unicp.series import (
    ChiPhases,
    HarmonicPolynomial,
    canonicalize,
    expand_u11,
    oracle_scaling,
    phi2_alpha_equivalence,
    search_phases,
    verify_universal,
    worst_infidelity,
)

TWO_PI = 2 * np.pi


def _rad(entry):
    return [np.pi * float(x) for x in entry.big_phi]


def _composite_u11(big_phi_pi, phi2_pi, eps, alpha):
    seq = phases_from_law(PhaseLaw(tuple(big_phi_pi), phi2_pi))
    return compose_sequence(seq, su2.propagator(eps, alpha, 0.0))[..., 0, 0]


# polynomial arithmetic ------------------------------------------------------


def test_sqrt_series_matches_function():
    s = HarmonicPolynomial.sqrt_one_minus_eps2(12)
    eps = np.array([0.01, 0.05, 0.1])
    assert np.allclose(s(eps, 0.0), np.sqrt(1 - eps**2), atol=1e-14)


@given(st.floats(0, 0.3), st.floats(0, TWO_PI))
@settings(max_examples=30)
def test_product_evaluates_pointwise(eps, at):
    J = 12
    a = HarmonicPolynomial.from_terms({(0, 1): 1.0, (1, -2): 0.5j, (2, 3): -0.25}, J)
    b = HarmonicPolynomial.sqrt_one_minus_eps2(J) + HarmonicPolynomial.epsilon(J).times_harmonic(2)
    exact = a(eps, at) * b(eps, at)
    assert (a * b)(eps, at) == pytest.approx(exact, abs=10 * eps ** (J + 1) + 1e-14)


def test_terms_and_coefficient_views():
    p = HarmonicPolynomial.from_terms({(1, 2): 3.0, (3, -1): 1j}, 5)
    assert p.terms() == {(1, 2): 3.0, (3, -1): 1j}
    assert p.coefficient(3) == {-1: 1j}
    assert (p - p).terms() == {}


def test_chi_round_trip():
    phi = (1.0, 2.5, 4.0)
    assert np.allclose(ChiPhases.from_big_phi(phi).to_big_phi(), phi)


# expansion -----------------------------------------------------------------


def test_three_pulse_first_order_single_harmonic():
    # Phi = pi: the first-order coefficient is a single harmonic of modulus one
    poly = expand_u11([np.pi], 3)
    c1 = poly.coefficient(1)
    assert len(c1) == 1
    assert abs(next(iter(c1.values()))) == pytest.approx(1.0, abs=1e-14)
    assert poly.max_over_alpha(1) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", ["U3", "U5", "U7"])
@given(eps=st.floats(0.001, 0.05), alpha=st.floats(0, TWO_PI), phi2=st.floats(0, 2))
@settings(max_examples=20, deadline=None)
def test_series_matches_composite_modulus(name, eps, alpha, phi2):
    entry = CATALOG[name]
    J = 15
    at = phi2 * np.pi - 2 * alpha
    series = expand_u11(_rad(entry), J)(eps, at)
    direct = _composite_u11(entry.big_phi, phi2, eps, alpha)
    assert abs(series) == pytest.approx(abs(direct), abs=2 * eps ** (J + 1) + 1e-14)


def test_truncation_cap():
    with pytest.raises(ResourceLimitError):
        expand_u11([np.pi], 33)


# universality --------------------------------------------------------------


@pytest.mark.parametrize("name", ["U5", "U7", "U13", "U25"])
def test_catalog_is_universal(name):
    entry = CATALOG[name]
    rep = verify_universal(_rad(entry), entry.j0)
    assert rep.passed
    assert rep.j0_achieved == entry.j0
    assert rep.minimized_first_order > 1e-3


def test_u3_floor():
    rep = verify_universal([np.pi], 0)
    assert rep.passed
    assert rep.leading_order == 1
    assert rep.minimized_first_order == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("big_phi, j0", [([0.0, 0.0, 0.0], 2), ([np.pi, np.pi, np.pi], 2), ([0.0], 0)])
def test_non_universal_fails(big_phi, j0):
    assert not verify_universal(big_phi, j0).passed


def test_overclaimed_order_fails():
    assert not verify_universal(_rad(CATALOG["U5"]), 3).passed


def test_report_text():
    text = verify_universal(_rad(CATALOG["U5"]), 2).to_text()
    assert "passed: yes" in text
    assert all(":" in line for line in text.splitlines())


# brute-force oracle ---------------------------------------------------------


@pytest.mark.parametrize("name, j0, lo, hi", [("U5", 2, 1e-3, 3e-2), ("U7", 2, 1e-3, 3e-2),
                                              ("U13", 4, 0.02, 0.1)])
def test_scaling_matches_nullified_order(name, j0, lo, hi):
    slope = oracle_scaling(catalog_lookup(name), np.geomspace(lo, hi, 8))
    assert slope == pytest.approx(2 * j0 + 2, abs=0.5)


def test_single_pulse_scaling():
    seq = catalog_lookup("single")
    assert oracle_scaling(seq, np.geomspace(1e-3, 0.1, 6)) == pytest.approx(2.0, abs=1e-9)
    assert np.allclose(worst_infidelity(seq, [0.1, 0.2]), [0.01, 0.04])


@pytest.mark.parametrize("name", ["U3", "U5", "U7"])
def test_phi2_alpha_equivalence(name):
    law = CATALOG[name].law(CATALOG[name].named_variants["a"])
    assert phi2_alpha_equivalence(law, samples=2000, rng_seed=3) < 1e-12


@given(st.floats(0.01, 0.3), st.floats(0, 2), st.floats(0, 2))
@settings(max_examples=30)
def test_worst_case_independent_of_phi2(eps, p1, p2):
    # rotating the profile never changes the worst case over alpha
    entry = CATALOG["U5"]
    s1 = phases_from_law(entry.law(p1))
    s2 = phases_from_law(entry.law(p2))
    w1 = worst_infidelity(s1, eps, alpha_points=4001)
    w2 = worst_infidelity(s2, eps, alpha_points=4001)
    assert w1 == pytest.approx(w2, rel=1e-3)


# search --------------------------------------------------------------------


def test_canonicalize_symmetries():
    x = np.array([2, 3, 2]) * np.pi / 3
    assert np.allclose(canonicalize(-x), canonicalize(x))
    y = np.array([1.0, 2.0, 4.0])
    assert np.allclose(canonicalize(y[::-1]), canonicalize(y))


def test_three_pulse_search_finds_pi():
    res = search_phases(3, 0, restarts=8, rng_seed=1)
    assert res.candidates
    assert res.candidates[0].big_phi[0] == pytest.approx(np.pi, abs=1e-6)


def test_search_is_worker_independent():
    a = search_phases(5, 2, anagram=True, restarts=8, rng_seed=11, workers=1)
    b = search_phases(5, 2, anagram=True, restarts=8, rng_seed=11, workers=2)
    assert [c.big_phi for c in a.candidates] == [c.big_phi for c in b.candidates]
    assert a.best_residual == b.best_residual


def test_impossible_target_yields_no_candidates():
    res = search_phases(5, 3, anagram=True, restarts=4, rng_seed=0)
    assert res.candidates == []
    assert res.best_residual > 1e-3


@pytest.mark.parametrize("n, j0", [(4, 0), (1, 0), (5, -1)])
def test_search_argument_validation(n, j0):
    with pytest.raises(ValueError):
        search_phases(n, j0, restarts=1)
