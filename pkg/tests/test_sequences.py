import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from unicp import su2
from unicp.errors import DomainError, UnknownSequenceError
from unicp.sequences import (
    CATALOG,
    CompositeSequence,
    PhaseLaw,
    catalog_lookup,
    compose_sequence,
    composite_propagator,
    format_pi,
    format_pi_tuple,
    from_degrees,
    parse_pi,
    parse_pi_tuple,
    parse_sequence_text,
    phases_from_law,
    read_sequence,
    reduce_mod2,
    reflect,
    reverse,
    write_sequence,
)

from conftest import REFERENCE_ROWS, REFERENCE_IDS, table_big_phi, table_phases

fractions = st.fractions(min_value=-4, max_value=4, max_denominator=24)


@pytest.mark.parametrize("row", REFERENCE_ROWS, ids=REFERENCE_IDS)
def test_table_rows_exact(row):
    law = PhaseLaw(table_big_phi(row), from_degrees(row[3]))
    assert phases_from_law(law).phases == table_phases(row)


@pytest.mark.parametrize("row", REFERENCE_ROWS, ids=REFERENCE_IDS)
def test_catalog_matches_table(row):
    seq = catalog_lookup(row[0], from_degrees(row[3]))
    assert seq.phases == table_phases(row)
    assert CATALOG[row[0]].big_phi == table_big_phi(row)


@pytest.mark.parametrize("name, label, deg", [
    ("U3", "a", 90), ("U3", "b", 0), ("U5", "a", 150), ("U5", "b", 330),
    ("U7", "a", 165), ("U7", "b", 345), ("U13", "a", "67.5"), ("U25", "b", 330),
])
def test_named_variants(name, label, deg):
    assert catalog_lookup(name, label) == catalog_lookup(name, from_degrees(deg))


def test_second_differences_recovered():
    seq = catalog_lookup("U13", "a")
    assert seq.big_phi == CATALOG["U13"].big_phi
    assert seq.law().phi2 == from_degrees("67.5")


@given(st.lists(fractions, min_size=1, max_size=9), fractions)
def test_law_round_trip(big_phi, phi2):
    law = PhaseLaw(tuple(big_phi), phi2)
    seq = phases_from_law(law)
    assert seq.phases[0] == 0
    back = seq.law()
    assert back.big_phi == tuple(reduce_mod2(x) for x in big_phi)
    assert back.phi2 == reduce_mod2(phi2)


@given(st.lists(fractions, min_size=1, max_size=7), fractions, fractions,
       st.floats(0, 1), st.floats(-3, 3), st.floats(-3, 3))
def test_global_phase_shift_leaves_transition_unchanged(big_phi, phi2, shift, eps, a, b):
    seq = phases_from_law(PhaseLaw(tuple(big_phi), phi2))
    p = su2.PulseParams(eps, a, b)
    u1 = composite_propagator(seq, p)
    u2 = composite_propagator(seq.shifted(shift), p)
    assert su2.transition_probability(u1) == pytest.approx(su2.transition_probability(u2), abs=1e-12)


@pytest.mark.parametrize("text, value", [
    ("2/3π", Fraction(2, 3)), ("π/2", Fraction(1, 2)), ("-π", Fraction(-1)),
    ("0.25pi", Fraction(1, 4)), ("π", Fraction(1)), ("0", Fraction(0)), ("5/6π", Fraction(5, 6)),
])
def test_parse_pi(text, value):
    assert parse_pi(text) == value


@given(fractions)
def test_format_parse_round_trip(x):
    assert parse_pi(format_pi(x)) == x


@pytest.mark.parametrize("bad", ["", "abc", "π π", "2/"])
def test_parse_pi_rejects_garbage(bad):
    with pytest.raises(ValueError):
        parse_pi(bad)


def test_tuple_formatting():
    assert format_pi_tuple(catalog_lookup("U5", "a").phases) == "(0,5,2,5,0)π/6"
    assert parse_pi_tuple("(2,3,2)π/3") == CATALOG["U5"].big_phi
    assert parse_pi_tuple("pi") == (Fraction(1),)


def test_degrees_exact():
    assert from_degrees(165) == Fraction(11, 12)
    assert from_degrees("67.5") == Fraction(3, 8)
    assert from_degrees(67.5) == Fraction(3, 8)


def test_anagram_flag():
    for entry in CATALOG.values():
        assert entry.law().is_anagram
    assert not PhaseLaw((Fraction(1), Fraction(1, 2), Fraction(0))).is_anagram


def test_reflection_negates_phases():
    seq = catalog_lookup("U3", from_degrees(45))
    assert reflect(seq).phases == tuple(reduce_mod2(-p) for p in seq.phases)
    assert reflect(seq).law().phi2 == from_degrees(315)


@pytest.mark.parametrize("name, deg", [("U3", 45), ("U5", 60), ("U7", 20)])
def test_reverse_equals_reflect_in_transition(name, deg):
    seq = catalog_lookup(name, from_degrees(deg))
    eps = np.linspace(0.05, 0.9, 7)
    alpha = np.linspace(0, 2 * np.pi, 11)
    u = su2.propagator(eps[:, None], alpha[None, :], 0.3)
    p_rev = su2.transition_probability(compose_sequence(reverse(seq), u))
    p_ref = su2.transition_probability(compose_sequence(reflect(seq), u))
    assert np.allclose(p_rev, p_ref, atol=1e-12)


def test_composite_beta_independence():
    seq = catalog_lookup("U7", "a")
    p1 = su2.transition_probability(composite_propagator(seq, su2.PulseParams(0.3, 0.7, 0.0)))
    p2 = su2.transition_probability(composite_propagator(seq, su2.PulseParams(0.3, 0.7, 2.1)))
    assert p1 == pytest.approx(p2, abs=1e-14)


def test_ideal_pulses_give_complete_inversion():
    for name in CATALOG:
        u = composite_propagator(catalog_lookup(name), su2.PulseParams(0.0))
        assert su2.transition_probability(u) == pytest.approx(1.0, abs=1e-12)


def test_single_sequence():
    seq = catalog_lookup("single")
    assert seq.n == 1 and seq.phases == (0,)


def test_unknown_name():
    with pytest.raises(UnknownSequenceError):
        catalog_lookup("U9")


def test_short_law_rejected():
    with pytest.raises(DomainError):
        PhaseLaw(())


@pytest.mark.parametrize("with_law", [True, False])
def test_sequence_file_round_trip(tmp_path, with_law):
    seq = catalog_lookup("U7", "a")
    path = tmp_path / "u7.seq"
    write_sequence(path, seq, seq.law() if with_law else None)
    back, law = read_sequence(path)
    assert back == seq
    assert (law is not None) == with_law


def test_sequence_file_regauges_with_warning():
    with pytest.warns(UserWarning):
        seq, _ = parse_sequence_text("n=3\nphases: π/2, π, π/2\n")
    assert seq.phases == (0, Fraction(1, 2), 0)


def test_sequence_file_accepts_comments():
    text = "# U5 a\nn=5\nlaw: phi2=5/6π; Phi=2/3π,π,2/3π  # comment\n"
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        seq, law = parse_sequence_text(text)
    assert seq == catalog_lookup("U5", "a")


@pytest.mark.parametrize("text", [
    "phases: 0,1\n",
    "n=3\nphases: 0,1\n",
    "n=5\nlaw: phi2=0; Phi=π\n",
    "n=3\nlaw: Phi=π\n",
    "n=3\nfoo: 1\n",
])
def test_sequence_file_errors(text):
    with pytest.raises(ValueError):
        parse_sequence_text(text)
