import pytest
from hypothesis import given, settings, strategies as st

from expmod.errors import DimensionError, LengthMismatchError
from expmod.words import E, M, SubstitutionWord, Word, apply_global, apply_local, reachability_witness, replay


def words(min_len=0, max_len=12):
    return st.lists(st.integers(0, 1), min_size=min_len, max_size=max_len).map(Word.from_symbols)


def test_local_substitutions():
    assert str(apply_local(E, 0)) == "00"
    assert str(apply_local(E, 1)) == "11"
    assert str(apply_local(M, 0)) == "1"
    assert str(apply_local(M, 1)) == "0"
    assert E.output_length == 2 and M.output_length == 1


def test_global_example():
    assert str(apply_global(SubstitutionWord("em"), Word.from_str("10"))) == "111"


def test_length_mismatch():
    with pytest.raises(LengthMismatchError):
        apply_global(SubstitutionWord("e"), Word.from_str("10"))


def test_word_validation():
    with pytest.raises(ValueError):
        Word.from_symbols([0, 2])
    with pytest.raises(ValueError):
        SubstitutionWord("ex")


@given(words(1, 10), st.data())
def test_output_length_counts_expansions(w, data):
    s = SubstitutionWord(data.draw(st.text("em", min_size=len(w), max_size=len(w))))
    out = apply_global(s, w)
    assert len(out) == len(w) + s.expansions()
    assert s.output_length(len(w)) == len(out)


@given(words(1, 10), st.data())
def test_flip_commutes_with_substitution(w, data):
    s = SubstitutionWord(data.draw(st.text("em", min_size=len(w), max_size=len(w))))
    assert apply_global(s, w.flip()) == apply_global(s, w).flip()


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 8).flatmap(lambda k: st.tuples(words(k, k), words(k, k))))
def test_reachability_witness_replays(pair):
    a, b = pair
    assert b.is_prefix_of(replay(reachability_witness(a, b), a))


def test_reachability_example():
    a, b = Word.from_str("10"), Word.from_str("01")
    assert b.is_prefix_of(replay(reachability_witness(a, b), a))


def test_reachability_rejects_mismatch():
    with pytest.raises(DimensionError):
        reachability_witness(Word.from_str("1"), Word.from_str("10"))
    with pytest.raises(DimensionError):
        reachability_witness(Word.from_str(""), Word.from_str(""))


@given(words(0, 16))
def test_string_round_trip(w):
    assert Word.from_str(str(w)) == w
    assert list(w) == [int(c) for c in str(w)]
