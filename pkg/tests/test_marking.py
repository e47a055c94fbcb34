import pytest
from hypothesis import given, strategies as st

from dbnet.marking import Marking, render_token
from dbnet.relational import ContractError, DataType, make_value

INT = DataType("int", "int")


def tok(*ns):
    return tuple(make_value(INT, n) for n in ns)


tokens = st.lists(
    st.tuples(st.sampled_from(["p", "q"]), st.integers(0, 3).map(lambda n: tok(n))),
    max_size=8,
)


def test_from_tokens_counts_multiplicity():
    m = Marking.from_tokens([("p", tok(1)), ("p", tok(1)), ("q", tok(2))])
    assert m.count("p", tok(1)) == 2
    assert m.count("q", tok(2)) == 1
    assert m.count("q", tok(9)) == 0
    assert m.total("p") == 2
    assert m.size() == 3


def test_covers_is_multiset_inclusion():
    m = Marking.from_tokens([("p", tok(1)), ("p", tok(1))])
    assert m.covers([("p", tok(1))])
    assert m.covers([("p", tok(1)), ("p", tok(1))])
    assert not m.covers([("p", tok(1))] * 3)
    assert not m.covers([("q", tok(1))])


def test_minus_absent_token_raises():
    m = Marking.from_tokens([("p", tok(1))])
    with pytest.raises(ContractError):
        m.minus([("p", tok(2))])


def test_negative_multiplicity_rejected():
    with pytest.raises(ContractError):
        Marking({"p": {tok(1): -1}})


def test_zero_entries_are_dropped_for_equality():
    assert Marking({"p": {tok(1): 0}}) == Marking({})
    assert hash(Marking({"p": {}})) == hash(Marking({}))


def test_render_is_sorted_and_stable():
    m = Marking.from_tokens([("q", tok(2)), ("p", tok(3)), ("p", tok(1))])
    assert m.render() == "p{(1),(3)} q{(2)}"
    assert render_token(tok(1, 2)) == "(1,2)"


@given(tokens, tokens)
def test_plus_then_minus_is_identity(base, extra):
    m = Marking.from_tokens(base)
    assert m.plus(extra).minus(extra) == m


@given(tokens, tokens)
def test_covers_iff_minus_succeeds(base, want):
    m = Marking.from_tokens(base)
    if m.covers(want):
        m.minus(want)  # must not raise
    else:
        with pytest.raises(ContractError):
            m.minus(want)


@given(tokens, tokens)
def test_plus_is_commutative_in_content(a, b):
    assert Marking.from_tokens([]).plus(a).plus(b) == Marking.from_tokens([]).plus(b).plus(a)
