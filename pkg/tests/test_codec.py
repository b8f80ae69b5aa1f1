import pytest
from hypothesis import given, strategies as st

from alpham.codec import (Kind, MalformedCode, SchemeArityError, Token, canonical_form,
                          decode_scheme, decode_sequence, encode_scheme, encode_token,
                          encode_tokens)
from alpham.tape import BLANK, Move
from alpham.turing import TMScheme, addition_scheme, fig2_scheme

from oracles import CODE_STREAM, all_words, zero_runs


def test_symbol_and_state_codes():
    assert encode_token("external", 0) == "100001"
    assert encode_token("state", 0) == "1000001"
    assert [encode_token("move", m) for m in (Move.D, Move.G, Move.N)] == ["101", "1001", "10001"]


def test_three_token_example():
    toks = decode_sequence("1000000110011000001")
    assert [t.kind for t in toks] == [Kind.EXTERNAL, Kind.MOVE, Kind.STATE]
    assert [t.zeros for t in toks] == [6, 2, 5]


def test_empty_stream():
    assert decode_sequence("") == []


def test_bad_residue_offset():
    with pytest.raises(MalformedCode) as info:
        decode_sequence("10001001")
    assert info.value.offset == 5


def test_decoder_agrees_with_grammar_exhaustively():
    """Every bit string up to 14 bits decodes iff it is a run of 1 0+ 1 words."""
    for bits in all_words(14):
        ok = bool(CODE_STREAM.match(bits))
        try:
            toks = decode_sequence(bits)
        except MalformedCode:
            assert not ok, bits
            continue
        assert ok, bits
        assert [t.zeros for t in toks] == zero_runs(bits)
        assert encode_tokens(toks) == bits


def test_no_code_word_is_a_prefix_of_another():
    words = [Token.move(m).bits for m in Move]
    words += [Token.external(i).bits for i in range(5)] + [Token.state(j).bits for j in range(5)]
    for a in words:
        for b in words:
            if a != b:
                assert not b.startswith(a)


tokens = st.one_of(st.builds(Token.external, st.integers(0, 30)),
                   st.builds(Token.state, st.integers(0, 30)),
                   st.builds(Token.move, st.sampled_from(list(Move))))


@given(st.lists(tokens, max_size=30))
def test_token_list_round_trip(toks):
    assert decode_sequence(encode_tokens(toks)) == toks


def test_fig2_scheme_round_trip():
    for s in (fig2_scheme(), addition_scheme()):
        back = decode_scheme(encode_scheme(s))
        assert canonical_form(back) == canonical_form(s)


def test_empty_table_round_trip():
    s = TMScheme.build({"q0"}, {BLANK}, "q0", {})
    back = decode_scheme(encode_scheme(s))
    assert back.transitions == {} and canonical_form(back) == canonical_form(s)


def test_truncated_record_is_an_arity_error():
    bits = encode_scheme(fig2_scheme())
    last = decode_sequence(bits)[-1]
    with pytest.raises(SchemeArityError):
        decode_scheme(bits[:-len(last.bits)])
