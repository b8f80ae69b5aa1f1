import pytest
from hypothesis import given, settings, strategies as st

from alpham.tape import BLANK, Move, tape_new
from alpham.turing import (Halted, OutOfFuel, SchemeParseError, Stuck, TMConfig, TMScheme,
                           Transition, addition_scheme, fig2_scheme, format_scheme, parse_scheme,
                           replay_trace, tm_run, tm_step, tm_validate)

from oracles import FIG2_HAND_FINAL, FIG2_HAND_TRACE


def test_fig2_is_valid():
    assert tm_validate(fig2_scheme()) == []


def test_unknown_initial_state_reported():
    s = TMScheme.build({"q0"}, {BLANK, "l"}, "q9", {})
    assert any("initial state unknown" in p for p in tm_validate(s))


def test_state_symbol_overlap_reported():
    s = TMScheme.build({"q0", "l"}, {BLANK, "l"}, "q0", {})
    assert any("Q ∩ Σ" in p for p in tm_validate(s))


def _config(scheme, word, pos=0):
    tape = tape_new(word, alphabet=scheme.alphabet)
    return TMConfig.start(scheme, tape, pos)


def test_first_step_of_fig2():
    res = tm_step(fig2_scheme(), _config(fig2_scheme(), "l"))
    rec = res.record
    assert (rec.written, rec.move, rec.next) == (BLANK, "D", "q1")
    assert res.config.tape.read(0) == BLANK and res.config.head.position == 1


def test_star_in_q0_halts():
    assert isinstance(tm_step(fig2_scheme(), _config(fig2_scheme(), "*")), Halted)


def test_missing_entry_is_stuck():
    res = tm_step(fig2_scheme(), _config(fig2_scheme(), ""))
    assert isinstance(res, Stuck) and res.symbol == BLANK


def test_fig2_matches_hand_trace():
    res = tm_run(fig2_scheme(), "ll*lll", 0)
    assert res.halted
    got = [(r.state, r.position, r.read, r.written, r.move, r.next) for r in res.trace]
    assert got == FIG2_HAND_TRACE
    assert res.outcome.tape.trimmed() == FIG2_HAND_FINAL


def test_empty_table_is_stuck_at_step_zero():
    s = TMScheme.build({"q0"}, {BLANK, "l"}, "q0", {})
    res = tm_run(s, "ll")
    assert isinstance(res.outcome, Stuck) and res.trace == []


def test_zero_fuel():
    res = tm_run(fig2_scheme(), "ll*lll", max_steps=0)
    assert isinstance(res.outcome, OutOfFuel) and res.trace == []


def test_addition_for_all_small_pairs():
    s = addition_scheme()
    for a in range(1, 21):
        for b in range(1, 21):
            res = tm_run(s, "l" * a + "*" + "l" * b)
            assert res.halted and res.outcome.tape.trimmed() == "l" * (a + b), (a, b)


def test_final_state_stops_run():
    s = TMScheme.build({"q0", "qy"}, {BLANK, "l"}, "q0",
                       {("q0", "l"): Transition("l", Move.D, "qy")}, finals={"qy"})
    res = tm_run(s, "ll")
    assert res.halted and res.outcome.state == "qy" and len(res.trace) == 1


words = st.text(alphabet="l*", max_size=10)


@given(words, st.integers(0, 3))
def test_trace_replay_reproduces_final_tape(word, pos):
    s = fig2_scheme()
    res = tm_run(s, word, pos, max_steps=300)
    start = tape_new(word, alphabet=s.alphabet)
    final = res.outcome.tape if not isinstance(res.outcome, Stuck) else None
    if final is not None:
        assert replay_trace(start, pos, res.trace).trimmed() == final.trimmed()


@given(words, st.integers(0, 3))
def test_runs_are_deterministic(word, pos):
    a = tm_run(fig2_scheme(), word, pos, max_steps=200)
    b = tm_run(fig2_scheme(), word, pos, max_steps=200)
    assert a.trace == b.trace and type(a.outcome) is type(b.outcome)


@settings(max_examples=50)
@given(words, st.integers(0, 200))
def test_more_fuel_does_not_change_a_halting_run(word, extra):
    s = fig2_scheme()
    base = tm_run(s, word, max_steps=1000)
    if base.halted:
        more = tm_run(s, word, max_steps=len(base.trace) + extra)
        assert more.trace == base.trace
        assert more.outcome.tape.trimmed() == base.outcome.tape.trimmed()


def test_parse_error_carries_position():
    with pytest.raises(SchemeParseError) as info:
        parse_scheme("states: q0\nalphabet: Λ l\ninitial: q0\n(q0, l) -> (l, X, q0)\n")
    assert info.value.line == 4 and info.value.column > 1


def test_parse_rejects_unknown_header():
    with pytest.raises(SchemeParseError) as info:
        parse_scheme("states: q0\nbogus line\n")
    assert info.value.line == 2


def test_format_then_parse_round_trip():
    for s in (fig2_scheme(), addition_scheme()):
        assert parse_scheme(format_scheme(s)) == s
