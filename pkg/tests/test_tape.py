import itertools

import pytest
from hypothesis import given, strategies as st

from alpham.tape import (BLANK, BoundaryViolation, Boundedness, Discipline, DisciplineViolation,
                         Head, Move, MoveAction, Read, Write, binary_tape, head_apply, tape_new)


def test_empty_tape_reads_blank_everywhere():
    t = tape_new("", Boundedness.UNBOUNDED)
    assert all(t.read(i) == BLANK for i in range(-5, 6))


def test_stick_input_layout():
    t = tape_new("ll*lll", Boundedness.LEFT_BOUNDED, alphabet={BLANK, "l", "*"})
    assert [t.read(i) for i in range(7)] == list("ll*lll") + [BLANK]
    with pytest.raises(BoundaryViolation):
        head_apply(t, Head(0, Discipline.READ_WRITE_BIDIRECTIONAL), MoveAction(Move.G))


def test_blank_fill_beyond_window():
    t = binary_tape("101")
    assert t.read(0) == "1" and t.read(3) == BLANK


def test_read_has_no_side_effect():
    t = tape_new("l", alphabet={BLANK, "l"})
    head = Head(0, Discipline.READ_WRITE_BIDIRECTIONAL)
    seen, head2, t2 = head_apply(t, head, Read())
    assert seen == "l" and head2 == head and t2.snapshot() == t.snapshot()


def test_forward_only_head_cannot_go_left():
    t = binary_tape("01")
    head = Head(1, Discipline.READ_FORWARD_ONLY)
    with pytest.raises(DisciplineViolation):
        head_apply(t, head, MoveAction(Move.G))


def test_forward_only_head_cannot_stagnate():
    with pytest.raises(DisciplineViolation):
        head_apply(binary_tape(), Head(0, Discipline.READ_FORWARD_ONLY), MoveAction(Move.N))
    with pytest.raises(DisciplineViolation):
        Head(0, Discipline.WRITE_FORWARD_ONLY, may_stagnate=True)


def test_write_only_head_cannot_read_and_read_only_cannot_write():
    with pytest.raises(DisciplineViolation):
        head_apply(binary_tape(), Head(0, Discipline.WRITE_FORWARD_ONLY), Read())
    with pytest.raises(DisciplineViolation):
        head_apply(binary_tape(), Head(0, Discipline.READ_FORWARD_ONLY), Write("1"))


def test_write_then_read_same_cell():
    head = Head(0, Discipline.READ_WRITE_BIDIRECTIONAL)
    _, _, t = head_apply(binary_tape("0"), head, Write("1"))
    assert head_apply(t, head, Read())[0] == "1"


def test_write_copies_unless_inplace():
    t = binary_tape("00")
    head = Head(1, Discipline.READ_WRITE_BIDIRECTIONAL)
    _, _, t2 = head_apply(t, head, Write("1"))
    assert t.word() == "00" and t2.word() == "01"
    head_apply(t, head, Write("1"), inplace=True)
    assert t.word() == "01"


def test_symbols_outside_alphabet_are_rejected():
    with pytest.raises(Exception):
        binary_tape("012")


def test_frame_property_exhaustive_small_tapes():
    """A write changes exactly the addressed cell, for every tape of width <= 4."""
    for n in range(5):
        for cells in itertools.product("01" + BLANK, repeat=n):
            for pos in range(-1, n + 1):
                for sym in "01" + BLANK:
                    t = tape_new(list(cells), alphabet={"0", "1", BLANK})
                    before = {i: t.read(i) for i in range(-2, n + 2)}
                    _, _, t2 = head_apply(t, Head(pos, Discipline.WRITE_BIDIRECTIONAL), Write(sym))
                    for i in range(-2, n + 2):
                        assert t2.read(i) == (sym if i == pos else before[i])


actions = st.one_of(st.just(Read()), st.sampled_from([MoveAction(m) for m in Move]),
                    st.sampled_from([Write(s) for s in "01"]))


@given(st.lists(actions, max_size=40))
def test_forward_only_positions_rise_by_one(seq):
    t = binary_tape("0101", Boundedness.LEFT_BOUNDED)
    head = Head(0, Discipline.READ_FORWARD_ONLY)
    positions = [head.position]
    for a in seq:
        try:
            _, head, t = head_apply(t, head, a)
        except DisciplineViolation:
            continue
        if head.position != positions[-1]:
            positions.append(head.position)
    assert positions == list(range(len(positions)))


@given(st.lists(actions, max_size=30))
def test_head_apply_is_deterministic(seq):
    def run():
        t = binary_tape("0110")
        head = Head(0, Discipline.READ_WRITE_BIDIRECTIONAL, may_stagnate=True)
        seen = []
        for a in seq:
            s, head, t = head_apply(t, head, a)
            seen.append(s)
        return seen, head, t.snapshot()

    assert run() == run()
