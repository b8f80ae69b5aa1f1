"""Tapes, heads and the access discipline each head is bound to.

A tape is a finite materialized window over a logically unbounded row of
cells; anything outside the window reads as blank.  Heads are small frozen
values; moving or using a head in a way its discipline forbids raises
instead of silently doing nothing, because the forward-only heads are how
the machines model irreversible time.

Tape literal grammar (used by spec files and the CLI)::

    literal := symbol*
    symbol  := any single character; 'Λ' or '_' denote the blank

"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence, Tuple, Union

BLANK = "Λ"
BINARY = frozenset({"0", "1", BLANK})


class TapeError(Exception):
    pass


class AlphabetError(TapeError):
    pass


class DisciplineViolation(TapeError):
    pass


class BoundaryViolation(TapeError):
    pass


class Boundedness(enum.Enum):
    LEFT_BOUNDED = "left-bounded"     # cells >= 0, infinite to the right
    RIGHT_BOUNDED = "right-bounded"   # cells <= right end, infinite to the left
    UNBOUNDED = "unbounded"


class Discipline(enum.Enum):
    READ_FORWARD_ONLY = "read-forward-only"
    WRITE_FORWARD_ONLY = "write-forward-only"
    READ_WRITE_BIDIRECTIONAL = "read-write-bidirectional"
    WRITE_BIDIRECTIONAL = "write-bidirectional"

    @property
    def can_read(self) -> bool:
        return self in (Discipline.READ_FORWARD_ONLY, Discipline.READ_WRITE_BIDIRECTIONAL)

    @property
    def can_write(self) -> bool:
        return self is not Discipline.READ_FORWARD_ONLY

    @property
    def forward_only(self) -> bool:
        return self in (Discipline.READ_FORWARD_ONLY, Discipline.WRITE_FORWARD_ONLY)


class Move(enum.Enum):
    G = "G"  # one cell left
    D = "D"  # one cell right
    N = "N"  # stay

    @property
    def delta(self) -> int:
        return {"G": -1, "D": 1, "N": 0}[self.value]


def parse_literal(text: str, blank: str = BLANK) -> list:
    return [blank if ch in ("_", BLANK) else ch for ch in text]


class Tape:
    """Mutable tape: a list of cells plus the index of cell 0 inside it."""

    __slots__ = ("cells", "offset", "blank", "alphabet", "boundedness", "right_end",
                 "context_cursor")

    def __init__(self, cells: Sequence[str] = (), boundedness: Boundedness = Boundedness.UNBOUNDED,
                 blank: str = BLANK, alphabet: Optional[Iterable[str]] = None,
                 right_end: Optional[int] = None):
        cells = list(cells)
        if alphabet is None:
            alphabet = set(cells) | {blank}
        alphabet = frozenset(alphabet)
        if blank not in alphabet:
            raise AlphabetError(f"blank {blank!r} missing from alphabet")
        for i, sym in enumerate(cells):
            if sym not in alphabet:
                raise AlphabetError(f"symbol {sym!r} at cell {i} is outside the alphabet")
        self.cells = cells
        self.offset = 0
        self.blank = blank
        self.alphabet = alphabet
        self.boundedness = boundedness
        if boundedness is Boundedness.RIGHT_BOUNDED and right_end is None:
            right_end = max(len(cells) - 1, 0)
        self.right_end = right_end
        # next free cell of the context region (negative indices)
        self.context_cursor = -1

    # -- window ---------------------------------------------------------
    @property
    def lo(self) -> int:
        return -self.offset

    @property
    def hi(self) -> int:
        """One past the last materialized cell."""
        return len(self.cells) - self.offset

    def __len__(self) -> int:
        return len(self.cells)

    def check_position(self, pos: int) -> None:
        if self.boundedness is Boundedness.LEFT_BOUNDED and pos < 0:
            raise BoundaryViolation(f"position {pos} left of a left-bounded tape")
        if self.boundedness is Boundedness.RIGHT_BOUNDED and pos > self.right_end:
            raise BoundaryViolation(f"position {pos} right of a right-bounded tape")

    def read(self, pos: int) -> str:
        i = pos + self.offset
        if 0 <= i < len(self.cells):
            return self.cells[i]
        return self.blank

    def write(self, pos: int, sym: str) -> None:
        if sym not in self.alphabet:
            raise AlphabetError(f"symbol {sym!r} is outside the alphabet")
        self.check_position(pos)
        i = pos + self.offset
        if i < 0:
            self.cells[:0] = [self.blank] * (-i)
            self.offset -= i
            i = 0
        elif i >= len(self.cells):
            self.cells.extend([self.blank] * (i - len(self.cells) + 1))
        self.cells[i] = sym

    # -- word view, used by the edit-distance machinery --------------------
    def word(self) -> str:
        return "".join(self.cells)

    def trimmed(self) -> str:
        return self.word().strip(self.blank) if len(self.blank) == 1 else self.word()

    def insert(self, index: int, sym: str) -> None:
        """Insert at a window index, shifting the cells after it right."""
        if sym not in self.alphabet:
            raise AlphabetError(f"symbol {sym!r} is outside the alphabet")
        self.cells.insert(index, sym)

    def delete(self, index: int) -> str:
        return self.cells.pop(index)

    def substitute(self, index: int, sym: str) -> None:
        if sym not in self.alphabet:
            raise AlphabetError(f"symbol {sym!r} is outside the alphabet")
        self.cells[index] = sym

    def append_context(self, bits: Iterable[str]) -> list:
        """Write bits into the context region at -1, -2, ...; returns touched cells."""
        touched = []
        for b in bits:
            pos = self.context_cursor
            self.write(pos, b)
            touched.append((pos, b))
            self.context_cursor -= 1
        return touched

    def copy(self) -> "Tape":
        t = Tape.__new__(Tape)
        t.cells = list(self.cells)
        t.offset = self.offset
        t.blank = self.blank
        t.alphabet = self.alphabet
        t.boundedness = self.boundedness
        t.right_end = self.right_end
        t.context_cursor = self.context_cursor
        return t

    def snapshot(self) -> Tuple[int, Tuple[str, ...]]:
        return (self.lo, tuple(self.cells))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tape):
            return NotImplemented
        return self.content() == other.content()

    def content(self) -> dict:
        """Non-blank cells as {position: symbol}; equality ignores padding."""
        return {i - self.offset: s for i, s in enumerate(self.cells) if s != self.blank}

    def __repr__(self) -> str:
        return f"Tape({self.word()!r}, lo={self.lo})"


def tape_new(window: Union[str, Sequence[str]] = "",
             boundedness: Boundedness = Boundedness.UNBOUNDED,
             blank: str = BLANK, alphabet: Optional[Iterable[str]] = None) -> Tape:
    if isinstance(window, str):
        window = parse_literal(window, blank)
    return Tape(window, boundedness, blank, alphabet)


def binary_tape(bits: str = "", boundedness: Boundedness = Boundedness.UNBOUNDED) -> Tape:
    return tape_new(bits, boundedness, BLANK, BINARY)


@dataclass(frozen=True)
class Head:
    position: int
    discipline: Discipline
    may_stagnate: bool = False

    def __post_init__(self):
        if self.discipline.forward_only and self.may_stagnate:
            raise DisciplineViolation("forward-only heads cannot stagnate")


@dataclass(frozen=True)
class Read:
    pass


@dataclass(frozen=True)
class Write:
    symbol: str


@dataclass(frozen=True)
class MoveAction:
    move: Move


Action = Union[Read, Write, MoveAction]


def check_move(head: Head, move: Move) -> None:
    if move is Move.N and not head.may_stagnate:
        raise DisciplineViolation(f"{head.discipline.value} head may not stagnate")
    if move is Move.G and head.discipline.forward_only:
        raise DisciplineViolation(f"{head.discipline.value} head cannot move left")


def head_apply(tape: Tape, head: Head, action: Action, inplace: bool = False):
    """Apply one action; returns (observed symbol or None, new head, tape).

    Unless ``inplace`` is set, a write leaves the given tape untouched and
    returns a modified copy.
    """
    if isinstance(action, Read):
        if not head.discipline.can_read:
            raise DisciplineViolation(f"{head.discipline.value} head cannot read")
        tape.check_position(head.position)
        return tape.read(head.position), head, tape
    if isinstance(action, Write):
        if not head.discipline.can_write:
            raise DisciplineViolation(f"{head.discipline.value} head cannot write")
        out = tape if inplace else tape.copy()
        out.write(head.position, action.symbol)
        return None, head, out
    if isinstance(action, MoveAction):
        check_move(head, action.move)
        pos = head.position + action.move.delta
        tape.check_position(pos)
        return None, replace(head, position=pos), tape
    raise TypeError(f"unknown action {action!r}")
