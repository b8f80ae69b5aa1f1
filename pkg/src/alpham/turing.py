"""Particular Turing machines: schemes, single steps, bounded runs.

A transition maps ``(state, symbol)`` to ``(write, move, next)``; ``next``
is ``None`` for the explicit halt marker written ``!`` in machine files.
Entering a state listed in ``finals`` also stops the run, which is how
decision machines (yes/no states) are expressed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from .tape import (BLANK, Boundedness, Discipline, Head, Move, MoveAction, Read, Tape,
                   Write, head_apply, parse_literal)

HALT = "!"


@dataclass(frozen=True)
class Transition:
    write: str
    move: Move
    next: Optional[str]  # None means halt

    @property
    def halts(self) -> bool:
        return self.next is None


@dataclass(frozen=True)
class TMScheme:
    states: FrozenSet[str]
    alphabet: FrozenSet[str]
    initial: str
    transitions: Mapping[Tuple[str, str], Transition]
    finals: FrozenSet[str] = frozenset()
    blank: str = BLANK

    @classmethod
    def build(cls, states, alphabet, initial, transitions, finals=(), blank=BLANK):
        table = {}
        for key, value in dict(transitions).items():
            if not isinstance(value, Transition):
                write, move, nxt = value
                value = Transition(write, Move(move) if isinstance(move, str) else move,
                                   None if nxt in (None, HALT) else nxt)
            table[tuple(key)] = value
        return cls(frozenset(states), frozenset(alphabet), initial, table,
                   frozenset(finals), blank)


def tm_validate(scheme: TMScheme) -> List[str]:
    """Return every violated well-formedness rule; empty when the scheme is valid."""
    problems = []
    if not scheme.states:
        problems.append("Q is empty")
    if not scheme.alphabet:
        problems.append("alphabet is empty")
    overlap = scheme.states & scheme.alphabet
    if overlap:
        problems.append(f"Q ∩ Σ ≠ ∅: {sorted(overlap)}")
    if scheme.blank not in scheme.alphabet:
        problems.append(f"blank {scheme.blank!r} not in alphabet")
    if scheme.initial not in scheme.states:
        problems.append(f"initial state unknown: {scheme.initial!r}")
    for f in sorted(scheme.finals - scheme.states):
        problems.append(f"final state unknown: {f!r}")
    for (state, sym), tr in sorted(scheme.transitions.items()):
        where = f"({state}, {sym})"
        if state not in scheme.states:
            problems.append(f"{where}: source state unknown")
        if sym not in scheme.alphabet:
            problems.append(f"{where}: read symbol outside alphabet")
        if tr.write not in scheme.alphabet:
            problems.append(f"{where}: written symbol {tr.write!r} outside alphabet")
        if tr.next is not None and tr.next not in scheme.states:
            problems.append(f"{where}: target state unknown: {tr.next!r}")
    return problems


@dataclass
class TMConfig:
    tape: Tape
    head: Head
    state: str
    step_count: int = 0

    @classmethod
    def start(cls, scheme: TMScheme, tape: Tape, position: int = 0) -> "TMConfig":
        head = Head(position, Discipline.READ_WRITE_BIDIRECTIONAL, may_stagnate=True)
        return cls(tape, head, scheme.initial)


@dataclass(frozen=True)
class TraceStep:
    state: str
    position: int
    read: str
    written: str
    move: Optional[str]  # None on the halting step
    next: Optional[str]

    def as_dict(self) -> dict:
        return {"state": self.state, "pos": self.position, "read": self.read,
                "write": self.written, "move": self.move, "next": self.next}


@dataclass(frozen=True)
class Next:
    config: TMConfig
    record: TraceStep


@dataclass(frozen=True)
class Halted:
    tape: Tape
    state: str
    record: Optional[TraceStep] = None


@dataclass(frozen=True)
class Stuck:
    state: str
    symbol: str
    position: int


@dataclass(frozen=True)
class OutOfFuel:
    tape: Tape
    state: str


@dataclass
class RunResult:
    outcome: Union[Halted, OutOfFuel, Stuck]
    trace: List[TraceStep] = field(default_factory=list)
    position: int = 0

    @property
    def halted(self) -> bool:
        return isinstance(self.outcome, Halted)


def tm_step(scheme: TMScheme, config: TMConfig):
    """Apply one transition in place; returns Next, Halted or Stuck."""
    if config.state in scheme.finals:
        return Halted(config.tape, config.state)
    pos = config.head.position
    sym, _, _ = head_apply(config.tape, config.head, Read())
    tr = scheme.transitions.get((config.state, sym))
    if tr is None:
        return Stuck(config.state, sym, pos)
    head_apply(config.tape, config.head, Write(tr.write), inplace=True)
    config.step_count += 1
    if tr.halts:
        rec = TraceStep(config.state, pos, sym, tr.write, None, None)
        return Halted(config.tape, config.state, rec)
    _, config.head, _ = head_apply(config.tape, config.head, MoveAction(tr.move))
    rec = TraceStep(config.state, pos, sym, tr.write, tr.move.value, tr.next)
    config.state = tr.next
    return Next(config, rec)


def tm_run(scheme: TMScheme, tape: Union[Tape, str], position: int = 0,
           max_steps: int = 10_000) -> RunResult:
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    if isinstance(tape, str):
        tape = Tape(parse_literal(tape, scheme.blank), Boundedness.UNBOUNDED, scheme.blank,
                    scheme.alphabet)
    else:
        tape = tape.copy()
    config = TMConfig.start(scheme, tape, position)
    trace: List[TraceStep] = []
    while True:
        if config.state in scheme.finals:
            return RunResult(Halted(config.tape, config.state), trace, config.head.position)
        if config.step_count >= max_steps:
            return RunResult(OutOfFuel(config.tape, config.state), trace, config.head.position)
        res = tm_step(scheme, config)
        if isinstance(res, Stuck):
            return RunResult(res, trace, config.head.position)
        trace.append(res.record)
        if isinstance(res, Halted):
            return RunResult(res, trace, config.head.position)


def replay_trace(initial: Tape, position: int, trace: List[TraceStep]) -> Tape:
    """Rebuild the final tape from a trace alone."""
    tape = initial.copy()
    pos = position
    for rec in trace:
        tape.write(pos, rec.written)
        if rec.move is not None:
            pos += Move(rec.move).delta
    return tape


# -- machine files ------------------------------------------------------------

class SchemeParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_ROW = re.compile(r"^\(\s*([^,\s]+)\s*,\s*(\S+?)\s*\)\s*->\s*\((.*)\)\s*$")


def _sym(tok: str, blank: str) -> str:
    return blank if tok in ("_", BLANK, "Λ") else tok


def parse_scheme(text: str) -> TMScheme:
    """Parse a machine file.

    Example::

        states: q0 q1 q2
        alphabet: Λ l *
        initial: q0
        finals:
        (q0, l) -> (Λ, D, q1)
        (q0, *) -> (Λ, !)
    """
    header: Dict[str, List[str]] = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        col = len(line) - len(line.lstrip()) + 1
        line = line.strip()
        if line.startswith("("):
            rows.append((lineno, col, line))
            continue
        key, sep, rest = line.partition(":")
        key = key.strip().lower()
        if not sep or key not in ("states", "alphabet", "initial", "finals", "blank"):
            raise SchemeParseError(f"unrecognised line {line!r}", lineno, col)
        header[key] = rest.replace(",", " ").split()
    for required in ("states", "alphabet", "initial"):
        if required not in header:
            raise SchemeParseError(f"missing '{required}:' header", 1)
    blank = header.get("blank", [BLANK])[0]
    alphabet = [_sym(s, blank) for s in header["alphabet"]]
    if len(header["initial"]) != 1:
        raise SchemeParseError("'initial:' takes exactly one state", 1)
    table = {}
    for lineno, col, line in rows:
        m = _ROW.match(line)
        if not m:
            raise SchemeParseError("expected '(state, read) -> (write, move, next)'", lineno, col)
        state, read = m.group(1), _sym(m.group(2), blank)
        parts = [p.strip() for p in m.group(3).split(",")]
        if len(parts) == 2 and parts[1] == HALT:
            tr = Transition(_sym(parts[0], blank), Move.N, None)
        elif len(parts) == 3:
            move = parts[1].upper()
            if move not in ("G", "D", "N"):
                raise SchemeParseError(f"bad move {parts[1]!r}", lineno, col + line.find(parts[1]))
            tr = Transition(_sym(parts[0], blank), Move(move), None if parts[2] == HALT else parts[2])
        else:
            raise SchemeParseError("transition needs (write, move, next) or (write, !)", lineno, col)
        if (state, read) in table:
            raise SchemeParseError(f"duplicate transition for ({state}, {read})", lineno, col)
        table[(state, read)] = tr
    return TMScheme(frozenset(header["states"]), frozenset(alphabet), header["initial"][0],
                    table, frozenset(header.get("finals", [])), blank)


def format_scheme(scheme: TMScheme) -> str:
    def sym(s):
        return BLANK if s == scheme.blank else s
    states = [scheme.initial] + sorted(scheme.states - {scheme.initial})
    alphabet = [scheme.blank] + sorted(scheme.alphabet - {scheme.blank})
    lines = [f"states: {' '.join(states)}", f"alphabet: {' '.join(map(sym, alphabet))}",
             f"initial: {scheme.initial}", f"finals: {' '.join(sorted(scheme.finals))}"]
    for (q, s), tr in sorted(scheme.transitions.items()):
        if tr.halts and tr.move is Move.N:
            lines.append(f"({q}, {sym(s)}) -> ({sym(tr.write)}, !)")
        else:
            lines.append(f"({q}, {sym(s)}) -> ({sym(tr.write)}, {tr.move.value}, {tr.next or HALT})")
    return "\n".join(lines) + "\n"


# -- fixtures -----------------------------------------------------------------

FIG2_TEXT = """\
# Unary addition table as printed (columns q0 q1 q2, rows Λ l *).
# Run on ll*lll it erases the first block and the star, leaving only the
# second block; see ADDITION_TEXT for a table that really adds.
states: q0 q1 q2
alphabet: Λ l *
initial: q0
finals:
(q0, l) -> (Λ, D, q1)
(q0, *) -> (Λ, !)
(q1, Λ) -> (Λ, G, q2)
(q1, l) -> (l, D, q1)
(q1, *) -> (*, D, q1)
(q2, Λ) -> (Λ, D, q0)
(q2, l) -> (l, G, q2)
(q2, *) -> (*, G, q2)
"""

ADDITION_TEXT = """\
# l^a * l^b -> l^(a+b): drop one leading l, turn the star into an l.
states: q0 q1
alphabet: Λ l *
initial: q0
finals:
(q0, l) -> (Λ, D, q1)
(q1, l) -> (l, D, q1)
(q1, *) -> (l, !)
"""


def fig2_scheme() -> TMScheme:
    return parse_scheme(FIG2_TEXT)


def addition_scheme() -> TMScheme:
    return parse_scheme(ADDITION_TEXT)
