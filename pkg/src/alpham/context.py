"""Random context events, the edit distance they are measured with, and
nondeterministic machines.

A :class:`ProbabilitySpace` is a finite list of event templates with their
probabilities plus the mass of "nothing happens".  A drawn event is one
elementary edit (substitute, insert, delete) of some machine's work tape.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import (TYPE_CHECKING, Dict, FrozenSet, Iterable, List, Mapping, Optional,
                    Sequence, Set, Tuple, Union)

import numpy as np

from .tape import BLANK, Tape
from .turing import Transition

if TYPE_CHECKING:  # pragma: no cover
    from .network import Network

UNIFORM = "uniform"
ANY = "any"
TOLERANCE = 1e-12


class SpaceError(ValueError):
    pass


class EditKind(enum.Enum):
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True)
class EditOp:
    kind: EditKind
    position: Union[int, str] = UNIFORM
    bit: Optional[str] = None  # None: complement (substitute) / random (insert)

    def __post_init__(self):
        if self.kind is EditKind.DELETE and self.bit is not None:
            raise ValueError("delete takes no bit")
        if self.bit not in (None, "0", "1"):
            raise ValueError(f"bit must be '0' or '1', got {self.bit!r}")
        if not isinstance(self.position, int) and self.position != UNIFORM:
            raise ValueError(f"position must be an int or {UNIFORM!r}")

    def as_dict(self) -> dict:
        d = {"kind": self.kind.value, "position": self.position}
        if self.bit is not None:
            d["bit"] = self.bit
        return d


@dataclass(frozen=True)
class ContextEvent:
    omega: str
    target: str
    edit: EditOp

    def as_dict(self) -> dict:
        return {"omega": self.omega, "target": self.target, **self.edit.as_dict()}


@dataclass(frozen=True)
class ProbabilitySpace:
    events: Tuple[Tuple[ContextEvent, float], ...]
    none: float

    def __post_init__(self):
        for ev, p in self.events:
            if not (0.0 <= p <= 1.0):
                raise SpaceError(f"probability of {ev.omega} outside [0, 1]: {p}")
        if not (0.0 <= self.none <= 1.0):
            raise SpaceError(f"no-event probability outside [0, 1]: {self.none}")
        total = math.fsum([p for _, p in self.events] + [self.none])
        if abs(total - 1.0) > TOLERANCE:
            raise SpaceError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def build(cls, events: Iterable[Tuple[ContextEvent, float]], none: Optional[float] = None):
        """Build a space; ``none`` defaults to whatever mass the events leave."""
        events = tuple(events)
        if none is None:
            none = 1.0 - math.fsum(p for _, p in events)
            if abs(none) <= TOLERANCE:
                none = 0.0
        return cls(events, none)

    @classmethod
    def empty(cls) -> "ProbabilitySpace":
        return cls((), 1.0)

    @classmethod
    def from_spec(cls, items: Sequence[Mapping]) -> "ProbabilitySpace":
        """Entries ``{"kind", "probability", "target"?, "position"?, "bit"?}``; kind "none" sets the idle mass."""
        events, none = [], None
        for i, item in enumerate(items):
            kind = item["kind"].lower()
            p = float(item["probability"])
            if kind == "none":
                none = p
                continue
            edit = EditOp(EditKind(kind), item.get("position", UNIFORM), item.get("bit"))
            events.append((ContextEvent(item.get("omega", f"w{i}"), str(item.get("target", ANY)),
                                        edit), p))
        if none is None:
            return cls.build(events)
        return cls(tuple(events), none)

    def to_spec(self) -> list:
        out = [{"omega": ev.omega, "target": ev.target, "probability": p, **ev.edit.as_dict()}
               for ev, p in self.events]
        out.append({"kind": "none", "probability": self.none})
        return out


def make_rng(seed: int) -> np.random.Generator:
    """All randomness: numpy PCG64 seeded with the run's 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))


def sample_event(space: ProbabilitySpace, rng: np.random.Generator) -> Optional[ContextEvent]:
    u = rng.random()
    acc = 0.0
    for ev, p in space.events:
        acc += p
        if u < acc:
            return ev
    return None


# -- applying edits ----------------------------------------------------------------

@dataclass(frozen=True)
class AppliedEdit:
    event: ContextEvent       # with concrete position and bit
    clamped: bool = False
    noop: bool = False


def resolve_edit(edit: EditOp, cells: Sequence[str],
                 rng: Optional[np.random.Generator] = None) -> Tuple[EditOp, bool, bool]:
    """Concrete (edit, clamped, noop) for the given word."""
    n = len(cells)
    limit = n if edit.kind is EditKind.INSERT else n - 1
    pos = edit.position
    if pos == UNIFORM:
        pos = int(rng.integers(0, limit + 1)) if (rng is not None and limit >= 0) else 0
    clamped = False
    if pos > limit or pos < 0:
        clamped = True
        pos = min(max(pos, 0), max(limit, 0))
    noop = limit < 0  # substitute/delete on an empty word
    bit = edit.bit
    if edit.kind is EditKind.SUBSTITUTE and bit is None:
        bit = "0" if (not noop and cells[pos] == "1") else "1"
    elif edit.kind is EditKind.INSERT and bit is None:
        bit = str(int(rng.integers(0, 2))) if rng is not None else "1"
    return EditOp(edit.kind, pos, bit), clamped, noop


def apply_edit_to_word(word: str, edit: EditOp) -> str:
    pos = edit.position
    if edit.kind is EditKind.SUBSTITUTE:
        return word[:pos] + edit.bit + word[pos + 1:] if word else word
    if edit.kind is EditKind.INSERT:
        return word[:pos] + edit.bit + word[pos:]
    return word[:pos] + word[pos + 1:] if word else word


def apply_edit_to_tape(tape: Tape, edit: EditOp, rng=None) -> Tuple[EditOp, bool, bool]:
    concrete, clamped, noop = resolve_edit(edit, tape.cells, rng)
    if noop:
        return concrete, clamped, True
    if concrete.kind is EditKind.SUBSTITUTE:
        tape.substitute(concrete.position, concrete.bit)
    elif concrete.kind is EditKind.INSERT:
        tape.insert(concrete.position, concrete.bit)
    else:
        tape.delete(concrete.position)
    return concrete, clamped, False


def apply_event(event: ContextEvent, machine, rng: Optional[np.random.Generator] = None) -> AppliedEdit:
    """Apply one edit to the machine's work tape (or to a bare Tape), in place.

    Positions index the materialized work-tape window; out-of-range
    positions are clamped to its end.
    """
    tape = machine if isinstance(machine, Tape) else machine.work
    concrete, clamped, noop = apply_edit_to_tape(tape, event.edit, rng)
    return AppliedEdit(replace(event, edit=concrete), clamped, noop)


# -- edit distance -----------------------------------------------------------------

def levenshtein(a: Sequence, b: Sequence) -> int:
    """Minimal number of unit-cost insertions, deletions and substitutions turning a into b."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


# -- nondeterministic machines -------------------------------------------------------

@dataclass(frozen=True)
class NDScheme:
    states: FrozenSet[str]
    alphabet: FrozenSet[str]
    initial: str
    transitions: Mapping[Tuple[str, str], FrozenSet[Transition]]
    accept: FrozenSet[str] = frozenset()
    blank: str = BLANK

    @classmethod
    def from_deterministic(cls, scheme) -> "NDScheme":
        table = {k: frozenset([v]) for k, v in scheme.transitions.items()}
        return cls(scheme.states, scheme.alphabet, scheme.initial, table, scheme.finals,
                   scheme.blank)


@dataclass(frozen=True)
class NDConfig:
    state: str
    position: int
    cells: Tuple[Tuple[int, str], ...]   # non-blank cells, sorted
    halted: bool = False

    @classmethod
    def start(cls, scheme: NDScheme, word: str, position: int = 0) -> "NDConfig":
        cells = tuple((i, s) for i, s in enumerate(word) if s != scheme.blank)
        return cls(scheme.initial, position, cells)

    def read(self, blank: str = BLANK) -> str:
        return dict(self.cells).get(self.position, blank)

    def word(self, blank: str = BLANK) -> str:
        if not self.cells:
            return ""
        d = dict(self.cells)
        lo, hi = self.cells[0][0], self.cells[-1][0]
        return "".join(d.get(i, blank) for i in range(lo, hi + 1))


def nd_successors(scheme: NDScheme, config: NDConfig) -> Set[NDConfig]:
    if config.halted or config.state in scheme.accept:
        return set()
    sym = config.read(scheme.blank)
    out = set()
    for tr in scheme.transitions.get((config.state, sym), ()):
        d = dict(config.cells)
        if tr.write == scheme.blank:
            d.pop(config.position, None)
        else:
            d[config.position] = tr.write
        cells = tuple(sorted(d.items()))
        if tr.next is None:
            out.add(NDConfig(config.state, config.position, cells, True))
        else:
            out.add(NDConfig(tr.next, config.position + tr.move.delta, cells))
    return out


def nd_search(scheme: NDScheme, word: str, depth: int, position: int = 0):
    """Breadth-first search; returns the accepting branch (list of configs) or None."""
    start = NDConfig.start(scheme, word, position)
    parent: Dict[NDConfig, Optional[NDConfig]] = {start: None}
    frontier = [start]
    for level in range(depth + 1):
        for c in frontier:
            if c.state in scheme.accept:
                path = [c]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
        if level == depth:
            break
        nxt = []
        for c in frontier:
            for s in sorted(nd_successors(scheme, c), key=repr):
                if s not in parent:
                    parent[s] = c
                    nxt.append(s)
        frontier = nxt
    return None


def nd_accepts(scheme: NDScheme, word: str, depth: int, position: int = 0) -> bool:
    return nd_search(scheme, word, depth, position) is not None


def nd_reachable(scheme: NDScheme, word: str, depth: int, position: int = 0) -> List[Set[NDConfig]]:
    """Distinct configurations first reached at each level 0..depth."""
    start = NDConfig.start(scheme, word, position)
    seen = {start}
    levels = [{start}]
    for _ in range(depth):
        nxt = set()
        for c in levels[-1]:
            nxt |= nd_successors(scheme, c)
        nxt -= seen
        seen |= nxt
        levels.append(nxt)
    return levels


# -- trajectories ------------------------------------------------------------------

def process_trajectory(network: "Network", space: Optional[ProbabilitySpace], rounds: int,
                       rng: Optional[np.random.Generator] = None) -> Dict[str, List[str]]:
    """Work-tape word of every machine after each round, index 0 being the start."""
    from .network import network_step  # local: network depends on this module

    if space is not None:
        network.space = space
    if rng is None:
        rng = make_rng(network.seed)
    out = {mid: [m.work.word()] for mid, m in network.machines.items()}
    for _ in range(rounds):
        network_step(network, rng)
        for mid, m in network.machines.items():
            out[mid].append(m.work.word())
    return out
