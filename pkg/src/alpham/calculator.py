"""Three-tape universal calculator.

Program tape: read-only, head ``r`` advances exactly one cell per step.
Work tape: read/write, head ``n`` moves at most one cell per step.
Result tape: write-only, head ``v`` advances exactly when it writes.

One program bit is consumed per step; instructions (see :mod:`alpham.isa`)
execute on the step that reads their last bit.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Tuple, Union

from . import isa
from .isa import Action, BadRecord, Instruction, Op, RecordAssembler
from .tape import (Boundedness, Discipline, Head, Move, MoveAction, Read, Write, binary_tape,
                   head_apply)


class Undefined(Exception):
    """The calculator did not halt within its fuel, so the result is undefined."""


class ProgramSource:
    """Program tape whose cells past the literal prefix come from an optional generator."""

    def __init__(self, program: Union[str, Iterable[str]]):
        if isinstance(program, str):
            prefix, feed = program, None
        else:
            prefix, feed = "", iter(program)
        self.tape = binary_tape(prefix, Boundedness.LEFT_BOUNDED)
        self.feed: Optional[Iterator[str]] = feed
        self.fed_upto = len(prefix)
        self.overridden = set()

    def _pull(self, pos: int) -> None:
        while self.feed is not None and pos >= self.fed_upto:
            bit = next(self.feed, None)
            if bit is None:
                self.feed = None
                break
            if self.fed_upto not in self.overridden:
                self.tape.write(self.fed_upto, bit)
            self.fed_upto += 1

    def read(self, pos: int) -> str:
        self._pull(pos)
        return self.tape.read(pos)

    def write(self, pos: int, bit: str) -> None:
        self.tape.write(pos, bit)
        if pos >= self.fed_upto:
            self.overridden.add(pos)

    @property
    def finite(self) -> bool:
        return self.feed is None

    def window(self) -> str:
        return self.tape.word()


@dataclass(frozen=True)
class StepRecord:
    """What one calculator step did; the trace unit compared across machine kinds."""
    step: int
    r_pos: int
    bit: str
    instr: Optional[str] = None
    work_read: Optional[str] = None
    work_write: Optional[Tuple[int, str]] = None
    work_pos: int = 0
    result_append: Optional[str] = None
    halted: bool = False
    stuck: Optional[str] = None
    ignored: Optional[str] = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class CURun:
    output: Optional[str]          # None when undefined (no halt)
    consumed_prefix: str
    halted: bool
    steps: int
    result: str = ""               # result tape content even when undefined
    stuck: Optional[str] = None
    trace: List[StepRecord] = field(default_factory=list)


class Calculator:
    def __init__(self, program: Union[str, Iterable[str]], data: str = ""):
        self.program = ProgramSource(program)
        self.r = Head(0, Discipline.READ_FORWARD_ONLY)
        self.work = binary_tape(data, Boundedness.UNBOUNDED)
        self.n = Head(0, Discipline.READ_WRITE_BIDIRECTIONAL, may_stagnate=True)
        self.result = binary_tape("", Boundedness.LEFT_BOUNDED)
        self.v = Head(0, Discipline.WRITE_FORWARD_ONLY)
        self.asm = RecordAssembler()
        self.consumed: List[str] = []
        self.steps = 0
        self.halted = False
        self.stuck: Optional[str] = None

    @property
    def done(self) -> bool:
        return self.halted or self.stuck is not None

    def output(self) -> str:
        return self.result.word()

    def emit(self, bit: str) -> None:
        _, _, _ = head_apply(self.result, self.v, Write(bit), inplace=True)
        _, self.v, _ = head_apply(self.result, self.v, MoveAction(Move.D))

    def step(self) -> StepRecord:
        if self.done:
            raise RuntimeError("calculator already stopped")
        pos = self.r.position
        self.program._pull(pos)
        bit, _, _ = head_apply(self.program.tape, self.r, Read())
        _, self.r, _ = head_apply(self.program.tape, self.r, MoveAction(Move.D))
        self.consumed.append(bit)
        self.steps += 1
        rec = dict(step=self.steps, r_pos=pos, bit=bit)
        res = self.asm.feed(bit)
        if isinstance(res, BadRecord):
            self.stuck = res.reason
            rec["stuck"] = res.reason
        elif isinstance(res, Instruction):
            rec["instr"] = str(res)
            self._execute(res, rec)
        rec["work_pos"] = self.n.position
        return StepRecord(**rec)

    def _execute(self, ins: Instruction, rec: dict) -> None:
        op, args = ins.op, ins.args
        if op is Op.HALT:
            self.halted = rec["halted"] = True
        elif op is Op.MOVE:
            _, self.n, _ = head_apply(self.work, self.n, MoveAction(args[0].value))
        elif op is Op.WRITE:
            sym = isa.work_symbol(args[0].value)
            if sym is None:
                self.stuck = rec["stuck"] = f"bad work symbol {args[0]}"
                return
            head_apply(self.work, self.n, Write(sym), inplace=True)
            rec["work_write"] = (self.n.position, sym)
        elif op is Op.EMIT:
            bit = isa.bit_symbol(args[0].value)
            if bit is None:
                self.stuck = rec["stuck"] = f"bad result bit {args[0]}"
                return
            self.emit(bit)
            rec["result_append"] = bit
        elif op is Op.DISPATCH:
            sym, _, _ = head_apply(self.work, self.n, Read())
            rec["work_read"] = sym
            action = isa.action_for(args[isa.DISPATCH_ORDER.index(sym)].value)
            if action is None:
                self.stuck = rec["stuck"] = f"bad dispatch action {args[isa.DISPATCH_ORDER.index(sym)]}"
            elif action is Action.HALT:
                self.halted = rec["halted"] = True
            elif action in (Action.EMIT0, Action.EMIT1):
                bit = "0" if action is Action.EMIT0 else "1"
                self.emit(bit)
                rec["result_append"] = bit
            elif action in isa.VARIABILITY_ACTIONS:
                rec["ignored"] = action.name
        else:
            rec["ignored"] = op.name


def cu_run(program: Union[str, Iterable[str]], data: str = "", fuel: int = 10_000,
           keep_trace: bool = True) -> CURun:
    cu = Calculator(program, data)
    trace = []
    while not cu.done and cu.steps < fuel:
        rec = cu.step()
        if keep_trace:
            trace.append(rec)
    consumed = "".join(cu.consumed)
    return CURun(cu.output() if cu.halted else None, consumed, cu.halted, cu.steps,
                 cu.output(), cu.stuck, trace)


def reduced_program(program: Union[str, Iterable[str]], data: str = "", fuel: int = 10_000) -> str:
    run = cu_run(program, data, fuel, keep_trace=False)
    if not run.halted:
        raise Undefined("no halt within fuel" if run.stuck is None else f"stuck: {run.stuck}")
    return run.consumed_prefix


# -- built-in unbounded programs ------------------------------------------------

def _cycle(bits: str) -> Iterator[str]:
    return itertools.chain.from_iterable(itertools.repeat(bits))


COPY_CYCLE = isa.assemble(["DISPATCH 3 1 2", "MOVE D"])

GENERATORS: Dict[str, Callable[[], Iterator[str]]] = {
    # emit the data word then halt at the first blank
    "copy": lambda: _cycle(COPY_CYCLE),
    # never halts
    "loop": lambda: _cycle(isa.assemble(["MOVE N"])),
}


def load_program(spec: str) -> Union[str, Iterator[str]]:
    """``@generator:<name>`` or a string of bits (whitespace and '#' comments ignored)."""
    if spec.startswith("@generator:"):
        name = spec.split(":", 1)[1]
        if name not in GENERATORS:
            raise ValueError(f"unknown generator {name!r}; known: {sorted(GENERATORS)}")
        return GENERATORS[name]()
    bits = "".join("".join(line.split("#", 1)[0].split()) for line in spec.splitlines())
    for i, ch in enumerate(bits):
        if ch not in "01":
            raise ValueError(f"program has non-bit character {ch!r} at {i}")
    return bits
