"""The α-machine: a calculator with a program-write head and an outgoing head.

Heads:

* ``r`` reads the program tape, one cell per step, never stops or backs up;
* ``b`` writes the program tape, both directions, at most one cell per step;
* ``v`` appends to the result tape, or writes into another machine's work
  tape (messages); one v action per step;
* ``n`` reads and writes the work tape.

Each call to :func:`alpha_step` runs one cycle of the operating loop:
deliver incoming writes and context edits to the work tape, read one program
bit with ``r``, and, when that bit closes an instruction, act on it.

With variability disabled the machine is a plain calculator: everything that
would use ``b`` or send a message is decoded, logged as ignored and skipped.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from . import isa
from .calculator import ProgramSource, StepRecord
from .context import (AppliedEdit, ContextEvent, EditKind, EditOp, apply_event,
                      sample_event)
from .isa import Action, BadRecord, Instruction, Op, RecordAssembler
from .tape import (BLANK, Boundedness, BoundaryViolation, Discipline, Head, Move, MoveAction,
                   Read, Write, binary_tape, head_apply)

RESULT = "result"
WORK = "work"


class RoutingError(LookupError):
    pass


@dataclass
class Message:
    src: str
    dst: str                       # channel id ("ch<k>") or machine id
    payload: str
    issued_step: Optional[int] = None
    delivered_step: Optional[int] = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class StepEffects:
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
    # beyond the calculator
    delivered: List[Tuple[int, str]] = field(default_factory=list)
    event: Optional[dict] = None
    program_writes: List[Tuple[int, str]] = field(default_factory=list)
    b_pos: int = 0
    messages_out: List[Message] = field(default_factory=list)
    recv: Optional[int] = None
    copied: Optional[str] = None
    received: List[Tuple[int, str]] = field(default_factory=list)
    rendezvous_from: Optional[str] = None

    def cu_record(self) -> StepRecord:
        return StepRecord(self.step, self.r_pos, self.bit, self.instr, self.work_read,
                          self.work_write, self.work_pos, self.result_append, self.halted,
                          self.stuck, self.ignored)

    def as_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if v is None or v == [] or v is False:
                continue
            if k == "messages_out":
                v = [m.as_dict() for m in v]
            out[k] = v
        return out


class AlphaMachine:
    def __init__(self, program: Union[str, Iterable[str]], work: str = "", machine_id: str = "m0",
                 variability: bool = True):
        self.machine_id = machine_id
        self.program = ProgramSource(program)
        self.r = Head(0, Discipline.READ_FORWARD_ONLY)
        self.b = Head(0, Discipline.WRITE_BIDIRECTIONAL, may_stagnate=True)
        self.work = binary_tape(work, Boundedness.UNBOUNDED)
        self.n = Head(0, Discipline.READ_WRITE_BIDIRECTIONAL, may_stagnate=True)
        self.result = binary_tape("", Boundedness.LEFT_BOUNDED)
        self.v = Head(0, Discipline.WRITE_FORWARD_ONLY)
        self.variability_enabled = variability
        self.asm = RecordAssembler()
        self.consumed: List[str] = []
        self.steps = 0
        self.halted = False
        self.stuck: Optional[str] = None
        # replication state
        self.replicating = None
        self.transit: deque = deque()
        self.copied = 0
        self.source_done = False
        self.peers: Dict[str, "AlphaMachine"] = {}

    @classmethod
    def from_spec(cls, spec: dict) -> "AlphaMachine":
        program = spec.get("program", "")
        if isinstance(program, list):
            program = isa.assemble(program)
        else:
            program = "".join(str(program).split())
        m = cls(program, spec.get("work", ""), str(spec.get("id", "m0")),
                bool(spec.get("variability", True)))
        return m

    @property
    def done(self) -> bool:
        return self.halted or self.stuck is not None

    @property
    def os_state(self) -> str:
        if self.halted:
            return "halted"
        if self.stuck is not None:
            return "stuck"
        if self.replicating is not None:
            return "replicating"
        return "idle" if self.asm.idle else "decoding"

    def output(self) -> str:
        return self.result.word()

    def consumed_prefix(self) -> str:
        return "".join(self.consumed)

    def copy(self) -> "AlphaMachine":
        m = AlphaMachine.__new__(AlphaMachine)
        m.__dict__.update(self.__dict__)
        m.program = ProgramSource("")
        m.program.tape = self.program.tape.copy()
        m.program.feed = self.program.feed
        m.program.fed_upto = self.program.fed_upto
        m.program.overridden = set(self.program.overridden)
        m.work = self.work.copy()
        m.result = self.result.copy()
        m.asm = RecordAssembler()
        m.asm.tokens = list(self.asm.tokens)
        m.asm.zeros, m.asm.in_token = self.asm.zeros, self.asm.in_token
        m.asm.bits_in_record = self.asm.bits_in_record
        m.consumed = list(self.consumed)
        m.transit = deque(self.transit)
        m.peers = dict(self.peers)
        return m

    # -- head helpers -----------------------------------------------------------
    def emit(self, bit: str) -> None:
        head_apply(self.result, self.v, Write(bit), inplace=True)
        _, self.v, _ = head_apply(self.result, self.v, MoveAction(Move.D))

    def program_write(self, pos: int, bit: str, fx: StepEffects) -> None:
        self.b = replace(self.b, position=pos)
        self.program.tape.check_position(pos)
        head_apply(self.program.tape, self.b, Write(bit), inplace=True)
        if pos >= self.program.fed_upto:
            self.program.overridden.add(pos)
        fx.program_writes.append((pos, bit))

    def start_replication(self, target) -> None:
        self.replicating = target
        self.transit = deque()
        self.copied = 0
        self.source_done = False


def disable_variability(machine: AlphaMachine) -> AlphaMachine:
    machine.variability_enabled = False
    return machine


def alpha_disable_variability(machine: AlphaMachine) -> AlphaMachine:
    """Copy of the machine with b inactive and v limited to the result tape."""
    return disable_variability(machine.copy())


def deliver(machine: AlphaMachine, inbox: Sequence[Message], fx: StepEffects) -> None:
    for msg in inbox:
        fx.delivered.extend(machine.work.append_context(msg.payload))


def alpha_step(machine: AlphaMachine, inbox: Sequence[Message] = (),
               event: Optional[ContextEvent] = None, rng=None) -> Tuple[AlphaMachine, StepEffects]:
    """Run one operating-system cycle in place; returns the machine and what changed."""
    m = machine
    if m.done:
        raise RuntimeError(f"machine {m.machine_id} already stopped")
    pos = m.r.position
    fx = StepEffects(step=m.steps + 1, r_pos=pos, bit=BLANK)
    # (1) outside writes land first so this cycle can react to them
    deliver(m, inbox, fx)
    if event is not None and m.replicating is None:
        applied = apply_event(event, m, rng)
        fx.event = _event_record(applied)
    # (2) r reads one program cell
    m.program._pull(pos)
    bit, _, _ = head_apply(m.program.tape, m.r, Read())
    _, m.r, _ = head_apply(m.program.tape, m.r, MoveAction(Move.D))
    m.consumed.append(bit)
    m.steps += 1
    fx.bit = bit
    # (3, 4) act on a completed instruction
    if m.replicating is not None:
        _replicate_step(m, bit, event, rng, fx)
    else:
        res = m.asm.feed(bit)
        if isinstance(res, BadRecord):
            m.stuck = fx.stuck = res.reason
        elif isinstance(res, Instruction):
            fx.instr = str(res)
            try:
                _execute(m, res, fx)
            except BoundaryViolation as exc:
                m.stuck = fx.stuck = str(exc)
    fx.work_pos = m.n.position
    fx.b_pos = m.b.position
    return m, fx


def _event_record(applied: AppliedEdit) -> dict:
    d = applied.event.as_dict()
    if applied.clamped:
        d["clamped"] = True
    if applied.noop:
        d["noop"] = True
    return d


def _execute(m: AlphaMachine, ins: Instruction, fx: StepEffects) -> None:
    op, args = ins.op, ins.args
    if op in isa.VARIABILITY_OPS and not m.variability_enabled:
        fx.ignored = op.name
        return
    if op is Op.HALT:
        m.halted = fx.halted = True
    elif op is Op.MOVE:
        _, m.n, _ = head_apply(m.work, m.n, MoveAction(args[0].value))
    elif op is Op.WRITE:
        sym = isa.work_symbol(args[0].value)
        if sym is None:
            m.stuck = fx.stuck = f"bad work symbol {args[0]}"
            return
        head_apply(m.work, m.n, Write(sym), inplace=True)
        fx.work_write = (m.n.position, sym)
    elif op is Op.EMIT:
        bit = isa.bit_symbol(args[0].value)
        if bit is None:
            m.stuck = fx.stuck = f"bad result bit {args[0]}"
            return
        m.emit(bit)
        fx.result_append = bit
    elif op is Op.DISPATCH:
        sym, _, _ = head_apply(m.work, m.n, Read())
        fx.work_read = sym
        tok = args[isa.DISPATCH_ORDER.index(sym)]
        action = isa.action_for(tok.value)
        if action is None:
            m.stuck = fx.stuck = f"bad dispatch action {tok}"
        elif action is Action.HALT:
            m.halted = fx.halted = True
        elif action in (Action.EMIT0, Action.EMIT1):
            bit = "0" if action is Action.EMIT0 else "1"
            m.emit(bit)
            fx.result_append = bit
        elif action in isa.VARIABILITY_ACTIONS:
            if not m.variability_enabled:
                fx.ignored = action.name
            elif action in (Action.PWRITE0, Action.PWRITE1):
                m.program_write(m.b.position, "0" if action is Action.PWRITE0 else "1", fx)
            else:
                fx.messages_out.append(Message(m.machine_id, "ch0",
                                               "0" if action is Action.SEND0 else "1"))
    elif op is Op.PWRITE:
        sign, mag, bit_tok = args
        bit = isa.bit_symbol(bit_tok.value)
        if bit is None:
            m.stuck = fx.stuck = f"bad program bit {bit_tok}"
            return
        if sign.value is Move.N:
            target = m.b.position
        else:
            target = m.r.position + sign.value.delta * mag.value
        m.program_write(target, bit, fx)
    elif op is Op.PMOVE:
        _, m.b, _ = head_apply(m.program.tape, m.b, MoveAction(args[0].value))
    elif op is Op.SEND:
        bit = isa.bit_symbol(args[1].value)
        if bit is None:
            m.stuck = fx.stuck = f"bad message bit {args[1]}"
            return
        fx.messages_out.append(Message(m.machine_id, f"ch{args[0].value}", bit))
    elif op is Op.RECV:
        fx.recv = args[0].value
    elif op is Op.REPLICATE:
        t = args[0].value
        m.start_replication(RESULT if t == 0 else WORK if t == 1 else ("ch", t - 2))


# -- replication -------------------------------------------------------------------

def _replicate_step(m: AlphaMachine, bit: str, event: Optional[ContextEvent], rng,
                    fx: StepEffects) -> None:
    """Copy through a small FIFO so edits can insert or drop bits without
    breaking r's one-cell-per-step advance or v's one-write-per-step budget.
    Edit positions are indices into the copy being produced."""
    if bit in ("0", "1"):
        m.transit.append(bit)
    else:
        m.source_done = True
    if event is not None:
        fx.event = _transit_edit(m, event, rng)
    if m.transit:
        out = m.transit.popleft()
        _copy_out(m, out, fx)
        m.copied += 1
        fx.copied = out
    if m.source_done and not m.transit:
        m.halted = fx.halted = True
        m.replicating = None


def _transit_edit(m: AlphaMachine, event: ContextEvent, rng) -> dict:
    kind = event.edit.kind
    bit = event.edit.bit
    noop = False
    if kind is EditKind.INSERT:
        if bit is None:
            bit = str(int(rng.integers(0, 2))) if rng is not None else "1"
        m.transit.appendleft(bit)
    elif not m.transit:
        noop = True
    elif kind is EditKind.SUBSTITUTE:
        if bit is None:
            bit = "0" if m.transit[0] == "1" else "1"
        m.transit[0] = bit
    else:
        m.transit.popleft()
    concrete = EditOp(kind, m.copied, bit if kind is not EditKind.DELETE else None)
    d = replace(event, edit=concrete).as_dict()
    d["transit"] = True
    if noop:
        d["noop"] = True
    return d


def _copy_out(m: AlphaMachine, bit: str, fx: StepEffects) -> None:
    target = m.replicating
    if target == RESULT:
        m.emit(bit)
        fx.result_append = bit
    elif target == WORK:
        head_apply(m.work, m.n, Write(bit), inplace=True)
        fx.work_write = (m.n.position, bit)
        _, m.n, _ = head_apply(m.work, m.n, MoveAction(Move.D))
    elif isinstance(target, tuple) and target[0] == "ch":
        fx.messages_out.append(Message(m.machine_id, f"ch{target[1]}", bit))
    elif isinstance(target, tuple) and target[0] == "remote":
        peer = m.peers.get(target[1])
        if peer is None:
            raise RoutingError(f"unknown machine {target[1]!r}")
        peer.work.append_context(bit)
        fx.messages_out.append(Message(m.machine_id, target[1], bit))
    else:
        raise RoutingError(f"unknown replication target {target!r}")


def replicate(machine: AlphaMachine, target="result", events=None, rng=None,
              peers: Optional[Dict[str, AlphaMachine]] = None,
              max_steps: Optional[int] = None) -> List[StepEffects]:
    """Copy the program tape to ``target`` ("result", "work" or ("remote", id)).

    ``events`` is either a ProbabilitySpace (one draw per step from ``rng``)
    or a sequence giving the event (or None) for each step.
    """
    if isinstance(target, str) and target not in (RESULT, WORK):
        target = ("remote", target)
    if isinstance(target, tuple) and target[0] == "remote":
        if peers is None or target[1] not in peers:
            raise RoutingError(f"unknown machine {target[1]!r}")
        machine.peers.update(peers)
    if not machine.program.finite:
        raise ValueError("replication needs a finite program window")
    machine.start_replication(target)
    if max_steps is None:
        max_steps = 4 * (len(machine.program.window()) + 2) + 16
    from .context import ProbabilitySpace
    space = events if isinstance(events, ProbabilitySpace) else None
    script = list(events) if (events is not None and space is None) else []
    log = []
    i = 0
    while not machine.done and i < max_steps:
        if space is not None:
            ev = sample_event(space, rng)
        else:
            ev = script[i] if i < len(script) else None
        _, fx = alpha_step(machine, (), ev, rng)
        log.append(fx)
        i += 1
    return log


def run_alpha(machine: AlphaMachine, fuel: int = 10_000, space=None, rng=None) -> List[StepEffects]:
    """Step a lone machine until it stops or runs out of fuel."""
    log = []
    while not machine.done and machine.steps < fuel:
        ev = sample_event(space, rng) if space is not None else None
        _, fx = alpha_step(machine, (), ev, rng)
        log.append(fx)
    return log


def replay_effects(initial: AlphaMachine, log: Sequence[StepEffects]) -> AlphaMachine:
    """Rebuild tapes and head positions from an effects log alone."""
    from .context import EditKind as K

    m = initial.copy()
    for fx in log:
        for pos, bit in fx.delivered:
            m.work.write(pos, bit)
            m.work.context_cursor = min(m.work.context_cursor, pos - 1)
        if fx.event is not None and not fx.event.get("transit") and not fx.event.get("noop"):
            kind, p = K(fx.event["kind"]), fx.event["position"]
            if kind is K.SUBSTITUTE:
                m.work.substitute(p, fx.event["bit"])
            elif kind is K.INSERT:
                m.work.insert(p, fx.event["bit"])
            else:
                m.work.delete(p)
        if fx.work_write is not None:
            m.work.write(*fx.work_write)
        for pos, bit in fx.program_writes:
            m.program.tape.write(pos, bit)
        if fx.result_append is not None:
            m.emit(fx.result_append)
        for pos, bit in fx.received:
            m.work.write(pos, bit)
            m.work.context_cursor = min(m.work.context_cursor, pos - 1)
        m.r = replace(m.r, position=fx.r_pos + 1)
        m.n = replace(m.n, position=fx.work_pos)
        m.b = replace(m.b, position=fx.b_pos)
        m.consumed.append(fx.bit)
        m.steps = fx.step
        if fx.halted:
            m.halted = True
        if fx.stuck:
            m.stuck = fx.stuck
    return m
