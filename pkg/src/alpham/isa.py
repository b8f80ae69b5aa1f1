"""Instruction records read off the program tape.

A record is an opcode token ``State(j)`` followed by a fixed list of operand
tokens, all in the codec's ``1 0^k 1`` words.  The controller sees one
program bit per step, so records are assembled incrementally by
:class:`RecordAssembler`.

=====  ============  ===========================================  ==========
code   mnemonic      operands                                     CU meaning
=====  ============  ===========================================  ==========
0      HALT          -                                            halt
1      MOVE          Move                                         move n
2      WRITE         External(sym)  0=Λ 1='0' 2='1'               write at n
3      EMIT          External(bit)  1='0' 2='1'                   append v
4      DISPATCH      External(action) x3, for reads of Λ, 0, 1    read at n
5      PWRITE        Move(sign) External(|offset|) External(bit)  ignored
6      PMOVE         Move                                         ignored
7      SEND          External(channel) External(bit)              ignored
8      RECV          External(channel)                            ignored
9      REPLICATE     External(target) 0=result 1=work 2+c=chan c  ignored
=====  ============  ===========================================  ==========

Dispatch actions: 0 nop, 1 emit '0', 2 emit '1', 3 halt, 4 b-write '0',
5 b-write '1', 6 send '0' on channel 0, 7 send '1' on channel 0.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple, Union

from .codec import Kind, Token, decode_sequence, token_for_zeros
from .tape import BLANK, Move


class Op(enum.IntEnum):
    HALT = 0
    MOVE = 1
    WRITE = 2
    EMIT = 3
    DISPATCH = 4
    PWRITE = 5
    PMOVE = 6
    SEND = 7
    RECV = 8
    REPLICATE = 9


OPERANDS = {
    Op.HALT: (),
    Op.MOVE: (Kind.MOVE,),
    Op.WRITE: (Kind.EXTERNAL,),
    Op.EMIT: (Kind.EXTERNAL,),
    Op.DISPATCH: (Kind.EXTERNAL,) * 3,
    Op.PWRITE: (Kind.MOVE, Kind.EXTERNAL, Kind.EXTERNAL),
    Op.PMOVE: (Kind.MOVE,),
    Op.SEND: (Kind.EXTERNAL, Kind.EXTERNAL),
    Op.RECV: (Kind.EXTERNAL,),
    Op.REPLICATE: (Kind.EXTERNAL,),
}

# instructions a plain calculator decodes but does not act on
VARIABILITY_OPS = frozenset({Op.PWRITE, Op.PMOVE, Op.SEND, Op.RECV, Op.REPLICATE})


class Action(enum.IntEnum):
    NOP = 0
    EMIT0 = 1
    EMIT1 = 2
    HALT = 3
    PWRITE0 = 4
    PWRITE1 = 5
    SEND0 = 6
    SEND1 = 7


VARIABILITY_ACTIONS = frozenset({Action.PWRITE0, Action.PWRITE1, Action.SEND0, Action.SEND1})

WORK_SYMBOLS = (BLANK, "0", "1")
DISPATCH_ORDER = (BLANK, "0", "1")


def work_symbol(index: int) -> Optional[str]:
    return WORK_SYMBOLS[index] if 0 <= index < 3 else None


def bit_symbol(index: int) -> Optional[str]:
    return {1: "0", 2: "1"}.get(index)


def action_for(index: int) -> Optional[Action]:
    try:
        return Action(index)
    except ValueError:
        return None


@dataclass(frozen=True)
class Instruction:
    op: Op
    args: Tuple[Token, ...] = ()

    def tokens(self) -> List[Token]:
        return [Token.state(int(self.op)), *self.args]

    @property
    def bits(self) -> str:
        return "".join(t.bits for t in self.tokens())

    def __str__(self) -> str:
        parts = [self.op.name]
        for t in self.args:
            parts.append(t.value.value if t.kind is Kind.MOVE else str(t.value))
        return " ".join(parts)


@dataclass(frozen=True)
class BadRecord:
    reason: str


class RecordAssembler:
    """Feed program bits one at a time; yields an Instruction when a record closes."""

    __slots__ = ("tokens", "zeros", "in_token", "bits_in_record")

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.tokens: List[Token] = []
        self.zeros = 0
        self.in_token = False
        self.bits_in_record = 0

    @property
    def idle(self) -> bool:
        return not self.in_token and not self.tokens

    def feed(self, bit: str) -> Union[None, Instruction, BadRecord]:
        if bit not in ("0", "1"):
            return BadRecord("program exhausted")
        self.bits_in_record += 1
        if not self.in_token:
            if bit == "0":
                return BadRecord("code word must start with 1")
            self.in_token = True
            self.zeros = 0
            return None
        if bit == "0":
            self.zeros += 1
            return None
        self.in_token = False
        tok = token_for_zeros(self.zeros)
        if tok is None:
            return BadRecord("empty code word")
        if not self.tokens:
            if tok.kind is not Kind.STATE or tok.value >= len(Op):
                return BadRecord(f"unknown instruction {tok}")
        else:
            want = OPERANDS[Op(self.tokens[0].value)]
            if tok.kind is not want[len(self.tokens) - 1]:
                return BadRecord(f"operand {len(self.tokens)} of "
                                 f"{Op(self.tokens[0].value).name} is {tok}")
        self.tokens.append(tok)
        op = Op(self.tokens[0].value)
        if len(self.tokens) == 1 + len(OPERANDS[op]):
            ins = Instruction(op, tuple(self.tokens[1:]))
            self.reset()
            return ins
        return None


# -- assembly text ------------------------------------------------------------

def _arg_token(kind: Kind, text: str) -> Token:
    if kind is Kind.MOVE:
        return Token.move(Move(text.upper()))
    return Token.external(int(text))


def instruction(op: Union[Op, str], *args) -> Instruction:
    if isinstance(op, str):
        op = Op[op.upper()]
    kinds = OPERANDS[op]
    if len(args) != len(kinds):
        raise ValueError(f"{op.name} takes {len(kinds)} operands, got {len(args)}")
    toks = []
    for kind, a in zip(kinds, args):
        if isinstance(a, Token):
            toks.append(a)
        elif isinstance(a, Move):
            toks.append(Token.move(a))
        else:
            toks.append(_arg_token(kind, str(a)))
    return Instruction(op, tuple(toks))


def assemble(lines: Union[str, Iterable[str]]) -> str:
    """Assemble mnemonics, one instruction per line or list item, into bits.

    Convenience forms: ``EMIT 0``/``EMIT 1`` and ``WRITE 0|1|_`` take the
    symbol itself rather than its token index; ``PWRITE +3 1`` takes a signed
    offset and a bit.
    """
    if isinstance(lines, str):
        lines = lines.replace(";", "\n").splitlines()
    out = []
    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        name, *args = line.split()
        op = Op[name.upper()]
        if op is Op.EMIT:
            args = [{"0": 1, "1": 2}[args[0]]]
        elif op is Op.WRITE:
            args = [{"_": 0, BLANK: 0, "0": 1, "1": 2}[args[0]]]
        elif op is Op.PWRITE and len(args) == 2:
            off = int(args[0])
            sign = "D" if off > 0 else ("G" if off < 0 else "N")
            args = [sign, abs(off), {"0": 1, "1": 2}[args[1]]]
        elif op is Op.SEND:
            args = [args[0], {"0": 1, "1": 2}[args[1]]]
        out.append(instruction(op, *args).bits)
    return "".join(out)


def disassemble(bits: str) -> List[str]:
    """Split a well-formed program into mnemonic lines (a trailing partial record is reported)."""
    asm = RecordAssembler()
    out = []
    for i, b in enumerate(bits):
        res = asm.feed(b)
        if isinstance(res, BadRecord):
            out.append(f"?? at bit {i}: {res.reason}")
            return out
        if isinstance(res, Instruction):
            out.append(str(res))
    if not asm.idle:
        out.append("?? partial record")
    return out


def program_tokens(bits: str) -> List[Token]:
    return decode_sequence(bits)
