"""Self-delimiting binary code for symbols, states and moves.

Every code word is ``1 0^k 1``:

* k in {1, 2, 3}: a move (101 = D, 1001 = G, 10001 = N)
* k even, k >= 4: external symbol number (k - 4) / 2
* k odd, k >= 5: state number (k - 5) / 2

Words abut, so consecutive tokens are separated by the pair ``11``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .tape import BLANK, Move
from .turing import TMScheme, Transition

MOVE_ZEROS = {Move.D: 1, Move.G: 2, Move.N: 3}
ZEROS_MOVE = {v: k for k, v in MOVE_ZEROS.items()}


class MalformedCode(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.message = message
        self.offset = offset


class SchemeArityError(ValueError):
    pass


class Kind(enum.Enum):
    EXTERNAL = "external"
    STATE = "state"
    MOVE = "move"


@dataclass(frozen=True)
class Token:
    kind: Kind
    value: object  # int index, or Move

    @classmethod
    def external(cls, i: int) -> "Token":
        return cls(Kind.EXTERNAL, i)

    @classmethod
    def state(cls, j: int) -> "Token":
        return cls(Kind.STATE, j)

    @classmethod
    def move(cls, m: Move) -> "Token":
        return cls(Kind.MOVE, Move(m))

    @property
    def zeros(self) -> int:
        if self.kind is Kind.MOVE:
            return MOVE_ZEROS[self.value]
        if self.value < 0:
            raise ValueError("token index must be >= 0")
        return (4 if self.kind is Kind.EXTERNAL else 5) + 2 * self.value

    @property
    def bits(self) -> str:
        return "1" + "0" * self.zeros + "1"

    def __str__(self) -> str:
        if self.kind is Kind.MOVE:
            return f"Move({self.value.value})"
        return f"{self.kind.value.capitalize()}({self.value})"


def token_for_zeros(k: int) -> Optional[Token]:
    if k in ZEROS_MOVE:
        return Token.move(ZEROS_MOVE[k])
    if k >= 4:
        return Token.external((k - 4) // 2) if k % 2 == 0 else Token.state((k - 5) // 2)
    return None


def encode_token(kind, index) -> str:
    if isinstance(kind, str):
        kind = Kind(kind)
    if kind is Kind.MOVE:
        return Token.move(index).bits
    if index < 0:
        raise ValueError("token index must be >= 0")
    return Token(kind, index).bits


def encode_tokens(tokens: Iterable[Token]) -> str:
    return "".join(t.bits for t in tokens)


def check_bits(bits: str) -> None:
    for i, ch in enumerate(bits):
        if ch not in "01":
            raise MalformedCode(f"non-bit character {ch!r}", i)


def decode_sequence(bits: str) -> List[Token]:
    check_bits(bits)
    tokens = []
    i, n = 0, len(bits)
    while i < n:
        start = i
        if bits[i] != "1":
            raise MalformedCode("code word must start with 1", i)
        i += 1
        while i < n and bits[i] == "0":
            i += 1
        if i == n:
            raise MalformedCode("unterminated code word", start)
        k = i - start - 1
        tok = token_for_zeros(k)
        if tok is None:
            raise MalformedCode("empty code word '11'", start)
        tokens.append(tok)
        i += 1
    return tokens


# -- schemes -----------------------------------------------------------------
#
# header : External(|Σ|-1) State(|Q|-1) State(f)* Move(N)
# record : State(q) External(read) External(write) Move State(next)
# State(|Q|) as next means halt.

def scheme_indexing(scheme: TMScheme) -> Tuple[List[str], List[str]]:
    states = [scheme.initial] + sorted(scheme.states - {scheme.initial}, key=_name_key)
    symbols = [scheme.blank] + sorted(scheme.alphabet - {scheme.blank}, key=_name_key)
    return states, symbols


def _name_key(name: str):
    # q2 before q10, so decoded names sort in index order
    return len(name), name


def encode_scheme(scheme: TMScheme) -> str:
    states, symbols = scheme_indexing(scheme)
    qi = {q: i for i, q in enumerate(states)}
    si = {s: i for i, s in enumerate(symbols)}
    halt = len(states)
    toks = [Token.external(len(symbols) - 1), Token.state(len(states) - 1)]
    toks += [Token.state(qi[f]) for f in sorted(scheme.finals, key=qi.get)]
    toks.append(Token.move(Move.N))
    for (q, s), tr in sorted(scheme.transitions.items(), key=lambda kv: (qi[kv[0][0]], si[kv[0][1]])):
        toks += [Token.state(qi[q]), Token.external(si[s]), Token.external(si[tr.write]),
                 Token.move(tr.move), Token.state(halt if tr.next is None else qi[tr.next])]
    return encode_tokens(toks)


def decode_scheme(bits: str) -> TMScheme:
    toks = decode_sequence(bits)
    if len(toks) < 3:
        raise SchemeArityError("header needs at least three tokens")
    if toks[0].kind is not Kind.EXTERNAL or toks[1].kind is not Kind.STATE:
        raise SchemeArityError("header must start External(|Σ|-1) State(|Q|-1)")
    n_sym, n_q = toks[0].value + 1, toks[1].value + 1
    symbols = [BLANK] + [f"a{i}" for i in range(1, n_sym)]
    states = [f"q{j}" for j in range(n_q)]
    i = 2
    finals = []
    while i < len(toks) and toks[i].kind is Kind.STATE:
        finals.append(toks[i].value)
        i += 1
    if i >= len(toks) or toks[i] != Token.move(Move.N):
        raise SchemeArityError("header must end with Move(N)")
    i += 1
    body = toks[i:]
    if len(body) % 5:
        raise SchemeArityError(f"incomplete transition record ({len(body) % 5} of 5 tokens)")
    expected = (Kind.STATE, Kind.EXTERNAL, Kind.EXTERNAL, Kind.MOVE, Kind.STATE)
    table = {}
    for r in range(0, len(body), 5):
        rec = body[r:r + 5]
        if tuple(t.kind for t in rec) != expected:
            raise SchemeArityError(f"record {r // 5} has wrong token kinds")
        q, s, w, m, nxt = rec
        if q.value >= n_q or nxt.value > n_q or s.value >= n_sym or w.value >= n_sym:
            raise SchemeArityError(f"record {r // 5} index out of range")
        table[(states[q.value], symbols[s.value])] = Transition(
            symbols[w.value], m.value, None if nxt.value == n_q else states[nxt.value])
    if any(f >= n_q for f in finals):
        raise SchemeArityError("final state index out of range")
    return TMScheme(frozenset(states), frozenset(symbols), states[0], table,
                    frozenset(states[f] for f in finals), BLANK)


def canonical_form(scheme: TMScheme):
    """Scheme with names replaced by canonical indices; equal iff isomorphic."""
    states, symbols = scheme_indexing(scheme)
    qi = {q: i for i, q in enumerate(states)}
    si = {s: i for i, s in enumerate(symbols)}
    table = frozenset(
        (qi[q], si[s], si[tr.write], tr.move, None if tr.next is None else qi[tr.next])
        for (q, s), tr in scheme.transitions.items())
    return len(states), len(symbols), frozenset(qi[f] for f in scheme.finals), table
