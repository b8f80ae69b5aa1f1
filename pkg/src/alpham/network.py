"""Networks of α-machines.

A round samples at most one context event, then steps every machine once in
a seeded random order.  Messages travel over channels:

* ``direct``: the payload is queued and written into the receiver's context
  region (work-tape cells -1, -2, ...) at the start of its next step;
* ``shared``: the endpoints use one common work tape; a send writes the
  payload into that tape's context region immediately;
* ``rendezvous``: the sender is frozen (its step is a no-op, r included)
  until a receiver executes ``RECV`` on the channel, and the payload lands
  on the receiver's tape in that very step.
"""
from __future__ import annotations

import enum
import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .alpha import AlphaMachine, Message, StepEffects, alpha_step
from .context import ANY, ProbabilitySpace, apply_event, make_rng, sample_event
from .tape import BLANK, Tape, binary_tape

SCHEMA = "alpham.netlog/1"


class Mode(enum.Enum):
    DIRECT = "direct"
    SHARED = "shared"
    RENDEZVOUS = "rendezvous"


@dataclass
class Channel:
    cid: str
    mode: Mode
    endpoints: Tuple[str, ...]
    tape_id: Optional[str] = None


@dataclass
class Network:
    machines: Dict[str, AlphaMachine]
    channels: List[Channel] = field(default_factory=list)
    seed: int = 0
    space: Optional[ProbabilitySpace] = None
    step: int = 0
    event_log: List[dict] = field(default_factory=list)
    inboxes: Dict[str, List[Message]] = field(default_factory=lambda: defaultdict(list))
    offers: Dict[str, List[Tuple[str, Message]]] = field(default_factory=lambda: defaultdict(list))
    blocked: Dict[str, str] = field(default_factory=dict)
    blocked_rounds: Dict[str, int] = field(default_factory=lambda: defaultdict(int))
    shared: Dict[str, Tape] = field(default_factory=dict)
    messages: List[Message] = field(default_factory=list)

    def __post_init__(self):
        for ch in self.channels:
            if ch.mode is Mode.SHARED:
                tape = self.shared.setdefault(ch.tape_id or ch.cid, binary_tape(""))
                for mid in ch.endpoints:
                    self.machines[mid].work = tape

    def channel(self, cid: str) -> Optional[Channel]:
        for ch in self.channels:
            if ch.cid == cid:
                return ch
        return None

    def tape_id_of(self, mid: str) -> Optional[str]:
        work = self.machines[mid].work
        for tid, tape in self.shared.items():
            if tape is work:
                return tid
        return None

    @classmethod
    def from_spec(cls, spec: dict, seed: Optional[int] = None,
                  space: Optional[ProbabilitySpace] = None) -> "Network":
        machines = {}
        for i, ms in enumerate(spec.get("machines", [])):
            ms = dict(ms)
            ms.setdefault("id", f"m{i}")
            m = AlphaMachine.from_spec(ms)
            if m.machine_id in machines:
                raise ValueError(f"duplicate machine id {m.machine_id!r}")
            machines[m.machine_id] = m
        channels = []
        shared_init = {}
        for k, cs in enumerate(spec.get("channels", [])):
            mode = Mode(cs["mode"])
            eps = tuple(str(e) for e in cs["endpoints"])
            for e in eps:
                if e not in machines:
                    raise ValueError(f"channel ch{k}: unknown endpoint {e!r}")
            tid = cs.get("tape", f"ch{k}") if mode is Mode.SHARED else None
            if tid is not None and "init" in cs:
                shared_init[tid] = cs["init"]
            channels.append(Channel(f"ch{k}", mode, eps, tid))
        if space is None and spec.get("events"):
            space = ProbabilitySpace.from_spec(spec["events"])
        shared = {tid: binary_tape(w) for tid, w in shared_init.items()}
        return cls(machines, channels, int(spec.get("seed", 0) if seed is None else seed), space,
                   shared=shared)


@dataclass
class RoundLog:
    step: int
    order: List[str]
    records: List[dict]
    shared_ops: List[dict]
    event: Optional[dict] = None


def _tape_diff_ops(before: Tuple[int, Tuple[str, ...]], after: Tape) -> List[Tuple[int, str]]:
    lo_b, cells_b = before
    lo_a, cells_a = after.snapshot()
    old = {lo_b + i: s for i, s in enumerate(cells_b)}
    new = {lo_a + i: s for i, s in enumerate(cells_a)}
    return [(p, new.get(p, BLANK)) for p in sorted(set(old) | set(new))
            if old.get(p, BLANK) != new.get(p, BLANK)]


def network_step(net: Network, rng: np.random.Generator) -> RoundLog:
    t = net.step
    ids = list(net.machines)
    event, target, ev_note = None, None, None
    if net.space is not None:
        event = sample_event(net.space, rng)
        if event is not None:
            if event.target == ANY:
                target = ids[int(rng.integers(0, len(ids)))]
            elif event.target in net.machines:
                target = event.target
            else:
                ev_note = {"step": t, "machine": None,
                           "effect": {"routing_error": f"unknown event target {event.target!r}"}}
    order = [ids[i] for i in rng.permutation(len(ids))]
    records, ops = [], []
    if ev_note:
        records.append(ev_note)
    seq = itertools.count()

    def log_op(mid, kind, cell, value):
        tid = net.tape_id_of(mid)
        if tid is not None:
            ops.append({"seq": next(seq), "machine": mid, "op": kind, "tape": tid,
                        "cell": cell, "value": value})

    for mid in order:
        m = net.machines[mid]
        ev_m = event if target == mid else None
        if m.done or mid in net.blocked:
            effect = {"stopped": m.os_state} if m.done else {"blocked": net.blocked[mid]}
            if mid in net.blocked and not m.done:
                net.blocked_rounds[mid] += 1
            if ev_m is not None:
                before = m.work.snapshot()
                applied = apply_event(ev_m, m, rng)
                effect["event"] = applied.event.as_dict()
                for cell, val in _tape_diff_ops(before, m.work):
                    log_op(mid, "w", cell, val)
            records.append({"step": t, "machine": mid, "effect": effect})
            continue
        inbox = net.inboxes.pop(mid, [])
        for msg in inbox:
            msg.delivered_step = t
        before = m.work.snapshot()
        _, fx = alpha_step(m, inbox, ev_m, rng)
        if net.tape_id_of(mid) is not None:
            for cell, val in fx.delivered:
                log_op(mid, "w", cell, val)
            if fx.event is not None and not fx.event.get("transit"):
                # edits may shift cells; log every cell whose content changed
                mid_snap = _rebuild_before_event(before, fx)
                for cell, val in _tape_diff_ops(mid_snap, _after_event_tape(mid_snap, fx)):
                    log_op(mid, "w", cell, val)
            if fx.work_read is not None:
                log_op(mid, "r", fx.work_pos, fx.work_read)
            if fx.work_write is not None:
                log_op(mid, "w", fx.work_write[0], fx.work_write[1])
        for msg in fx.messages_out:
            msg.issued_step = t
            _route(net, mid, msg, records, log_op)
        if fx.recv is not None:
            _receive(net, mid, f"ch{fx.recv}", fx, t, log_op)
        records.append({"step": t, "machine": mid, "effect": fx.as_dict()})
    net.step += 1
    net.event_log.extend(records)
    ev_dict = None
    if event is not None:
        ev_dict = {**event.as_dict(), "resolved_target": target}
    return RoundLog(t, order, records, ops, ev_dict)


def _rebuild_before_event(before, fx: StepEffects):
    # the snapshot preceded message delivery; replay delivery writes onto it
    tape = Tape(list(before[1]), alphabet={"0", "1", BLANK})
    tape.offset = -before[0]
    for cell, val in fx.delivered:
        tape.write(cell, val)
    return tape.snapshot()


def _after_event_tape(snap, fx: StepEffects) -> Tape:
    from .context import EditKind, EditOp, apply_edit_to_tape

    tape = Tape(list(snap[1]), alphabet={"0", "1", BLANK})
    tape.offset = -snap[0]
    if not fx.event.get("noop"):
        e = fx.event
        apply_edit_to_tape(tape, EditOp(EditKind(e["kind"]), e["position"], e.get("bit")))
    return tape


def _route(net: Network, src: str, msg: Message, records: list, log_op) -> None:
    ch = net.channel(msg.dst)
    if ch is None:
        records.append({"step": msg.issued_step, "machine": src,
                        "effect": {"routing_error": f"unknown channel {msg.dst!r}"}})
        return
    if ch.mode is Mode.DIRECT:
        for dst in ch.endpoints:
            if dst != src:
                copy = Message(src, dst, msg.payload, msg.issued_step)
                net.inboxes[dst].append(copy)
                net.messages.append(copy)
        return
    net.messages.append(msg)
    if ch.mode is Mode.SHARED:
        tape = net.shared[ch.tape_id]
        for cell, val in tape.append_context(msg.payload):
            log_op(src, "w", cell, val)
        msg.delivered_step = msg.issued_step
    else:
        net.offers[ch.cid].append((src, msg))
        net.blocked[src] = ch.cid


def _receive(net: Network, mid: str, cid: str, fx: StepEffects, t: int, log_op) -> None:
    ch = net.channel(cid)
    if ch is None or ch.mode is not Mode.RENDEZVOUS:
        return
    queue = net.offers[cid]
    for i, (src, msg) in enumerate(queue):
        if src != mid:
            del queue[i]
            break
    else:
        return
    m = net.machines[mid]
    touched = m.work.append_context(msg.payload)
    fx.received.extend(touched)
    for cell, val in touched:
        log_op(mid, "w", cell, val)
    msg.delivered_step = t
    fx.rendezvous_from = src
    net.blocked.pop(src, None)


def run_network(net: Network, rounds: int, rng: Optional[np.random.Generator] = None) -> List[RoundLog]:
    if rng is None:
        rng = make_rng(net.seed)
    return [network_step(net, rng) for _ in range(rounds)]


def dump_event_log(net: Network, fh) -> None:
    fh.write(json.dumps({"schema": SCHEMA, "seed": net.seed, "machines": list(net.machines),
                         "rounds": net.step}, sort_keys=True) + "\n")
    for rec in net.event_log:
        fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- serializability ------------------------------------------------------------------

@dataclass(frozen=True)
class Serializable:
    order: Tuple[str, ...]


@dataclass(frozen=True)
class Conflict:
    cycle: Tuple[str, ...]
    evidence: Tuple[dict, ...] = ()


def _initial_values(ops: Sequence[dict]) -> Dict[Tuple[str, int], str]:
    """Cell values before the round, as far as the log reveals them."""
    init, written = {}, set()
    for op in ops:
        key = (op["tape"], op["cell"])
        if op["op"] == "r" and key not in written and key not in init:
            init[key] = op["value"]
        elif op["op"] == "w":
            written.add(key)
    return init


def final_values(ops: Sequence[dict]) -> Dict[Tuple[str, int], str]:
    out = {}
    for op in ops:
        if op["op"] == "w":
            out[(op["tape"], op["cell"])] = op["value"]
    return out


def serial_replay_matches(ops: Sequence[dict], order: Sequence[str]) -> bool:
    """Does running whole transactions in ``order`` reproduce every read and the final tape?"""
    by_tx = defaultdict(list)
    for op in ops:
        by_tx[op["machine"]].append(op)
    state = dict(_initial_values(ops))
    for tx in order:
        for op in by_tx.get(tx, []):
            key = (op["tape"], op["cell"])
            if op["op"] == "w":
                state[key] = op["value"]
            elif state.get(key, op["value"]) != op["value"]:
                return False
            else:
                state.setdefault(key, op["value"])
    fin = final_values(ops)
    return all(state.get(k) == v for k, v in fin.items())


def serialize_check(ops: Sequence[dict]):
    """Conflict-serializability of one round's shared-tape operations.

    Transactions are machines.  Returns a verified witness order, or the
    first cycle of the conflict graph.
    """
    ops = list(ops)
    txs = list(dict.fromkeys(op["machine"] for op in ops))
    edges: Dict[str, set] = {t: set() for t in txs}
    why = {}
    for i, a in enumerate(ops):
        for b in ops[i + 1:]:
            if a["machine"] == b["machine"] or a["tape"] != b["tape"] or a["cell"] != b["cell"]:
                continue
            if a["op"] == "r" and b["op"] == "r":
                continue
            if b["machine"] not in edges[a["machine"]]:
                edges[a["machine"]].add(b["machine"])
                why[(a["machine"], b["machine"])] = (a, b)
    cycle = _find_cycle(txs, edges)
    if cycle:
        evidence = tuple(why[(cycle[i], cycle[(i + 1) % len(cycle)])][j]
                         for i in range(len(cycle)) for j in (0, 1))
        return Conflict(tuple(cycle), evidence)
    order = _topo(txs, edges)
    if not serial_replay_matches(ops, order):
        return Conflict((), tuple(ops))
    return Serializable(tuple(order))


def _find_cycle(nodes: List[str], edges: Dict[str, set]) -> Optional[List[str]]:
    color = {n: 0 for n in nodes}
    stack: List[str] = []

    def visit(n):
        color[n] = 1
        stack.append(n)
        for nxt in sorted(edges[n], key=nodes.index):
            if color[nxt] == 1:
                return stack[stack.index(nxt):]
            if color[nxt] == 0:
                found = visit(nxt)
                if found:
                    return found
        stack.pop()
        color[n] = 2
        return None

    for n in nodes:
        if color[n] == 0:
            found = visit(n)
            if found:
                return list(found)
    return None


def _topo(nodes: List[str], edges: Dict[str, set]) -> List[str]:
    indeg = {n: 0 for n in nodes}
    for n in nodes:
        for m in edges[n]:
            indeg[m] += 1
    ready = [n for n in nodes if indeg[n] == 0]
    out = []
    while ready:
        n = ready.pop(0)
        out.append(n)
        for m in sorted(edges[n], key=nodes.index):
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
        ready.sort(key=nodes.index)
    return out
