"""Genome replication with copy errors, and distances between the results.

A genome is a binary word stored on an alpha-machine's program tape.  One
generation is one self-copy of that tape onto the result tape while the
context draws an event per copy step; the copy is the next genome.
Nucleotide sequences map to bits two per base.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ..alpha import AlphaMachine, replicate
from ..context import (ContextEvent, EditKind, EditOp, ProbabilitySpace, apply_edit_to_word,
                       levenshtein, make_rng)

NUCLEOTIDES = "ACGT"
_TO_BITS = {"A": "00", "C": "01", "G": "10", "T": "11"}
_FROM_BITS = {v: k for k, v in _TO_BITS.items()}


def dna_to_bits(seq: str) -> str:
    try:
        return "".join(_TO_BITS[c] for c in seq.upper())
    except KeyError as exc:
        raise ValueError(f"not a nucleotide: {exc.args[0]!r}") from None


def bits_to_dna(bits: str) -> str:
    if len(bits) % 2:
        raise ValueError("odd number of bits")
    return "".join(_FROM_BITS[bits[i:i + 2]] for i in range(0, len(bits), 2))


@dataclass
class Generation:
    genome: str
    events: List[ContextEvent] = field(default_factory=list)  # concrete edits, copy-index positions
    parent: Optional[int] = None

    def as_dict(self) -> dict:
        return {"genome": self.genome, "parent": self.parent,
                "events": [e.as_dict() for e in self.events]}


@dataclass
class Lineage:
    generations: List[Generation]

    @property
    def genomes(self) -> List[str]:
        return [g.genome for g in self.generations]

    def as_dict(self) -> dict:
        return {"generations": [g.as_dict() for g in self.generations]}

    def dump(self, fh, distances: bool = True) -> None:
        doc = self.as_dict()
        if distances:
            doc["distance_matrix"] = phylo_distance_matrix(self.genomes).tolist()
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def replay_events(parent: str, events: Iterable[ContextEvent]) -> str:
    """Apply recorded copy edits, in order, to the parent."""
    word = parent
    for ev in events:
        word = apply_edit_to_word(word, ev.edit)
    return word


def _events_of(log) -> List[ContextEvent]:
    out = []
    for fx in log:
        ev = fx.event
        if not ev or ev.get("noop"):
            continue
        edit = EditOp(EditKind(ev["kind"]), ev["position"], ev.get("bit"))
        out.append(ContextEvent(ev["omega"], ev["target"], edit))
    return out


def replicate_once(genome: str, space: Optional[ProbabilitySpace], rng) -> Generation:
    """One self-copy of ``genome`` under ``space``; ``parent`` is left unset."""
    machine = AlphaMachine(genome)
    log = replicate(machine, "result", events=space, rng=rng)
    return Generation(machine.output(), _events_of(log))


def genetic_replicate(genome: str, space: Optional[ProbabilitySpace], generations: int,
                      seed: int = 0) -> Lineage:
    """A chain of ``generations`` copies, each made from the previous genome."""
    if generations < 0:
        raise ValueError("generations must be >= 0")
    for ch in genome:
        if ch not in "01":
            raise ValueError(f"genome must be binary, got {ch!r}")
    rng = make_rng(seed)
    gens = [Generation(genome)]
    for g in range(generations):
        child = replicate_once(gens[-1].genome, space, rng)
        child.parent = g
        gens.append(child)
    return Lineage(gens)


def substitution_space(rate: float) -> ProbabilitySpace:
    """Each copied bit is flipped with probability ``rate``."""
    return ProbabilitySpace.build([(ContextEvent("flip", "any", EditOp(EditKind.SUBSTITUTE, 0)),
                                    rate)])


def phylo_distance_matrix(sequences: Sequence[Sequence]) -> np.ndarray:
    if len(sequences) < 2:
        raise ValueError("need at least two sequences")
    n = len(sequences)
    out = np.zeros((n, n), dtype=int)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = levenshtein(sequences[i], sequences[j])
    return out


def random_dna(length: int, rng) -> str:
    return "".join(NUCLEOTIDES[k] for k in rng.integers(0, 4, length))


def random_bits(length: int, rng) -> str:
    return "".join("01"[k] for k in rng.integers(0, 2, length))


def mutate_dna(seq: str, substitutions: int, rng) -> str:
    """Change exactly ``substitutions`` distinct bases to a different base."""
    if not 0 <= substitutions <= len(seq):
        raise ValueError("substitution count out of range")
    out = list(seq)
    for pos in rng.choice(len(seq), size=substitutions, replace=False):
        choices = [b for b in NUCLEOTIDES if b != out[pos]]
        out[pos] = choices[int(rng.integers(0, 3))]
    return "".join(out)


def synthetic_pair(length: int, substitutions: int, seed: int = 0, tries: int = 100):
    """Two nucleotide sequences of ``length`` bases whose edit distance is ``substitutions``.

    The second is the first with exactly that many bases changed.  Nearby
    changes can sometimes be undone more cheaply by a shift (one deletion
    plus one insertion), so draws are repeated until the distance equals
    the number of changes.
    """
    rng = make_rng(seed)
    for _ in range(tries):
        a = random_dna(length, rng)
        b = mutate_dna(a, substitutions, rng)
        if levenshtein(a, b) == substitutions:
            return a, b
    raise RuntimeError(f"no pair with distance {substitutions} in {tries} draws")
