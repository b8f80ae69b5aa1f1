import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alpham.context import ProbabilitySpace, levenshtein, make_rng
from alpham.scenarios.genome import (bits_to_dna, dna_to_bits, genetic_replicate, mutate_dna,
                                     phylo_distance_matrix, random_bits, random_dna,
                                     replay_events, substitution_space, synthetic_pair)

from oracles import levenshtein_np

MIXED = ProbabilitySpace.from_spec([{"kind": "substitute", "probability": 0.02},
                                    {"kind": "insert", "probability": 0.01},
                                    {"kind": "delete", "probability": 0.01}])


def test_dna_recoding():
    assert dna_to_bits("ACGT") == "00011011"
    assert bits_to_dna("00011011") == "ACGT"
    with pytest.raises(ValueError):
        dna_to_bits("ACGU")


@given(st.text(alphabet="ACGT", max_size=50))
def test_dna_round_trip(seq):
    assert bits_to_dna(dna_to_bits(seq)) == seq


def test_no_events_no_change():
    g = random_bits(64, make_rng(0))
    lin = genetic_replicate(g, ProbabilitySpace.empty(), 5, seed=1)
    assert lin.genomes == [g] * 6
    assert not phylo_distance_matrix(lin.genomes).any()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_lineage_replays_and_distance_bounded_by_events(seed):
    g = random_bits(int(make_rng(seed).integers(1, 120)), make_rng(seed))
    lin = genetic_replicate(g, MIXED, 4, seed=seed)
    for parent, child in zip(lin.generations, lin.generations[1:]):
        assert replay_events(parent.genome, child.events) == child.genome
        assert levenshtein(parent.genome, child.genome) <= len(child.events)


def test_substitution_count_matches_binomial_model():
    mu, length, seeds = 0.01, 1134, 200
    space = substitution_space(mu)
    counts = []
    for s in range(seeds):
        g = random_bits(length, make_rng(10_000 + s))
        child = genetic_replicate(g, space, 1, seed=s).generations[1]
        counts.append(len(child.events))
        assert sum(a != b for a, b in zip(g, child.genome)) == len(child.events)
    mean = np.mean(counts)
    sigma_mean = math.sqrt(length * mu * (1 - mu) / seeds)
    assert abs(mean - length * mu) <= 3 * sigma_mean


def test_rejects_non_binary_genome():
    with pytest.raises(ValueError):
        genetic_replicate("01a", None, 1)


def test_identical_sequences_give_zero_matrix():
    assert not phylo_distance_matrix(["0101"] * 4).any()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.text(alphabet="ACGT", max_size=12), min_size=2, max_size=6))
def test_distance_matrix_is_a_metric(seqs):
    m = phylo_distance_matrix(seqs)
    n = len(seqs)
    assert (m == m.T).all() and not np.diag(m).any()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                assert m[i, k] <= m[i, j] + m[j, k]


@pytest.mark.parametrize("k", [31, 120])
def test_synthetic_pairs_have_exact_distance(k):
    a, b = synthetic_pair(1134, k, seed=0)
    assert len(a) == len(b) == 1134
    assert sum(x != y for x, y in zip(a, b)) == k
    assert levenshtein(a, b) == k == levenshtein_np(a, b)


def test_mutate_changes_exactly_k_bases():
    rng = make_rng(2)
    a = random_dna(300, rng)
    b = mutate_dna(a, 25, rng)
    assert sum(x != y for x, y in zip(a, b)) == 25


def test_lineage_dump_is_json_with_matrix():
    lin = genetic_replicate("0110", substitution_space(0.5), 2, seed=3)
    buf = io.StringIO()
    lin.dump(buf)
    doc = json.loads(buf.getvalue())
    assert len(doc["generations"]) == 3 and len(doc["distance_matrix"]) == 3
    assert doc["generations"][2]["parent"] == 1
