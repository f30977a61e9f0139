import collections

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnn_multifix import (
    Graph,
    generate_walks,
    load_embedding_csv,
    positional_distinguishability,
    save_embedding_csv,
    train_skipgram,
)
from gnn_multifix.positional import corpus_pairs, initial_embedding

from conftest import build_random_graph


def clique_edges(nodes):
    return [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1 :]]


def test_isolated_node_walk_has_length_one():
    g = Graph.from_edges(1, [])
    corpus = generate_walks(g, walk_len=10, walks_per_node=1, seed=0)
    assert [w.tolist() for w in corpus.walks] == [[0]]


def test_path_walk_is_forced():
    g = Graph.from_edges(2, [(0, 1)])
    corpus = generate_walks(g, walk_len=3, walks_per_node=1, seed=0)
    by_start = {w[0]: w.tolist() for w in corpus.walks}
    assert by_start[0] == [0, 1, 0]
    assert by_start[1] == [1, 0, 1]


def test_triangle_second_step_is_uniform():
    g = Graph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    corpus = generate_walks(g, walk_len=2, walks_per_node=10_000, seed=3)
    seconds = [int(w[1]) for w in corpus.walks if w[0] == 0]
    freq = collections.Counter(seconds)
    assert len(seconds) == 10_000
    for nxt in (1, 2):
        assert abs(freq[nxt] / 10_000 - 0.5) < 0.02


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_walk_steps_are_edges(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    g = build_random_graph(n, 2 * n, seed)
    corpus = generate_walks(g, walk_len=8, walks_per_node=2, seed=seed)
    assert len(corpus.walks) == 2 * n
    for walk in corpus.walks:
        for a, b in zip(walk[:-1], walk[1:]):
            assert g.has_edge(int(a), int(b))


def test_walks_and_embeddings_are_deterministic():
    g = build_random_graph(20, 50, seed=4)
    c1 = generate_walks(g, 10, 5, seed=9)
    c2 = generate_walks(g, 10, 5, seed=9)
    assert all(np.array_equal(a, b) for a, b in zip(c1.walks, c2.walks))
    e1 = train_skipgram(c1, 20, 8, 5, 5, 2, 0.025, seed=9)
    e2 = train_skipgram(c2, 20, 8, 5, 5, 2, 0.025, seed=9)
    assert np.array_equal(e1.vectors, e2.vectors)


def test_empty_corpus_rejected():
    from gnn_multifix.positional import WalkCorpus

    with pytest.raises(ValueError):
        train_skipgram(WalkCorpus([], 10, 1), 5, 8, 5, 5, 1, 0.025, seed=0)


def test_single_length_one_walk_keeps_initialization():
    g = Graph.from_edges(1, [])
    corpus = generate_walks(g, walk_len=5, walks_per_node=1, seed=2)
    emb = train_skipgram(corpus, 1, 8, 5, 5, 3, 0.025, seed=2)
    assert np.array_equal(emb.vectors, initial_embedding(1, 8, seed=2))


def test_two_cliques_separate():
    edges = clique_edges(range(5)) + clique_edges(range(5, 10))
    g = Graph.from_edges(10, edges)
    wins = 0
    for seed in range(5):
        corpus = generate_walks(g, 10, 10, seed)
        emb = train_skipgram(corpus, 10, 16, 5, 5, 5, 0.025, seed)
        v = emb.vectors / np.linalg.norm(emb.vectors, axis=1, keepdims=True)
        cos = v @ v.T
        intra = np.mean([cos[i, j] for i in range(10) for j in range(10) if i != j and (i < 5) == (j < 5)])
        inter = np.mean([cos[i, j] for i in range(5) for j in range(5, 10)])
        wins += intra > inter
    assert wins >= 3


def test_barbell_clique_centers_farther_than_intra():
    left, right = list(range(6)), list(range(16, 22))
    path = list(range(6, 16))
    chain = [5] + path + [16]
    edges = clique_edges(left) + clique_edges(right) + list(zip(chain[:-1], chain[1:]))
    g = Graph.from_edges(22, edges)
    wins = 0
    for seed in range(5):
        corpus = generate_walks(g, 10, 10, seed)
        emb = train_skipgram(corpus, 22, 16, 5, 5, 5, 0.025, seed)
        between = np.linalg.norm(emb.vectors[2] - emb.vectors[18])
        inside = np.linalg.norm(emb.vectors[2] - emb.vectors[3])
        wins += between > inside
    assert wins >= 4


def test_path_leaves_farther_than_adjacent_pairs():
    g = Graph.from_edges(20, list(zip(range(19), range(1, 20))))
    wins = 0
    for seed in range(5):
        corpus = generate_walks(g, 10, 10, seed)
        emb = train_skipgram(corpus, 20, 16, 5, 5, 5, 0.025, seed)
        leaves = positional_distinguishability(g, emb, 0, 19)
        adjacent = np.median(
            [np.linalg.norm(emb.vectors[i] - emb.vectors[i + 1]) for i in range(19)]
        )
        wins += leaves > adjacent
    assert wins >= 4


def test_training_reduces_corpus_loss():
    g = build_random_graph(30, 90, seed=6)
    corpus = generate_walks(g, 10, 10, seed=6)
    _, trace = train_skipgram(corpus, 30, 16, 5, 5, 5, 0.025, seed=6, return_trace=True)
    assert trace["final_loss"] <= trace["initial_loss"]


def test_cooccurrence_aligns_with_dot_products():
    # trained similarity should rise with how often two nodes co-occur
    # inside the walk window
    for seed in (0, 1, 2):
        g = build_random_graph(30, 60, seed=100 + seed)
        corpus = generate_walks(g, 10, 10, seed=seed)
        emb = train_skipgram(corpus, 30, 16, 5, 5, 5, 0.025, seed=seed)
        pairs = corpus_pairs(corpus, window=5)
        counts = collections.Counter((min(a, b), max(a, b)) for a, b in pairs.tolist())
        rng = np.random.default_rng(seed)
        sample = [(u, v) for u in range(30) for v in range(u + 1, 30)]
        dots = np.array([emb.vectors[u] @ emb.vectors[v] for u, v in sample])
        cooc = np.array([counts.get((u, v), 0) for u, v in sample], dtype=float)
        r = np.corrcoef(cooc, dots)[0, 1]
        assert r > 0


def test_distinguishability_values():
    g = Graph.from_edges(2, [(0, 1)])
    from gnn_multifix.positional import PositionalEmbedding

    emb = PositionalEmbedding(vectors=np.array([[1.0, 0.0], [0.0, 1.0]]), dim=2)
    assert positional_distinguishability(g, emb, 0, 1) == pytest.approx(np.sqrt(2))
    same = PositionalEmbedding(vectors=np.zeros((2, 2)), dim=2)
    assert positional_distinguishability(g, same, 0, 1) == 0.0
    with pytest.raises(ValueError):
        positional_distinguishability(g, emb, 1, 1)


def test_embedding_csv_round_trip(tmp_path):
    g = build_random_graph(10, 30, seed=8)
    corpus = generate_walks(g, 5, 3, seed=8)
    emb = train_skipgram(corpus, 10, 6, 3, 3, 2, 0.025, seed=8)
    path = tmp_path / "emb.csv"
    save_embedding_csv(emb, path)
    back = load_embedding_csv(path)
    assert back.dim == emb.dim
    assert np.array_equal(back.vectors, emb.vectors)
