"""Positional node embeddings from truncated random walks.

Walks are generated per start node with independent RNG substreams, so the
corpus content is the same no matter how generation is scheduled. Embeddings
are trained with skip-gram and negative sampling over (center, context)
pairs inside a sliding window; negatives are drawn from the corpus unigram
distribution raised to 0.75. Only the input-side embeddings are kept.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DatasetParseError
from .graph import Graph
from .rng import substream


@dataclass(frozen=True)
class WalkCorpus:
    walks: list
    walk_len: int
    walks_per_node: int


@dataclass(frozen=True)
class PositionalEmbedding:
    vectors: np.ndarray
    dim: int


def generate_walks(graph: Graph, walk_len: int, walks_per_node: int, seed: int) -> WalkCorpus:
    """Uniform random walks, walks_per_node of them from every node.

    A walk stops early at a node with no neighbors, so isolated nodes yield
    length-1 walks. Each start node draws from its own substream; the corpus
    lists pass 0 for all nodes (in a seeded shuffled order), then pass 1, ...
    """
    if walk_len < 1 or walks_per_node < 1:
        raise ValueError("walk_len and walks_per_node must be >= 1")
    n = graph.n
    per_node: list[list[np.ndarray]] = []
    for v in range(n):
        rng = substream(seed, "walks", v)
        walks_v = []
        for _ in range(walks_per_node):
            steps = rng.random(walk_len - 1)
            walk = [v]
            cur = v
            for u in steps:
                nb = graph.neighbors(cur)
                if len(nb) == 0:
                    break
                cur = int(nb[int(u * len(nb))])
                walk.append(cur)
            walks_v.append(np.asarray(walk, dtype=np.int64))
        per_node.append(walks_v)
    walks = []
    for p in range(walks_per_node):
        order = substream(seed, "walk-order", p).permutation(n)
        walks.extend(per_node[v][p] for v in order)
    return WalkCorpus(walks=walks, walk_len=walk_len, walks_per_node=walks_per_node)


def corpus_pairs(corpus: WalkCorpus, window: int) -> np.ndarray:
    """All (center, context) pairs within the window, as an (m, 2) array."""
    chunks = []
    for walk in corpus.walks:
        L = len(walk)
        if L < 2:
            continue
        for off in range(1, min(window, L - 1) + 1):
            a, b = walk[:-off], walk[off:]
            chunks.append(np.column_stack([a, b]))
            chunks.append(np.column_stack([b, a]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


def unigram_table(corpus: WalkCorpus, n: int, power: float = 0.75) -> np.ndarray:
    """Negative-sampling distribution: corpus occurrence counts ** power."""
    counts = np.zeros(n, dtype=np.float64)
    for walk in corpus.walks:
        np.add.at(counts, walk, 1.0)
    weights = counts**power
    total = weights.sum()
    if total == 0:
        raise ValueError("empty corpus")
    return weights / total


def initial_embedding(n: int, dim: int, seed: int) -> np.ndarray:
    """Input-embedding initialization: uniform in (-0.5, 0.5) / dim."""
    rng = substream(seed, "sgns-init")
    return (rng.random((n, dim)) - 0.5) / dim


def _pair_loss(emb_in, emb_out, centers, contexts, negatives):
    pos = _sigmoid(np.einsum("ij,ij->i", emb_in[centers], emb_out[contexts]))
    neg = _sigmoid(-np.einsum("ij,ikj->ik", emb_in[centers], emb_out[negatives]))
    eps = 1e-12
    return float(-(np.log(pos + eps).sum() + np.log(neg + eps).sum()) / len(centers))


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    np.clip(x, -500, 500, out=out)
    return 1.0 / (1.0 + np.exp(-out))


def _sample_negatives(rng, cdf, shape):
    return np.searchsorted(cdf, rng.random(shape), side="right")


def train_skipgram(
    corpus: WalkCorpus,
    n: int,
    dim: int,
    window: int,
    neg_samples: int,
    epochs: int,
    lr: float,
    seed: int,
    batch_size: int = 4096,
    workers: int = 1,
    return_trace: bool = False,
):
    """Train skip-gram embeddings with negative sampling over the corpus.

    Minibatched SGD with a linearly decaying learning rate; deterministic
    given the seed when workers == 1. With workers > 1 batches are applied
    concurrently without ordering guarantees (no determinism). Returns the
    input embeddings; with return_trace=True also returns a dict holding the
    discarded output embeddings and loss before/after training on a fixed
    evaluation sample.
    """
    if dim < 1 or window < 1 or neg_samples < 1:
        raise ValueError("dim, window, and neg_samples must be >= 1")
    if not corpus.walks:
        raise ValueError("empty corpus")
    # batched updates accumulate every pair that touches a node; keep the
    # per-node step bounded by sizing batches relative to the vocabulary
    batch_size = max(64, min(batch_size, 4 * n))
    emb_in = initial_embedding(n, dim, seed)
    emb_out = np.zeros((n, dim), dtype=np.float64)

    pairs = corpus_pairs(corpus, window)
    trace = {}
    if len(pairs) > 0:
        noise = unigram_table(corpus, n)
        cdf = np.cumsum(noise)
        cdf[-1] = 1.0

        eval_rng = substream(seed, "sgns-eval")
        m_eval = min(len(pairs), 20000)
        eval_neg = _sample_negatives(eval_rng, cdf, (m_eval, neg_samples))
        trace["initial_loss"] = _pair_loss(
            emb_in, emb_out, pairs[:m_eval, 0], pairs[:m_eval, 1], eval_neg
        )

        n_batches_per_epoch = (len(pairs) + batch_size - 1) // batch_size
        total_batches = max(1, epochs * n_batches_per_epoch)
        done = 0
        for epoch in range(epochs):
            order = substream(seed, "sgns-order", epoch).permutation(len(pairs))
            neg_rng = substream(seed, "sgns-neg", epoch)
            batches = [order[i : i + batch_size] for i in range(0, len(order), batch_size)]
            rates = [
                max(lr * (1.0 - (done + j) / total_batches), lr * 1e-3)
                for j in range(len(batches))
            ]
            done += len(batches)
            if workers <= 1:
                for batch, rate in zip(batches, rates):
                    negs = _sample_negatives(neg_rng, cdf, (len(batch), neg_samples))
                    _apply_batch(emb_in, emb_out, pairs[batch], negs, rate)
            else:
                negs_all = [
                    _sample_negatives(neg_rng, cdf, (len(b), neg_samples)) for b in batches
                ]
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    list(
                        pool.map(
                            lambda bnr: _apply_batch(emb_in, emb_out, pairs[bnr[0]], bnr[1], bnr[2]),
                            zip(batches, negs_all, rates),
                        )
                    )

        trace["final_loss"] = _pair_loss(
            emb_in, emb_out, pairs[:m_eval, 0], pairs[:m_eval, 1], eval_neg
        )
    trace["emb_out"] = emb_out
    trace["n_pairs"] = int(len(pairs))
    embedding = PositionalEmbedding(vectors=emb_in, dim=dim)
    return (embedding, trace) if return_trace else embedding


def _apply_batch(emb_in, emb_out, batch_pairs, negatives, lr):
    c = batch_pairs[:, 0]
    x = batch_pairs[:, 1]
    vc = emb_in[c]
    ux = emb_out[x]
    uz = emb_out[negatives]

    s_pos = _sigmoid(np.einsum("ij,ij->i", vc, ux))
    s_neg = _sigmoid(np.einsum("ij,ikj->ik", vc, uz))

    g_pos = s_pos - 1.0
    grad_vc = g_pos[:, None] * ux + np.einsum("ik,ikj->ij", s_neg, uz)
    grad_ux = g_pos[:, None] * vc
    grad_uz = s_neg[:, :, None] * vc[:, None, :]

    np.add.at(emb_in, c, -lr * grad_vc)
    np.add.at(emb_out, x, -lr * grad_ux)
    np.add.at(emb_out, negatives.ravel(), -lr * grad_uz.reshape(-1, emb_out.shape[1]))


def positional_distinguishability(graph: Graph, emb: PositionalEmbedding, u: int, v: int) -> float:
    """Euclidean distance between the embeddings of two distinct nodes."""
    if u == v:
        raise ValueError("u and v must differ")
    return float(np.linalg.norm(emb.vectors[u] - emb.vectors[v]))


def save_embedding_csv(emb: PositionalEmbedding, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node_id," + ",".join(f"e_{i}" for i in range(emb.dim)) + "\n")
        for v, row in enumerate(emb.vectors):
            fh.write(str(v) + "," + ",".join(repr(float(x)) for x in row) + "\n")


def load_embedding_csv(path) -> PositionalEmbedding:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("node_id,"):
            raise DatasetParseError(path, 1, "missing embedding CSV header")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            try:
                rows.append((int(parts[0]), [float(x) for x in parts[1:]]))
            except ValueError:
                raise DatasetParseError(path, line_no, "malformed embedding row") from None
    rows.sort(key=lambda r: r[0])
    vectors = np.asarray([r[1] for r in rows], dtype=np.float64)
    return PositionalEmbedding(vectors=vectors, dim=vectors.shape[1])
