"""Reference predictors: neighbor vote, feature-only MLP, walk embeddings.

majority_vote is training-free. The other two reuse the model-module trainer
with the non-relevant blocks disabled, so they share its loss, early
stopping, and determinism contracts.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import Dataset
from .model import ModelConfig, compute_representations, predict, train


@dataclass(frozen=True)
class BaselineOutput:
    probs: np.ndarray
    method: str
    coverage: float | None = None


def majority_vote(dataset: Dataset) -> BaselineOutput:
    """Normalized label votes of each node's train-set neighbors.

    For every non-train node the votes over labels are summed across its
    direct train neighbors and divided by the total vote count, so covered
    rows sum to 1. Nodes without any train neighbor fall back to the global
    train-set label frequency (also normalized); coverage reports the
    fraction of test nodes that did not need the fallback. Train rows carry
    their true labels.
    """
    if not dataset.train_mask.any():
        raise ValueError("majority vote needs a nonempty train set")
    n, c = dataset.labels.shape
    y = dataset.labels.astype(np.float64)
    train = dataset.train_mask

    counts = y[train].sum(axis=0)
    total = counts.sum()
    fallback = counts / total if total > 0 else np.full(c, 1.0 / c)

    probs = np.empty((n, c), dtype=np.float64)
    covered = np.zeros(n, dtype=bool)
    graph = dataset.graph
    for v in range(n):
        if train[v]:
            probs[v] = y[v]
            covered[v] = True
            continue
        nb = graph.neighbors(v)
        nb = nb[train[nb]]
        votes = y[nb].sum(axis=0) if len(nb) else np.zeros(c)
        s = votes.sum()
        if len(nb) and s > 0:
            probs[v] = votes / s
            covered[v] = True
        else:
            probs[v] = fallback
    n_test = int(dataset.test_mask.sum())
    coverage = float(covered[dataset.test_mask].mean()) if n_test else 1.0
    return BaselineOutput(probs=probs, method="majority_vote", coverage=coverage)


def mlp_baseline(dataset: Dataset, config: ModelConfig) -> BaselineOutput:
    """Feature-only classifier: the readout trained on raw X (K = 0)."""
    cfg = replace(config, enable_fr=True, enable_lr=False, enable_pe=False, K=0)
    model, _, _ = train(dataset, cfg)
    return BaselineOutput(probs=predict(model, dataset), method="mlp")


def deepwalk_baseline(dataset: Dataset, config: ModelConfig) -> BaselineOutput:
    """Structure-only classifier: the readout trained on walk embeddings."""
    cfg = replace(config, enable_fr=False, enable_lr=False, enable_pe=True)
    _, _, pe, _ = compute_representations(dataset, cfg)
    model, _, _ = train(dataset, cfg, pe=pe)
    return BaselineOutput(probs=predict(model, dataset, pe=pe), method="deepwalk")
