"""Feature and label propagation over normalized graph operators.

Feature propagation runs K rounds of H <- act(A_hat @ H) starting from the
raw feature matrix. Label propagation runs the same recurrence on an initial
label matrix and never re-injects the true labels between steps: training
rows drift with their neighborhoods instead of being clamped back, so the
propagated rows carry neighborhood label structure rather than copies of the
supervision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .graph import Dataset, SparseMatrix


@dataclass(frozen=True)
class FeatureRep:
    """Propagated feature matrix (n x D) and the depth that produced it."""

    H_f: np.ndarray
    K: int


@dataclass(frozen=True)
class LabelRep:
    """Propagated label matrix (n x C), its depth, and the padding row used."""

    H_l: np.ndarray
    N: int
    padding: np.ndarray


def _check_operand(op: SparseMatrix, X: np.ndarray):
    if X.ndim != 2:
        raise ShapeError(f"expected a 2-d matrix, got shape {X.shape}")
    if op.cols != X.shape[0]:
        raise ShapeError(f"operator is {op.rows}x{op.cols} but matrix has {X.shape[0]} rows")


def propagate_features(
    adj_norm: SparseMatrix, X: np.ndarray, K: int, activation: str = "identity"
) -> FeatureRep:
    """Apply K rounds of one-hop aggregation to the feature matrix.

    activation is "identity" or "relu"; K = 0 returns X unchanged.
    """
    if K < 0:
        raise ValueError("K must be >= 0")
    if activation not in ("identity", "relu"):
        raise ValueError(f"unknown activation {activation!r}")
    H = np.asarray(X, dtype=np.float64)
    _check_operand(adj_norm, H)
    for _ in range(K):
        H = adj_norm.matmul_dense(H)
        if activation == "relu":
            H = np.maximum(H, 0.0)
    return FeatureRep(H_f=H, K=K)


def init_label_matrix(dataset: Dataset, padding: str = "zero") -> np.ndarray:
    """Initial label matrix: true rows for train nodes, padding elsewhere.

    Validation and test nodes are both treated as unlabeled. padding is
    "zero" or "uniform" (each entry 1/C).
    """
    if padding not in ("zero", "uniform"):
        raise ValueError(f"unknown padding {padding!r}")
    n, c = dataset.labels.shape
    fill = 0.0 if padding == "zero" else 1.0 / c
    H0 = np.full((n, c), fill, dtype=np.float64)
    train = dataset.train_mask
    H0[train] = dataset.labels[train].astype(np.float64)
    return H0


def padding_vector(n_labels: int, padding: str) -> np.ndarray:
    if padding == "zero":
        return np.zeros(n_labels)
    if padding == "uniform":
        return np.full(n_labels, 1.0 / n_labels)
    raise ValueError(f"unknown padding {padding!r}")


def propagate_labels(adj_norm: SparseMatrix, H0: np.ndarray, N: int, transform="identity") -> LabelRep:
    """Apply N aggregation rounds to an initial label matrix, reset-free.

    There is no re-injection of true labels between steps. ``transform`` is
    applied after each aggregation: "identity", or any callable (the hook by
    which a learned per-step transform can be plugged in).
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    if transform == "identity":
        step = None
    elif callable(transform):
        step = transform
    else:
        raise ValueError(f"transform must be 'identity' or a callable, got {transform!r}")
    H = np.asarray(H0, dtype=np.float64)
    _check_operand(adj_norm, H)
    for _ in range(N):
        H = adj_norm.matmul_dense(H)
        if step is not None:
            H = step(H)
    return LabelRep(H_l=H, N=N, padding=np.zeros(H.shape[1]))


def dense_propagation_oracle(P: SparseMatrix, Y_padded: np.ndarray, N: int) -> np.ndarray:
    """Reference result P^N @ Y by dense repeated multiplication.

    Independent check for the sparse propagation path: with a row-stochastic
    P and zero rows for unlabeled nodes, every output row is a convex
    combination of training-node label rows reachable within N hops.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    dense = P.to_dense()
    out = np.asarray(Y_padded, dtype=np.float64).copy()
    for _ in range(N):
        out = dense @ out
    return out
