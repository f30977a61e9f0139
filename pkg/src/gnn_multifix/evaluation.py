"""Average-precision evaluation, training-dynamics export, homophily recovery.

AP follows the rank-sum definition (mean precision at each positive's rank,
no interpolation). Score ties are broken by ascending flat index so every
mode is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetParseError, UndefinedMetricError
from .graph import Dataset, Graph, jaccard_per_edge

HEADLINE_AP_MODE = "samples"


@dataclass(frozen=True)
class EvalReport:
    ap_micro: float
    ap_macro: float
    ap_samples: float
    split: str
    n_eval: int
    headline: str = HEADLINE_AP_MODE

    def headline_value(self) -> float:
        return getattr(self, f"ap_{self.headline}")

    def to_dict(self) -> dict:
        return {
            "ap_micro": self.ap_micro,
            "ap_macro": self.ap_macro,
            "ap_samples": self.ap_samples,
            "split": self.split,
            "n_eval": self.n_eval,
            "headline": self.headline,
        }


def _binary_ap(scores: np.ndarray, truth: np.ndarray) -> float | None:
    """AP of one ranking; None when there are no positives."""
    n_pos = int(truth.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-scores, kind="stable")
    hits = truth[order].astype(bool)
    ranks = np.flatnonzero(hits) + 1
    precision_at_hits = np.arange(1, n_pos + 1) / ranks
    return float(precision_at_hits.mean())


def average_precision(scores: np.ndarray, truth: np.ndarray, mode: str = "samples") -> float:
    """AP over an (m, C) score matrix against binary truth.

    micro ranks all m*C entries at once, macro averages per-label AP over
    labels with at least one positive, samples averages per-row AP over rows
    with at least one positive.
    """
    scores = np.asarray(scores, dtype=np.float64)
    truth = np.asarray(truth)
    if scores.shape != truth.shape:
        raise ValueError(f"scores {scores.shape} and truth {truth.shape} differ")
    if mode == "micro":
        ap = _binary_ap(scores.ravel(), truth.ravel())
        if ap is None:
            raise UndefinedMetricError("micro AP undefined: no positive entries")
        return ap
    if mode == "macro":
        per_label = [_binary_ap(scores[:, c], truth[:, c]) for c in range(scores.shape[1])]
        vals = [a for a in per_label if a is not None]
        if not vals:
            raise UndefinedMetricError("macro AP undefined: no label has a positive")
        return float(np.mean(vals))
    if mode == "samples":
        per_row = [_binary_ap(scores[i], truth[i]) for i in range(scores.shape[0])]
        vals = [a for a in per_row if a is not None]
        if not vals:
            raise UndefinedMetricError("samples AP undefined: no row has a positive")
        return float(np.mean(vals))
    raise ValueError(f"unknown AP mode {mode!r}")


def evaluate(probs: np.ndarray, dataset: Dataset, split: str) -> EvalReport:
    """All three AP modes on the rows selected by the named split mask."""
    masks = {"train": dataset.train_mask, "val": dataset.val_mask, "test": dataset.test_mask}
    if split not in masks:
        raise ValueError(f"unknown split {split!r}")
    mask = masks[split]
    if not mask.any():
        raise ValueError(f"split {split!r} is empty")
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != dataset.labels.shape:
        raise ValueError(f"probs {probs.shape} do not match labels {dataset.labels.shape}")
    s = probs[mask]
    t = dataset.labels[mask]
    return EvalReport(
        ap_micro=average_precision(s, t, "micro"),
        ap_macro=average_precision(s, t, "macro"),
        ap_samples=average_precision(s, t, "samples"),
        split=split,
        n_eval=int(mask.sum()),
    )


@dataclass(frozen=True)
class DynamicsLog:
    """Per-checkpoint losses of each training node.

    ``losses[i, j]`` is the loss of train node ``node_ids[j]`` at checkpoint
    i (recorded after epoch ``epochs[i]``). Runs of >= 30 epochs carry
    exactly 30 uniformly spaced checkpoints, shorter runs one per epoch.
    """

    node_ids: np.ndarray
    epochs: np.ndarray
    losses: np.ndarray

    @property
    def checkpoints(self):
        return [(int(e), self.losses[i]) for i, e in enumerate(self.epochs)]

    @property
    def n_checkpoints(self) -> int:
        return len(self.epochs)


def checkpoint_epochs(total_epochs: int, target: int = 30) -> np.ndarray:
    """Uniformly spaced 1-based checkpoint epochs; all epochs if fewer."""
    if total_epochs < 1:
        raise ValueError("no completed epochs")
    if total_epochs <= target:
        return np.arange(1, total_epochs + 1, dtype=np.int64)
    idx = np.rint(np.arange(target) * (total_epochs - 1) / (target - 1)).astype(np.int64)
    return idx + 1


def export_dynamics(log: DynamicsLog, out_path):
    """Write the per-node loss table plus a per-checkpoint summary.

    The data CSV has columns checkpoint_index,epoch,node_id,loss; the
    summary (same name with _summary suffix) carries quartiles and max.
    Output is byte-deterministic for a given log.
    """
    if log.n_checkpoints == 0:
        raise ValueError("empty dynamics log")
    out_path = Path(out_path)
    summary_path = out_path.with_name(out_path.stem + "_summary" + out_path.suffix)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write("checkpoint_index,epoch,node_id,loss\n")
        for i, epoch in enumerate(log.epochs):
            for j, node in enumerate(log.node_ids):
                fh.write(f"{i},{int(epoch)},{int(node)},{repr(float(log.losses[i, j]))}\n")
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write("checkpoint_index,epoch,q1,median,q3,max\n")
        for i, epoch in enumerate(log.epochs):
            q1, med, q3 = np.percentile(log.losses[i], [25, 50, 75])
            mx = log.losses[i].max()
            fh.write(
                f"{i},{int(epoch)},{repr(float(q1))},{repr(float(med))},"
                f"{repr(float(q3))},{repr(float(mx))}\n"
            )
    return summary_path


def import_dynamics(path) -> DynamicsLog:
    """Rebuild a DynamicsLog from the data CSV written by export_dynamics."""
    records: dict[int, dict] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != "checkpoint_index,epoch,node_id,loss":
            raise DatasetParseError(path, 1, "unexpected dynamics CSV header")
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            try:
                i, epoch, node, loss = int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])
            except (ValueError, IndexError):
                raise DatasetParseError(path, line_no, "malformed dynamics row") from None
            rec = records.setdefault(i, {"epoch": epoch, "losses": {}})
            rec["losses"][node] = loss
    if not records:
        raise DatasetParseError(path, 1, "dynamics CSV has no data rows")
    idx = sorted(records)
    node_ids = np.asarray(sorted(records[idx[0]]["losses"]), dtype=np.int64)
    epochs = np.asarray([records[i]["epoch"] for i in idx], dtype=np.int64)
    losses = np.asarray(
        [[records[i]["losses"][v] for v in node_ids] for i in idx], dtype=np.float64
    )
    return DynamicsLog(node_ids=node_ids, epochs=epochs, losses=losses)


@dataclass(frozen=True)
class AtypicalNode:
    node_id: int
    final_loss: float
    slope: float


def atypical_node_report(log: DynamicsLog, k: int) -> list[AtypicalNode]:
    """The k train nodes with the largest final-checkpoint loss.

    Each entry carries the least-squares slope of that node's loss against
    the checkpoint epochs, so rising-loss nodes are visible directly.
    """
    if log.n_checkpoints < 2:
        raise ValueError("need at least 2 checkpoints for a trend")
    if k > len(log.node_ids):
        raise ValueError(f"k={k} exceeds the {len(log.node_ids)} train nodes")
    x = log.epochs.astype(np.float64)
    xc = x - x.mean()
    denom = float((xc**2).sum())
    slopes = (xc @ log.losses) / denom
    final = log.losses[-1]
    order = np.lexsort((log.node_ids, -final))[:k]
    return [
        AtypicalNode(node_id=int(log.node_ids[j]), final_loss=float(final[j]), slope=float(slopes[j]))
        for j in order
    ]


def homophily_recovery(probs: np.ndarray, graph: Graph, threshold: float = 0.5) -> float:
    """Label homophily of the graph under thresholded predictions.

    Rows whose thresholded prediction is empty keep their single top-scoring
    label, so every node has a nonempty predicted set.
    """
    if not (0.0 < threshold < 1.0):
        raise ValueError("threshold must lie in (0, 1)")
    probs = np.asarray(probs, dtype=np.float64)
    pred = probs >= threshold
    empty = ~pred.any(axis=1)
    if empty.any():
        tops = probs[empty].argmax(axis=1)
        pred = pred.copy()
        pred[np.flatnonzero(empty), tops] = True
    edges = graph.edge_array()
    if len(edges) == 0:
        raise UndefinedMetricError("homophily recovery needs at least one edge")
    jac, valid = jaccard_per_edge(edges, pred.astype(np.int8))
    return float(jac[valid].mean())
