"""Nearest-prototype classification by minimum cosine distance.

A class's distance to a query is the minimum over that class's prototypes;
the predicted class is the global argmin. Ties break deterministically by
ascending class id, then insertion order (inherited from the store scan).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import COLINEAR_SNAP, NORM_EPS, ClassLabel
from .errors import DimensionMismatch, EmptyStore, ZeroVector
from .store import PrototypeStore


@dataclass(frozen=True)
class Prediction:
    label: ClassLabel
    distance: float
    proto_id: int
    # top-k distinct classes as (label, per-class min distance), ascending
    # by distance; the first one equals (label, distance)
    alternatives: tuple[tuple[ClassLabel, float], ...]


@dataclass(frozen=True)
class BatchPrediction:
    """Vectorized read-only predictions for a stack of queries."""

    class_ids: np.ndarray  # (n,) int
    proto_ids: np.ndarray  # (n,) int
    distances: np.ndarray  # (n,) float64


def _rank(store: PrototypeStore, query, k: int) -> Prediction:
    dists, scan = store.scan_distances(query)
    win = int(np.argmin(dists))
    winner = scan.entries[win]
    per_class = [
        (store.classes[cid], float(dists[start:stop].min()))
        for cid, (start, stop) in scan.class_ranges.items()
    ]
    per_class.sort(key=lambda it: (it[1], it[0].id))
    return Prediction(
        label=winner.label,
        distance=float(dists[win]),
        proto_id=winner.proto_id,
        alternatives=tuple(per_class[: max(k, 1)]),
    )


def predict(store: PrototypeStore, query) -> Prediction:
    """Classify a query and record the winning prototype as used."""
    pred = _rank(store, query, k=1)
    store.touch(pred.proto_id)
    return pred


def predict_topk(store: PrototypeStore, query, k: int) -> Prediction:
    """Like predict, but with the k closest distinct classes as alternatives.

    Only the single winning prototype's usage is updated.
    """
    pred = _rank(store, query, k=k)
    store.touch(pred.proto_id)
    return pred


def predict_readonly(store: PrototypeStore, query, k: int = 1) -> Prediction:
    """predict without any usage update; safe for parallel batch evaluation."""
    return _rank(store, query, k=k)


def predict_batch_readonly(store: PrototypeStore, queries: np.ndarray) -> BatchPrediction:
    """Read-only nearest-class predictions for an (n, dim) query matrix."""
    if not len(store):
        raise EmptyStore("store has no prototypes")
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != store.dim:
        raise DimensionMismatch(f"expected (n, {store.dim}) queries, got {q.shape}")
    qn = np.linalg.norm(q, axis=1)
    if np.any(qn <= NORM_EPS):
        raise ZeroVector("a query vector has near-zero norm")
    scan = store._scan()
    dists = 1.0 - (scan.matrix @ q.T) / (scan.norms[:, None] * qn[None, :])
    dists[dists < COLINEAR_SNAP] = 0.0  # same snap as core.cosine_distance
    dists = np.minimum(dists, 2.0)
    idx = dists.argmin(axis=0)  # first minimum = deterministic tie-break
    return BatchPrediction(
        class_ids=np.array([scan.entries[i].label.id for i in idx]),
        proto_ids=np.array([scan.entries[i].proto_id for i in idx]),
        distances=dists[idx, np.arange(q.shape[0])],
    )
