"""Per-class k-means: turns training embeddings into the initial prototype set.

Lloyd's algorithm over the squared-Euclidean objective, seeded with k-means++
from a deterministic RNG. Inputs are expected to be L2-normalized at ingestion
(see dataio), which keeps this Euclidean objective aligned with the cosine
distance used at inference; centroids are stored un-renormalized since cosine
is scale-invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvalidConfig
from .store import PrototypeStore, Source, StoreConfig


@dataclass(frozen=True)
class KMeansConfig:
    k: int = 3
    max_iter: int = 100
    tol: float = 1e-6  # relative objective improvement that counts as converged
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise InvalidConfig(f"k must be >= 1, got {self.k}")
        if self.max_iter < 1:
            raise InvalidConfig(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol < 0:
            raise InvalidConfig(f"tol must be >= 0, got {self.tol}")


@dataclass
class KMeansResult:
    centroids: np.ndarray  # (m, dim) float64, m <= k
    objective_history: list[float]  # objective after seeding, then after each Lloyd step
    n_iter: int


def _as_matrix(features) -> np.ndarray:
    rows = [np.asarray(f, dtype=np.float64) for f in features]
    if not rows:
        raise EmptyInput("no feature vectors given")
    dim = rows[0].shape[-1]
    for r in rows:
        if r.ndim != 1 or r.shape[0] != dim:
            raise DimensionMismatch(f"feature dims disagree: {dim} vs {r.shape}")
    return np.vstack(rows)


def _distinct_rows(x: np.ndarray) -> np.ndarray:
    """Exact-equality dedup preserving first-occurrence order."""
    seen: set[bytes] = set()
    keep = []
    for i in range(x.shape[0]):
        key = x[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return x[keep]


def _sq_dists(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared Euclidean distances; direct differences avoid the
    # cancellation error of the expanded form
    return ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def kmeans_objective(features, centroids) -> float:
    """Sum over features of the squared Euclidean distance to the nearest centroid."""
    x = _as_matrix(features)
    c = _as_matrix(centroids)
    if x.shape[1] != c.shape[1]:
        raise DimensionMismatch(f"feature dim {x.shape[1]} != centroid dim {c.shape[1]}")
    return float(_sq_dists(x, c).min(axis=1).sum())


def _kmeans_pp_init(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = ((x - x[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(k - 1):
        probs = d2 / d2.sum()
        idx = int(rng.choice(n, p=probs))
        chosen.append(idx)
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return x[chosen].copy()


def kmeans(features, cfg: KMeansConfig) -> KMeansResult:
    """Cluster feature vectors into at most cfg.k centroids.

    When the distinct features number <= k they are returned as-is (so
    duplicated inputs collapse). Otherwise: k-means++ seeding, Lloyd
    iterations until max_iter or relative objective improvement < tol.
    Empty clusters are reseeded with the point farthest from its centroid.
    Deterministic for fixed inputs and seed.
    """
    x = _as_matrix(features)
    distinct = _distinct_rows(x)
    if distinct.shape[0] <= cfg.k:
        return KMeansResult(
            centroids=distinct,
            objective_history=[kmeans_objective(x, distinct)],
            n_iter=0,
        )

    rng = np.random.default_rng(cfg.seed)
    centroids = _kmeans_pp_init(x, cfg.k, rng)
    prev = kmeans_objective(x, centroids)
    history = [prev]
    n_iter = 0
    for _ in range(cfg.max_iter):
        d2 = _sq_dists(x, centroids)
        labels = d2.argmin(axis=1)
        assigned = d2[np.arange(x.shape[0]), labels].copy()
        for j in range(cfg.k):
            if not np.any(labels == j):
                far = int(assigned.argmax())
                labels[far] = j
                assigned[far] = -1.0  # keep later empties from reusing this point
        centroids = np.vstack([x[labels == j].mean(axis=0) for j in range(cfg.k)])
        obj = kmeans_objective(x, centroids)
        n_iter += 1
        assert obj <= prev * (1 + 1e-12) + 1e-12, "Lloyd step increased the objective"
        history.append(obj)
        if prev > 0 and (prev - obj) / prev < cfg.tol:
            break
        if prev == 0.0:
            break
        prev = obj
    return KMeansResult(
        centroids=_distinct_rows(centroids),
        objective_history=history,
        n_iter=n_iter,
    )


def build_initial_prototypes(
    train, cfg: KMeansConfig | None = None, store_cfg: StoreConfig | None = None
) -> PrototypeStore:
    """Cluster each class of the train split and seed a store with the centroids.

    Classes are processed in canonical (ascending id) order; centroids are
    inserted as server-sourced prototypes. Per-class RNG streams derive from
    cfg.seed + class id so results do not depend on class iteration order.
    """
    from .dataio import Split  # local import: dataio depends on store

    cfg = cfg or KMeansConfig()
    store_cfg = store_cfg or StoreConfig()
    records = train.records_for(Split.TRAIN)
    if not records:
        raise EmptyInput("dataset has no train-split records")
    store = PrototypeStore(
        train.dim, budget=store_cfg.budget, protect_server=store_cfg.protect_server
    )
    by_class: dict[int, list[np.ndarray]] = {label.id: [] for label in train.classes}
    for rec in records:
        by_class[rec.label.id].append(rec.embedding)
    for label in train.classes:
        feats = by_class[label.id]
        if not feats:
            raise EmptyInput(f"class {label.name!r} (id {label.id}) has no training samples")
        result = kmeans(feats, replace(cfg, seed=cfg.seed + label.id))
        for centroid in result.centroids:
            store.insert(label, centroid, Source.SERVER)
    return store
