"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from protocorrect.core import ClassLabel, cosine_distance
from protocorrect.dataio import DatasetRecord, EmbeddingDataset, Split
from protocorrect.store import PrototypeStore, Source


def scan_order(store: PrototypeStore):
    """Entries in documented tie-break order: (class id, then insertion order)."""
    return sorted(store.entries, key=lambda e: (e.label.id, e.created_seq))


def brute_force_nearest(store: PrototypeStore, query, entries=None) -> tuple[int, int, float]:
    """Linear-scan oracle with the documented tie-break.

    Walks entries in scan order computing each cosine distance one entry at a
    time (scalar dot and norms, with the documented colinearity snap), keeping
    a strict minimum so equal distances resolve to the earliest entry. Returns
    (proto_id, class_id, distance). Pass a precomputed scan_order() list via
    `entries` when calling in a tight loop.
    """
    q = np.asarray(query, dtype=np.float64)
    qn = float(np.linalg.norm(q))
    best = None
    for e in entries if entries is not None else scan_order(store):
        d = 1.0 - float(np.dot(e.vector, q)) / (float(np.linalg.norm(e.vector)) * qn)
        if d < 1e-15:
            d = 0.0
        elif d > 2.0:
            d = 2.0
        if best is None or d < best[0]:
            best = (d, e)
    assert best is not None
    return best[1].proto_id, best[1].label.id, best[0]


def brute_force_class_ranking(store: PrototypeStore, query) -> list[tuple[int, float]]:
    """Per-class minimum distances sorted by (distance, class id)."""
    per_class: dict[int, float] = {}
    for e in store.entries:
        d = cosine_distance(e.vector, query)
        if e.label.id not in per_class or d < per_class[e.label.id]:
            per_class[e.label.id] = d
    return sorted(((cid, d) for cid, d in per_class.items()), key=lambda it: (it[1], it[0]))


def random_store(
    n_entries: int,
    n_classes: int,
    dim: int,
    seed: int,
    budget: int | None = None,
    duplicate_every: int = 0,
) -> PrototypeStore:
    """A store of random unit prototypes; optionally repeats every n-th vector
    (under a different class) to force exact distance ties."""
    rng = np.random.default_rng(seed)
    store = PrototypeStore(dim, budget=budget)
    last_vec = None
    for i in range(n_entries):
        cid = int(rng.integers(n_classes))
        label = ClassLabel(cid, f"c{cid:03d}")
        if duplicate_every and i % duplicate_every == 0 and last_vec is not None:
            vec = last_vec
        else:
            vec = rng.normal(size=dim)
            vec /= np.linalg.norm(vec)
        store.insert(label, vec, Source.SERVER if i % 3 else Source.USER)
        last_vec = vec
    return store


def tiny_dataset(dim: int = 4) -> EmbeddingDataset:
    """Two well-separated classes, two records each, train + test."""
    base = {
        0: np.array([1.0, 0, 0, 0], dtype=np.float32),
        1: np.array([0, 1.0, 0, 0], dtype=np.float32),
    }
    records = []
    for cid, v in base.items():
        label = ClassLabel(cid, f"class_{cid}")
        records.append(DatasetRecord(f"train-{cid}", v, label, Split.TRAIN))
        records.append(DatasetRecord(f"test-{cid}", v, label, Split.TEST))
    return EmbeddingDataset(dim, records)


@pytest.fixture
def two_class_store() -> PrototypeStore:
    store = PrototypeStore(2)
    store.insert(ClassLabel(0, "A"), [1.0, 0.0], Source.SERVER)
    store.insert(ClassLabel(1, "B"), [0.0, 1.0], Source.SERVER)
    return store
