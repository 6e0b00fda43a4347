"""Continual error correction: add the corrected sample's embedding as a prototype.

No gradients, no merging: a correction appends one user-sourced prototype for
the true class, leaving every other class's prototypes untouched; the budget
(if any) is enforced by at most one LRU eviction per insert.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .classifier import Prediction, predict
from .core import NORM_EPS, ClassLabel, as_vector
from .errors import DimensionMismatch, UnknownClass, ZeroVector
from .store import PrototypeStore, Source


@dataclass(frozen=True)
class CorrectionOutcome:
    added_proto_id: int
    evicted_proto_id: int | None
    store_size_after: int
    prediction_before: Prediction
    prediction_after: Prediction


def correct(
    store: PrototypeStore,
    embedding,
    true_label: ClassLabel,
    open_class: bool = False,
) -> CorrectionOutcome:
    """Record a user correction: insert the embedding as a prototype of true_label.

    Validates everything before mutating, so a raising call leaves the store's
    prototype set unchanged. With open_class=False the label must already be
    registered with the store; with open_class=True an unseen label registers a
    new class (the "teach a new item" flow). Requires a non-empty store (the
    before-prediction is part of the outcome).
    """
    vec = as_vector(embedding)
    if vec.shape[0] != store.dim:
        raise DimensionMismatch(f"embedding dim {vec.shape[0]} != store dim {store.dim}")
    if float(np.linalg.norm(vec)) <= NORM_EPS:
        raise ZeroVector("cannot correct with a zero embedding")
    if not open_class and true_label.id not in store.classes:
        raise UnknownClass(
            f"label {true_label.name!r} (id {true_label.id}) is not a known class "
            "and open-class mode is off"
        )
    store.check_insert_capacity()  # fail before the usage-updating predictions
    before = predict(store, vec)
    ids_before = set(store._by_id)
    added = store.insert(true_label, vec, Source.USER)
    evicted = ids_before - set(store._by_id)
    after = predict(store, vec)
    return CorrectionOutcome(
        added_proto_id=added,
        evicted_proto_id=evicted.pop() if evicted else None,
        store_size_after=len(store),
        prediction_before=before,
        prediction_after=after,
    )


def correct_batch(
    store: PrototypeStore,
    corrections: Iterable[tuple[Sequence[float], ClassLabel]],
    open_class: bool = False,
) -> list[CorrectionOutcome]:
    """Apply corrections sequentially in the given order.

    Fails fast on the first invalid item; each correct() is atomic, so the
    store is left in the state reached so far.
    """
    return [correct(store, emb, label, open_class=open_class) for emb, label in corrections]
