"""Training-loss reference implementations (numerical validation only).

These are the feature-space losses used to shape the embedding models:
teacher-student L1 feature matching, and the prototypical softmax
cross-entropy over distances to class prototypes. No training loop lives
here; the functions exist so their values and gradients can be checked.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .core import ClassLabel, as_vector, cosine_distance
from .errors import (
    DimensionMismatch,
    EmptyInput,
    InvalidConfig,
    LengthMismatch,
    UnknownClass,
)

SQEUCLIDEAN = "sqeuclidean"
COSINE = "cosine"


def distillation_l1(teacher_batch: Sequence, student_batch: Sequence) -> float:
    """Mean L1 distance between paired teacher and student feature vectors."""
    teacher = [as_vector(t) for t in teacher_batch]
    student = [as_vector(s) for s in student_batch]
    if not teacher or not student:
        raise EmptyInput("distillation batches must be non-empty")
    if len(teacher) != len(student):
        raise LengthMismatch(f"batch lengths differ: {len(teacher)} vs {len(student)}")
    total = 0.0
    for t, s in zip(teacher, student):
        if t.shape[0] != s.shape[0]:
            raise DimensionMismatch(f"pair dims differ: {t.shape[0]} vs {s.shape[0]}")
        total += float(np.abs(t - s).sum())
    return total / len(teacher)


def _class_id(label) -> int:
    return label.id if isinstance(label, ClassLabel) else int(label)


def _prototype_table(prototypes: Mapping) -> tuple[list[int], np.ndarray]:
    if not prototypes:
        raise EmptyInput("no class prototypes given")
    ids = sorted(_class_id(k) for k in prototypes)
    if len(ids) < 2:
        raise InvalidConfig("prototypical loss needs at least two classes")
    by_id = {_class_id(k): as_vector(v) for k, v in prototypes.items()}
    dim = by_id[ids[0]].shape[0]
    for i in ids:
        if by_id[i].shape[0] != dim:
            raise DimensionMismatch("prototype dims disagree")
    return ids, np.vstack([by_id[i] for i in ids])


def _logits(q: np.ndarray, protos: np.ndarray, metric: str) -> np.ndarray:
    if metric == SQEUCLIDEAN:
        return -((protos - q) ** 2).sum(axis=1)
    if metric == COSINE:
        return -np.array([cosine_distance(q, p) for p in protos])
    raise InvalidConfig(f"unknown metric {metric!r}")


def protonet_loss(
    queries: Sequence[tuple[Sequence[float], ClassLabel | int]],
    prototypes: Mapping,
    metric: str = SQEUCLIDEAN,
) -> float:
    """Mean cross-entropy of softmax over negative distances to class prototypes.

    Logits are negative squared Euclidean distances by default; metric="cosine"
    switches to negative cosine distances. Stabilized with log-sum-exp.
    """
    queries = list(queries)
    if not queries:
        raise EmptyInput("no queries given")
    ids, protos = _prototype_table(prototypes)
    index = {cid: row for row, cid in enumerate(ids)}
    total = 0.0
    for vec, label in queries:
        cid = _class_id(label)
        if cid not in index:
            raise UnknownClass(f"query label id {cid} has no prototype")
        q = as_vector(vec)
        if q.shape[0] != protos.shape[1]:
            raise DimensionMismatch(f"query dim {q.shape[0]} != prototype dim {protos.shape[1]}")
        z = _logits(q, protos, metric)
        m = z.max()
        lse = m + np.log(np.exp(z - m).sum())
        total += float(lse - z[index[cid]])
    return total / len(queries)


def protonet_query_gradient(
    query,
    label: ClassLabel | int,
    prototypes: Mapping,
    metric: str = SQEUCLIDEAN,
) -> np.ndarray:
    """Analytic gradient of the single-query prototypical loss w.r.t. the query."""
    ids, protos = _prototype_table(prototypes)
    index = {cid: row for row, cid in enumerate(ids)}
    cid = _class_id(label)
    if cid not in index:
        raise UnknownClass(f"label id {cid} has no prototype")
    q = as_vector(query)
    z = _logits(q, protos, metric)
    m = z.max()
    soft = np.exp(z - m)
    soft /= soft.sum()
    if metric == SQEUCLIDEAN:
        # dz_c/dq = -2 (q - p_c)
        dz = -2.0 * (q[None, :] - protos)
    else:
        # z_c = q . p_c / (||q|| ||p_c||) - 1
        qn = np.linalg.norm(q)
        unit_p = protos / np.linalg.norm(protos, axis=1)[:, None]
        sims = unit_p @ q / qn
        dz = unit_p / qn - sims[:, None] * q[None, :] / qn**2
    return (soft[:, None] * dz).sum(axis=0) - dz[index[cid]]
