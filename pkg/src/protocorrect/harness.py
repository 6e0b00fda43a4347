"""The evaluation protocol: base accuracy, correctness split, few-shot
correction sweeps over (seed, shot) pairs, and the resulting metrics report.

Flow per run: restore the initial prototype store, sample up to s support
samples per class from the misclassified set (seeded, without replacement),
apply them as corrections, then measure accuracy on the remaining
misclassified samples (Acc_E) and on the originally-correct samples (Acc_C).
The forgetting rate is 100 - Acc_C by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import predict_batch_readonly
from .clustering import KMeansConfig, build_initial_prototypes
from .correction import correct_batch
from .dataio import DatasetRecord, EmbeddingDataset, Split
from .errors import EmptyDataset, EmptyStore, InvalidConfig
from .store import PrototypeStore, StoreConfig


@dataclass(frozen=True)
class ProtocolConfig:
    shots: tuple[int, ...] = (1, 2, 3, 4, 5, 7, 10, 20, 50)
    seeds: tuple[int, ...] = (0,)
    k: int = 3
    budget: int | None = None
    include_support_in_acc_e: bool = False
    protect_server: bool = False
    cluster_seed: int = 0
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6

    def __post_init__(self) -> None:
        if not self.shots:
            raise InvalidConfig("shots must be non-empty")
        if any(s < 1 for s in self.shots):
            raise InvalidConfig("shot counts must be positive")
        if list(self.shots) != sorted(set(self.shots)):
            raise InvalidConfig(f"shots must be strictly increasing, got {self.shots}")
        if not self.seeds:
            raise InvalidConfig("at least one seed required")

    def kmeans_config(self) -> KMeansConfig:
        return KMeansConfig(
            k=self.k, max_iter=self.kmeans_max_iter, tol=self.kmeans_tol, seed=self.cluster_seed
        )


@dataclass(frozen=True)
class ShotRun:
    """Metrics of one (shot, seed) adaptation run."""

    shot: int
    seed: int
    acc_e: float | None  # None when the evaluation subset of D_E is empty
    acc_c: float
    forgetting: float
    support_count: int
    store_size: int


@dataclass
class MetricsReport:
    acc_base: float
    test_size: int
    d_c_size: int
    d_e_size: int
    shots: tuple[int, ...]
    seeds: tuple[int, ...]
    include_support_in_acc_e: bool
    budget: int | None
    runs: list[ShotRun] = field(default_factory=list)

    def runs_for_shot(self, shot: int) -> list[ShotRun]:
        return [r for r in self.runs if r.shot == shot]


def _accuracy(store: PrototypeStore, records: list[DatasetRecord]) -> float:
    """Percent of records whose read-only prediction matches the ground truth.

    Vacuously 100 for an empty record list (nothing to get wrong).
    """
    if not records:
        return 100.0
    queries = np.vstack([r.embedding for r in records]).astype(np.float64)
    predicted = predict_batch_readonly(store, queries).class_ids
    truth = np.array([r.label.id for r in records])
    return 100.0 * float((predicted == truth).sum()) / len(records)


def split_by_correctness(
    store_initial: PrototypeStore, test: EmbeddingDataset
) -> tuple[list[str], list[str]]:
    """Partition test-split record ids into (correct, misclassified) sets."""
    if not len(store_initial):
        raise EmptyStore("initial store is empty")
    records = test.records_for(Split.TEST)
    if not records:
        raise EmptyDataset("dataset has no test-split records")
    queries = np.vstack([r.embedding for r in records]).astype(np.float64)
    predicted = predict_batch_readonly(store_initial, queries).class_ids
    d_c = [r.id for r, p in zip(records, predicted) if p == r.label.id]
    d_e = [r.id for r, p in zip(records, predicted) if p != r.label.id]
    return d_c, d_e


def _sample_supports(
    d_e_records: list[DatasetRecord], shot: int, seed: int
) -> list[DatasetRecord]:
    """Up to `shot` misclassified records per class, uniform without replacement."""
    by_class: dict[int, list[DatasetRecord]] = {}
    for rec in d_e_records:
        by_class.setdefault(rec.label.id, []).append(rec)
    rng = np.random.default_rng([seed, shot])
    supports: list[DatasetRecord] = []
    for cid in sorted(by_class):
        pool = by_class[cid]
        take = min(shot, len(pool))
        idx = rng.choice(len(pool), size=take, replace=False)
        supports.extend(pool[i] for i in idx)
    return supports


def run_protocol_from_store(
    store_initial: PrototypeStore, test: EmbeddingDataset, cfg: ProtocolConfig
) -> MetricsReport:
    """Run the full correction sweep against a prebuilt initial store."""
    records = test.records_for(Split.TEST)
    if not records:
        raise EmptyDataset("dataset has no test-split records")
    acc_base = _accuracy(store_initial, records)
    d_c_ids, d_e_ids = split_by_correctness(store_initial, test)
    d_c = [test.by_id[i] for i in d_c_ids]
    d_e = [test.by_id[i] for i in d_e_ids]

    report = MetricsReport(
        acc_base=acc_base,
        test_size=len(records),
        d_c_size=len(d_c),
        d_e_size=len(d_e),
        shots=tuple(cfg.shots),
        seeds=tuple(cfg.seeds),
        include_support_in_acc_e=cfg.include_support_in_acc_e,
        budget=cfg.budget,
    )
    for seed in cfg.seeds:
        for shot in cfg.shots:
            adapted = store_initial.clone(
                budget=cfg.budget, protect_server=cfg.protect_server
            )
            supports = _sample_supports(d_e, shot, seed)
            correct_batch(adapted, [(r.embedding, r.label) for r in supports])
            if cfg.include_support_in_acc_e:
                eval_e = d_e
            else:
                support_ids = {r.id for r in supports}
                eval_e = [r for r in d_e if r.id not in support_ids]
            acc_e = _accuracy(adapted, eval_e) if eval_e else None
            acc_c = _accuracy(adapted, d_c)
            report.runs.append(
                ShotRun(
                    shot=shot,
                    seed=seed,
                    acc_e=acc_e,
                    acc_c=acc_c,
                    forgetting=100.0 - acc_c,
                    support_count=len(supports),
                    store_size=len(adapted),
                )
            )
    return report


def run_protocol(
    train: EmbeddingDataset, test: EmbeddingDataset, cfg: ProtocolConfig
) -> MetricsReport:
    """Build the initial prototypes from the train split, then sweep corrections."""
    initial = build_initial_prototypes(train, cfg.kmeans_config(), StoreConfig())
    return run_protocol_from_store(initial, test, cfg)
