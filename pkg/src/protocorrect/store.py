"""The prototype store: the single piece of mutable state in the system.

Holds (class, vector) prototype entries with provenance (server-seeded vs
user-added), logical-clock usage tracking for LRU eviction, and an optional
global capacity budget. "Used" means: won a nearest() query, or was just
inserted.

Concurrency contract: many readers OR one writer. nearest() updates usage
metadata and therefore counts as a writer; callers serialize mutations.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import COLINEAR_SNAP, NORM_EPS, ClassLabel, as_vector
from .errors import (
    BudgetUnsatisfiable,
    DimensionMismatch,
    EmptyStore,
    InvalidConfig,
    NothingEvictable,
    ZeroVector,
)


class Source(str, Enum):
    SERVER = "server"
    USER = "user"


@dataclass
class PrototypeEntry:
    proto_id: int
    label: ClassLabel
    vector: np.ndarray  # float64, never mutated after insertion
    source: Source
    created_seq: int
    last_used_seq: int


@dataclass(frozen=True)
class StoreConfig:
    """Capacity settings applied when a store is created or cloned."""

    budget: int | None = None  # None = unlimited
    protect_server: bool = False


@dataclass(frozen=True)
class StoreStats:
    total: int
    per_class: dict[str, int]
    by_source: dict[str, int]
    budget: int | None
    dim: int


@dataclass
class _ScanCache:
    """Entries sorted by (class id, created_seq) plus their stacked vectors.

    Scanning in this order makes numpy's first-minimum argmin implement the
    deterministic tie-break (ascending class id, then insertion order).
    """

    entries: list[PrototypeEntry]
    matrix: np.ndarray  # (n, dim) float64
    norms: np.ndarray  # (n,) float64
    class_ranges: dict[int, tuple[int, int]]  # class id -> [start, stop) slice


class PrototypeStore:
    """Mutable set of prototypes with LRU eviction under a global budget."""

    def __init__(self, dim: int, budget: int | None = None, protect_server: bool = False):
        if dim < 1:
            raise InvalidConfig(f"dim must be >= 1, got {dim}")
        if budget is not None and budget < 1:
            raise InvalidConfig(f"budget must be >= 1 or unlimited, got {budget}")
        self.dim = int(dim)
        self.budget = None if budget is None else int(budget)
        self.protect_server = bool(protect_server)
        self.clock = 0
        self.entries: list[PrototypeEntry] = []
        self.classes: dict[int, ClassLabel] = {}
        self._next_id = 0
        self._by_id: dict[int, PrototypeEntry] = {}
        self._cache: _ScanCache | None = None

    # -- basic introspection ------------------------------------------------

    def __len__(self) -> int:
        return len(self.entries)

    def known_classes(self) -> list[ClassLabel]:
        return [self.classes[i] for i in sorted(self.classes)]

    def stats(self) -> StoreStats:
        per_class: dict[str, int] = {}
        for label in self.known_classes():
            n = sum(1 for e in self.entries if e.label.id == label.id)
            if n:
                per_class[label.name] = n
        by_source = {s.value: sum(1 for e in self.entries if e.source is s) for s in Source}
        return StoreStats(
            total=len(self.entries),
            per_class=per_class,
            by_source=by_source,
            budget=self.budget,
            dim=self.dim,
        )

    # -- mutations ------------------------------------------------------------

    def _tick(self) -> int:
        self.clock += 1
        return self.clock

    def _register(self, label: ClassLabel) -> None:
        known = self.classes.get(label.id)
        if known is None:
            self.classes[label.id] = label
        elif known.name != label.name:
            raise InvalidConfig(
                f"class id {label.id} already registered as {known.name!r}, got {label.name!r}"
            )

    def _evictable(self) -> list[PrototypeEntry]:
        if self.protect_server:
            return [e for e in self.entries if e.source is Source.USER]
        return list(self.entries)

    def check_insert_capacity(self) -> bool:
        """Whether the next insert will evict; raises BudgetUnsatisfiable if it
        would need to but every current entry is protected."""
        needs_evict = self.budget is not None and len(self.entries) >= self.budget
        if needs_evict and not self._evictable():
            raise BudgetUnsatisfiable(
                f"budget {self.budget} reached and every entry is protected"
            )
        return needs_evict

    def insert(self, label: ClassLabel, vector, source: Source = Source.USER) -> int:
        """Append a prototype; evicts exactly one LRU entry if the budget is hit.

        Atomic: raises (DimensionMismatch, ZeroVector, BudgetUnsatisfiable)
        before touching any state.
        """
        vec = as_vector(vector)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(f"vector dim {vec.shape[0]} != store dim {self.dim}")
        if float(np.linalg.norm(vec)) <= NORM_EPS:
            raise ZeroVector("cannot insert a zero vector prototype")
        needs_evict = self.check_insert_capacity()
        self._register(label)
        seq = self._tick()
        entry = PrototypeEntry(
            proto_id=self._next_id,
            label=label,
            vector=vec,
            source=source,
            created_seq=seq,
            last_used_seq=seq,
        )
        self._next_id += 1
        self.entries.append(entry)
        self._by_id[entry.proto_id] = entry
        self._cache = None
        if needs_evict:
            self.evict_lru()
        return entry.proto_id

    def evict_lru(self) -> int:
        """Remove the evictable entry with the smallest last_used_seq (ties: oldest)."""
        candidates = self._evictable()
        if not candidates:
            raise NothingEvictable("no evictable entry (store empty or all protected)")
        victim = min(candidates, key=lambda e: (e.last_used_seq, e.created_seq))
        self.entries.remove(victim)
        del self._by_id[victim.proto_id]
        self._tick()
        self._cache = None
        return victim.proto_id

    # -- queries ----------------------------------------------------------------

    def _scan(self) -> _ScanCache:
        if self._cache is None:
            order = sorted(self.entries, key=lambda e: (e.label.id, e.created_seq))
            matrix = np.vstack([e.vector for e in order]) if order else np.zeros((0, self.dim))
            ranges: dict[int, tuple[int, int]] = {}
            for i, e in enumerate(order):
                start, _ = ranges.get(e.label.id, (i, i))
                ranges[e.label.id] = (start, i + 1)
            self._cache = _ScanCache(
                entries=order,
                matrix=matrix,
                norms=np.linalg.norm(matrix, axis=1),
                class_ranges=ranges,
            )
        return self._cache

    def scan_distances(self, query) -> tuple[np.ndarray, _ScanCache]:
        """Cosine distances to every entry, in (class id, created_seq) scan order.

        Read-only; shared by nearest(), the classifier, and batch evaluation.
        """
        if not self.entries:
            raise EmptyStore("store has no prototypes")
        q = as_vector(query)
        if q.shape[0] != self.dim:
            raise DimensionMismatch(f"query dim {q.shape[0]} != store dim {self.dim}")
        qn = float(np.linalg.norm(q))
        if qn <= NORM_EPS:
            raise ZeroVector("query vector has near-zero norm")
        scan = self._scan()
        dists = 1.0 - (scan.matrix @ q) / (scan.norms * qn)
        dists[dists < COLINEAR_SNAP] = 0.0  # same snap as core.cosine_distance
        return np.minimum(dists, 2.0), scan

    def touch(self, proto_id: int) -> None:
        """Mark an entry as used now (a nearest-query win)."""
        try:
            self._by_id[proto_id].last_used_seq = self._tick()
        except KeyError:
            raise KeyError(f"no prototype with id {proto_id}") from None

    def nearest(self, query) -> tuple[int, ClassLabel, float]:
        """Globally nearest entry by cosine distance; updates the winner's usage.

        Ties break by ascending class id, then insertion order.
        """
        dists, scan = self.scan_distances(query)
        winner = scan.entries[int(np.argmin(dists))]
        self.touch(winner.proto_id)
        return winner.proto_id, winner.label, float(dists.min())

    # -- lifecycle ----------------------------------------------------------------

    def clone(
        self,
        budget: int | None | str = "same",
        protect_server: bool | str = "same",
    ) -> "PrototypeStore":
        """Independent copy; optionally override capacity settings.

        A clone with a smaller budget than the current size is allowed: it
        shrinks by one eviction per insert and never grows past its start size.
        """
        new = PrototypeStore(
            self.dim,
            budget=self.budget if budget == "same" else budget,
            protect_server=self.protect_server if protect_server == "same" else protect_server,
        )
        new.clock = self.clock
        new._next_id = self._next_id
        new.classes = dict(self.classes)
        new.entries = [
            PrototypeEntry(e.proto_id, e.label, e.vector, e.source, e.created_seq, e.last_used_seq)
            for e in self.entries
        ]
        new._by_id = {e.proto_id: e for e in new.entries}
        return new


def new_store(dim: int, budget: int | None = None, protect_server: bool = False) -> PrototypeStore:
    """Create an empty store (clock 0)."""
    return PrototypeStore(dim, budget=budget, protect_server=protect_server)
