"""Dataset and store persistence, plus the seeded synthetic dataset generator.

Embedding datasets live in a two-file pair:

  <base>.pemb        binary matrix: magic "PEMB", then three little-endian
                     uint32s (version=1, count, dim), then count*dim
                     little-endian IEEE-754 float32s, row-major.
  <base>.meta.jsonl  one JSON object per line; line i describes row i with
                     keys id, label (name), label_id, split, and optionally
                     image.

Rows are L2-normalized at ingestion (rows already unit within 1e-6 are kept
bit-exact, so write->read round-trips are bitwise for valid datasets). The
file itself keeps whatever values were written, making the normalization
decision reversible.

Prototype stores persist as a JSON document (UTF-8) with version, dim,
budget, protect_server, clock, and the full entry list.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .core import NORM_EPS, ClassLabel
from .errors import (
    DimensionMismatch,
    EmptyDataset,
    FormatError,
    InvalidConfig,
    ZeroVector,
)
from .store import PrototypeEntry, PrototypeStore, Source

PEMB_MAGIC = b"PEMB"
PEMB_VERSION = 1
STORE_VERSION = 1
UNIT_NORM_TOL = 1e-6

# attempts at drawing separated class means before giving up (seed+1 each retry)
_MAX_SYNTH_ATTEMPTS = 64


class Split(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    embedding: np.ndarray  # float32, unit norm within 1e-6
    label: ClassLabel
    split: Split
    image_path: str | None = None


class EmbeddingDataset:
    """Aligned (embedding, label, split, id) records with a contiguous class space."""

    def __init__(self, dim: int, records: list[DatasetRecord], renormalized: bool = False):
        if dim < 1:
            raise InvalidConfig(f"dim must be >= 1, got {dim}")
        if not records:
            raise EmptyDataset("a dataset needs at least one record")
        seen_ids: set[str] = set()
        by_label: dict[int, str] = {}
        for rec in records:
            if rec.id in seen_ids:
                raise FormatError(f"duplicate record id {rec.id!r}")
            seen_ids.add(rec.id)
            if rec.embedding.shape != (dim,):
                raise DimensionMismatch(
                    f"record {rec.id!r} has shape {rec.embedding.shape}, expected ({dim},)"
                )
            norm = float(np.linalg.norm(rec.embedding.astype(np.float64)))
            if abs(norm - 1.0) > UNIT_NORM_TOL:
                raise InvalidConfig(
                    f"record {rec.id!r} is not unit-norm after ingestion (norm {norm!r})"
                )
            name = by_label.setdefault(rec.label.id, rec.label.name)
            if name != rec.label.name:
                raise FormatError(
                    f"label id {rec.label.id} maps to both {name!r} and {rec.label.name!r}"
                )
        if sorted(by_label) != list(range(len(by_label))):
            raise FormatError(
                f"label ids must form a contiguous 0..C-1 space, got {sorted(by_label)}"
            )
        self.dim = int(dim)
        self.records = list(records)
        self.renormalized = renormalized
        self.classes = [ClassLabel(i, by_label[i]) for i in sorted(by_label)]
        self.by_id = {rec.id: rec for rec in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def records_for(self, split: Split) -> list[DatasetRecord]:
        return [r for r in self.records if r.split is split]

    def embeddings(self, records: list[DatasetRecord] | None = None) -> np.ndarray:
        recs = self.records if records is None else records
        return np.vstack([r.embedding for r in recs]).astype(np.float64)


# -- .pemb / .meta.jsonl -------------------------------------------------------


def _paths(path_base: str | Path) -> tuple[Path, Path]:
    base = Path(path_base)
    return base.with_name(base.name + ".pemb"), base.with_name(base.name + ".meta.jsonl")


def write_embeddings(dataset: EmbeddingDataset, path_base: str | Path) -> tuple[Path, Path]:
    """Write the binary matrix and the line-aligned metadata sidecar."""
    pemb, meta = _paths(path_base)
    matrix = np.vstack([r.embedding for r in dataset.records]).astype("<f4")
    with open(pemb, "wb") as fh:
        fh.write(PEMB_MAGIC)
        fh.write(struct.pack("<III", PEMB_VERSION, len(dataset.records), dataset.dim))
        fh.write(matrix.tobytes(order="C"))
    with open(meta, "w", encoding="utf-8") as fh:
        for rec in dataset.records:
            row = {
                "id": rec.id,
                "label": rec.label.name,
                "label_id": rec.label.id,
                "split": rec.split.value,
            }
            if rec.image_path is not None:
                row["image"] = rec.image_path
            fh.write(json.dumps(row) + "\n")
    return pemb, meta


def read_embeddings(path_base: str | Path) -> EmbeddingDataset:
    """Read a .pemb/.meta.jsonl pair, normalizing rows at ingestion.

    Raises FormatError on bad magic/version/counts or misaligned metadata,
    ZeroVector if any row has norm <= 1e-12.
    """
    pemb, meta = _paths(path_base)
    raw = Path(pemb).read_bytes()
    if len(raw) < 16:
        raise FormatError(f"{pemb}: truncated header ({len(raw)} bytes)")
    if raw[:4] != PEMB_MAGIC:
        raise FormatError(f"{pemb}: bad magic {raw[:4]!r}")
    version, count, dim = struct.unpack("<III", raw[4:16])
    if version != PEMB_VERSION:
        raise FormatError(f"{pemb}: unsupported version {version}")
    if count < 1 or dim < 1:
        raise FormatError(f"{pemb}: bad count/dim ({count}, {dim})")
    expected = 16 + count * dim * 4
    if len(raw) != expected:
        raise FormatError(f"{pemb}: expected {expected} bytes, found {len(raw)}")
    matrix = np.frombuffer(raw[16:], dtype="<f4").reshape(count, dim)

    lines = Path(meta).read_text(encoding="utf-8").splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if len(lines) != count:
        raise FormatError(f"{meta}: {len(lines)} metadata lines for {count} rows")

    records: list[DatasetRecord] = []
    renormalized = False
    for i, line in enumerate(lines):
        try:
            row = json.loads(line)
            rec_id, name, label_id = row["id"], row["label"], row["label_id"]
            split = Split(row["split"])
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise FormatError(f"{meta}: line {i + 1}: {exc}") from exc
        vec = matrix[i]
        norm = float(np.linalg.norm(vec.astype(np.float64)))
        if norm <= NORM_EPS:
            raise ZeroVector(f"{pemb}: row {i} has norm {norm!r}")
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            vec = (vec.astype(np.float64) / norm).astype(np.float32)
            renormalized = True
        records.append(
            DatasetRecord(
                id=str(rec_id),
                embedding=vec,
                label=ClassLabel(int(label_id), str(name)),
                split=split,
                image_path=row.get("image"),
            )
        )
    return EmbeddingDataset(dim, records, renormalized=renormalized)


# -- synthetic data --------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    classes: int
    dim: int
    per_class_train: int
    per_class_test: int
    sigma: float
    seed: int
    # redraw (seed+1, seed+2, ...) until class mean directions are pairwise
    # farther apart than this cosine distance; 0 disables the rejection rule
    min_mean_distance: float = 0.5
    # optional structure making the data behave like real fine-grained
    # embeddings (defaults reproduce the plain isotropic generator exactly):
    # draw everything inside a random subspace of this dimension,
    intrinsic_dim: int | None = None
    # and spread each class over this many tight subclusters whose centers
    # sit mode_spread-scaled Gaussian offsets away from the class mean
    modes_per_class: int = 1
    mode_spread: float = 0.0

    def __post_init__(self) -> None:
        if self.classes < 2:
            raise InvalidConfig(f"need >= 2 classes, got {self.classes}")
        if self.dim < 1:
            raise InvalidConfig(f"dim must be >= 1, got {self.dim}")
        if self.per_class_train < 1 or self.per_class_test < 1:
            raise InvalidConfig("per-class sample counts must be >= 1")
        if not self.sigma > 0:
            raise InvalidConfig(f"sigma must be > 0, got {self.sigma}")
        if not 0 <= self.min_mean_distance < 2:
            raise InvalidConfig(f"min_mean_distance must be in [0, 2), got {self.min_mean_distance}")
        if self.intrinsic_dim is not None and not 1 <= self.intrinsic_dim <= self.dim:
            raise InvalidConfig(
                f"intrinsic_dim must be in [1, dim], got {self.intrinsic_dim}"
            )
        if self.modes_per_class < 1:
            raise InvalidConfig(f"modes_per_class must be >= 1, got {self.modes_per_class}")
        if self.mode_spread < 0:
            raise InvalidConfig(f"mode_spread must be >= 0, got {self.mode_spread}")


def _draw_means(cfg: SyntheticConfig, rng: np.random.Generator, d: int) -> np.ndarray | None:
    means = rng.normal(size=(cfg.classes, d))
    means /= np.linalg.norm(means, axis=1)[:, None]
    if cfg.min_mean_distance > 0:
        sims = means @ means.T
        np.fill_diagonal(sims, -1.0)
        if 1.0 - sims.max() <= cfg.min_mean_distance:
            return None
    return means


def generate_synthetic(cfg: SyntheticConfig) -> EmbeddingDataset:
    """Per class: a unit mean direction, then normalized mean+Gaussian samples.

    A pure function of cfg. If the drawn means violate min_mean_distance the
    whole draw retries at seed+1 (up to 64 attempts, then InvalidConfig).
    With intrinsic_dim set, means/modes/noise all live in a random
    intrinsic_dim-dimensional subspace rotated into R^dim; with
    modes_per_class > 1, sample i of a class is drawn around subcluster
    i mod modes_per_class.
    """
    d = cfg.intrinsic_dim or cfg.dim
    for attempt in range(_MAX_SYNTH_ATTEMPTS):
        rng = np.random.default_rng(cfg.seed + attempt)
        means = _draw_means(cfg, rng, d)
        if means is not None:
            break
    else:
        raise InvalidConfig(
            f"could not draw class means with pairwise cosine distance > "
            f"{cfg.min_mean_distance} in {_MAX_SYNTH_ATTEMPTS} attempts"
        )
    basis = None
    if cfg.intrinsic_dim is not None:
        basis, _ = np.linalg.qr(rng.normal(size=(cfg.dim, d)))

    def embed(v: np.ndarray) -> np.ndarray:
        v = v / np.linalg.norm(v)
        if basis is not None:
            v = basis @ v
        return v.astype(np.float32)

    def class_modes(mean: np.ndarray) -> np.ndarray:
        if cfg.modes_per_class == 1 and cfg.mode_spread == 0:
            return mean[None, :]
        modes = mean[None, :] + cfg.mode_spread * rng.normal(size=(cfg.modes_per_class, d))
        return modes / np.linalg.norm(modes, axis=1)[:, None]

    def sample(modes: np.ndarray, i: int) -> np.ndarray:
        v = modes[i % len(modes)] + rng.normal(0.0, cfg.sigma, size=d)
        return embed(v)

    train: list[DatasetRecord] = []
    test: list[DatasetRecord] = []
    for c in range(cfg.classes):
        label = ClassLabel(c, f"class_{c:03d}")
        modes = class_modes(means[c])
        for i in range(cfg.per_class_train):
            train.append(
                DatasetRecord(f"train-{c:03d}-{i:04d}", sample(modes, i), label, Split.TRAIN)
            )
        for i in range(cfg.per_class_test):
            test.append(
                DatasetRecord(f"test-{c:03d}-{i:04d}", sample(modes, i), label, Split.TEST)
            )
    return EmbeddingDataset(cfg.dim, train + test)


# -- prototype store documents ----------------------------------------------------


def store_to_document(store: PrototypeStore) -> dict:
    return {
        "version": STORE_VERSION,
        "dim": store.dim,
        "budget": store.budget,
        "protect_server": store.protect_server,
        "clock": store.clock,
        "entries": [
            {
                "proto_id": e.proto_id,
                "class_id": e.label.id,
                "class_name": e.label.name,
                "source": e.source.value,
                "created_seq": e.created_seq,
                "last_used_seq": e.last_used_seq,
                "vector": [float(x) for x in e.vector],
            }
            for e in store.entries
        ],
    }


def store_from_document(doc: dict) -> PrototypeStore:
    if not isinstance(doc, dict):
        raise FormatError("store document must be a JSON object")
    if doc.get("version") != STORE_VERSION:
        raise FormatError(f"unsupported store document version {doc.get('version')!r}")
    try:
        store = PrototypeStore(
            int(doc["dim"]),
            budget=None if doc["budget"] is None else int(doc["budget"]),
            protect_server=bool(doc["protect_server"]),
        )
        entries = doc["entries"]
        clock = int(doc["clock"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed store document: {exc}") from exc
    seen: set[int] = set()
    for raw in entries:
        try:
            vec = np.asarray(raw["vector"], dtype=np.float64)
            entry = PrototypeEntry(
                proto_id=int(raw["proto_id"]),
                label=ClassLabel(int(raw["class_id"]), str(raw["class_name"])),
                vector=vec,
                source=Source(raw["source"]),
                created_seq=int(raw["created_seq"]),
                last_used_seq=int(raw["last_used_seq"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed store entry: {exc}") from exc
        if vec.ndim != 1 or vec.shape[0] != store.dim:
            raise DimensionMismatch(
                f"entry {entry.proto_id} has dim {vec.shape}, store dim {store.dim}"
            )
        if entry.proto_id in seen:
            raise FormatError(f"duplicate proto_id {entry.proto_id}")
        if entry.created_seq > entry.last_used_seq:
            raise FormatError(f"entry {entry.proto_id}: created_seq > last_used_seq")
        seen.add(entry.proto_id)
        store._register(entry.label)
        store.entries.append(entry)
        store._by_id[entry.proto_id] = entry
    store.clock = max([clock] + [e.last_used_seq for e in store.entries])
    store._next_id = max([e.proto_id for e in store.entries], default=-1) + 1
    return store


def export_store(store: PrototypeStore, path: str | Path) -> Path:
    """Write the store as a self-describing JSON document."""
    path = Path(path)
    path.write_text(json.dumps(store_to_document(store), indent=1) + "\n", encoding="utf-8")
    return path


def import_store(path: str | Path) -> PrototypeStore:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    return store_from_document(doc)
