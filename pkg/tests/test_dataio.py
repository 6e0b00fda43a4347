import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_store
from protocorrect.core import ClassLabel, cosine_distance
from protocorrect.dataio import (
    DatasetRecord,
    EmbeddingDataset,
    Split,
    SyntheticConfig,
    export_store,
    generate_synthetic,
    import_store,
    read_embeddings,
    store_from_document,
    store_to_document,
    write_embeddings,
)
from protocorrect.errors import DimensionMismatch, FormatError, InvalidConfig, ZeroVector


def make_dataset(n_records=6, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_records):
        v = rng.normal(size=dim)
        v = (v / np.linalg.norm(v)).astype(np.float32)
        cid = i % 2
        records.append(
            DatasetRecord(
                id=f"rec-{i}",
                embedding=v,
                label=ClassLabel(cid, f"class_{cid}"),
                split=[Split.TRAIN, Split.VAL, Split.TEST][i % 3],
                image_path=f"img/{i}.png" if i % 2 else None,
            )
        )
    return EmbeddingDataset(dim, records)


def write_raw_pemb(path, version, rows, dim=None, declared_count=None):
    rows = np.asarray(rows, dtype="<f4")
    dim = dim if dim is not None else rows.shape[1]
    count = declared_count if declared_count is not None else rows.shape[0]
    with open(path, "wb") as fh:
        fh.write(b"PEMB")
        fh.write(struct.pack("<III", version, count, dim))
        fh.write(rows.tobytes())


def write_meta(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


def test_pemb_file_size_arithmetic(tmp_path):
    ds = make_dataset(n_records=2, dim=2)
    pemb, _ = write_embeddings(ds, tmp_path / "tiny")
    assert pemb.stat().st_size == 4 + 4 + 4 + 4 + 2 * 2 * 4


def test_round_trip_bitwise(tmp_path):
    ds = make_dataset(n_records=9, dim=5, seed=3)
    write_embeddings(ds, tmp_path / "d")
    back = read_embeddings(tmp_path / "d")
    assert back.dim == ds.dim and len(back) == len(ds)
    assert not back.renormalized
    for a, b in zip(ds.records, back.records):
        assert a.id == b.id and a.label == b.label and a.split == b.split
        assert a.image_path == b.image_path
        assert a.embedding.tobytes() == b.embedding.tobytes()


def test_read_rejects_bad_magic(tmp_path):
    ds = make_dataset()
    pemb, _ = write_embeddings(ds, tmp_path / "d")
    raw = bytearray(pemb.read_bytes())
    raw[:4] = b"XEMB"
    pemb.write_bytes(bytes(raw))
    with pytest.raises(FormatError, match="magic"):
        read_embeddings(tmp_path / "d")


def test_read_rejects_bad_version(tmp_path):
    base = tmp_path / "d"
    write_raw_pemb(base.with_name("d.pemb"), version=2, rows=[[1.0, 0.0]])
    write_meta(base.with_name("d.meta.jsonl"),
               [{"id": "a", "label": "x", "label_id": 0, "split": "train"}])
    with pytest.raises(FormatError, match="version"):
        read_embeddings(base)


def test_read_rejects_wrong_byte_count(tmp_path):
    base = tmp_path / "d"
    write_raw_pemb(base.with_name("d.pemb"), version=1, rows=[[1.0, 0.0]], declared_count=2)
    write_meta(base.with_name("d.meta.jsonl"),
               [{"id": "a", "label": "x", "label_id": 0, "split": "train"}] * 2)
    with pytest.raises(FormatError, match="bytes"):
        read_embeddings(base)


def test_read_rejects_misaligned_metadata(tmp_path):
    ds = make_dataset(n_records=4)
    _, meta = write_embeddings(ds, tmp_path / "d")
    lines = meta.read_text().splitlines()
    meta.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError, match="metadata lines"):
        read_embeddings(tmp_path / "d")


def test_read_normalizes_raw_rows(tmp_path):
    base = tmp_path / "d"
    write_raw_pemb(base.with_name("d.pemb"), version=1, rows=[[3.0, 4.0], [0.0, 1.0]])
    write_meta(base.with_name("d.meta.jsonl"), [
        {"id": "a", "label": "x", "label_id": 0, "split": "train"},
        {"id": "b", "label": "y", "label_id": 1, "split": "test"},
    ])
    ds = read_embeddings(base)
    assert ds.renormalized
    assert np.allclose(ds.records[0].embedding, [0.6, 0.8], atol=1e-7)
    assert np.array_equal(ds.records[1].embedding, np.array([0.0, 1.0], dtype=np.float32))


def test_read_rejects_zero_row(tmp_path):
    base = tmp_path / "d"
    write_raw_pemb(base.with_name("d.pemb"), version=1, rows=[[0.0, 0.0]])
    write_meta(base.with_name("d.meta.jsonl"),
               [{"id": "a", "label": "x", "label_id": 0, "split": "train"}])
    with pytest.raises(ZeroVector):
        read_embeddings(base)


def test_dataset_invariants():
    good = np.array([1.0, 0.0], dtype=np.float32)
    rec = lambda i, cid, v: DatasetRecord(f"r{i}", v, ClassLabel(cid, f"c{cid}"), Split.TRAIN)
    with pytest.raises(FormatError, match="duplicate"):
        EmbeddingDataset(2, [rec(0, 0, good), rec(0, 0, good)])
    with pytest.raises(FormatError, match="contiguous"):
        EmbeddingDataset(2, [rec(0, 0, good), rec(1, 2, good)])
    with pytest.raises(InvalidConfig, match="unit-norm"):
        EmbeddingDataset(2, [DatasetRecord("r", np.array([3.0, 4.0], dtype=np.float32),
                                           ClassLabel(0, "c"), Split.TRAIN)])
    with pytest.raises(FormatError, match="maps to both"):
        EmbeddingDataset(2, [
            rec(0, 0, good),
            DatasetRecord("r1", good, ClassLabel(0, "other"), Split.TRAIN),
        ])


def test_synthetic_deterministic():
    cfg = SyntheticConfig(classes=10, dim=32, per_class_train=5, per_class_test=5,
                          sigma=0.25, seed=7)
    a, b = generate_synthetic(cfg), generate_synthetic(cfg)
    for ra, rb in zip(a.records, b.records):
        assert ra.id == rb.id
        assert ra.embedding.tobytes() == rb.embedding.tobytes()


def test_synthetic_sigma_to_zero_collapses_classes():
    cfg = SyntheticConfig(classes=3, dim=16, per_class_train=4, per_class_test=4,
                          sigma=1e-9, seed=1)
    ds = generate_synthetic(cfg)
    for label in ds.classes:
        recs = [r.embedding for r in ds.records if r.label == label]
        for v in recs[1:]:
            assert cosine_distance(recs[0], v) <= 1e-9


def test_synthetic_mean_separation():
    cfg = SyntheticConfig(classes=5, dim=64, per_class_train=3, per_class_test=3,
                          sigma=1e-9, seed=7, min_mean_distance=0.5)
    ds = generate_synthetic(cfg)
    # sigma ~ 0 makes every sample sit on its class mean direction
    means = [ds.records_for(Split.TRAIN)[i * 3].embedding for i in range(5)]
    for i in range(5):
        for j in range(i + 1, 5):
            assert cosine_distance(means[i], means[j]) > 0.5


def test_synthetic_modes_and_subspace_options():
    cfg = SyntheticConfig(classes=4, dim=32, per_class_train=12, per_class_test=6,
                          sigma=0.05, seed=2, min_mean_distance=0.05,
                          intrinsic_dim=6, modes_per_class=3, mode_spread=0.4)
    ds = generate_synthetic(cfg)
    assert len(ds) == 4 * 18
    # samples assigned round-robin to modes: items 0 and 3 share a mode
    recs = ds.records_for(Split.TRAIN)[:12]
    assert cosine_distance(recs[0].embedding, recs[3].embedding) < cosine_distance(
        recs[0].embedding, recs[1].embedding
    )


def test_synthetic_config_validation():
    ok = dict(classes=3, dim=8, per_class_train=2, per_class_test=2, sigma=0.1, seed=0)
    with pytest.raises(InvalidConfig):
        SyntheticConfig(**{**ok, "classes": 1})
    with pytest.raises(InvalidConfig):
        SyntheticConfig(**{**ok, "sigma": 0.0})
    with pytest.raises(InvalidConfig):
        SyntheticConfig(**{**ok, "min_mean_distance": 2.0})
    with pytest.raises(InvalidConfig):
        SyntheticConfig(**{**ok, "intrinsic_dim": 9})
    with pytest.raises(InvalidConfig):
        SyntheticConfig(**{**ok, "modes_per_class": 0})


def test_synthetic_rejection_rule_exhausts():
    # 40 classes crammed into 2 dimensions cannot stay 0.5 apart pairwise
    cfg = SyntheticConfig(classes=40, dim=2, per_class_train=1, per_class_test=1,
                          sigma=0.1, seed=0, min_mean_distance=0.5)
    with pytest.raises(InvalidConfig, match="attempts"):
        generate_synthetic(cfg)


def test_store_round_trip_empty(tmp_path):
    from protocorrect.store import new_store

    path = export_store(new_store(4, budget=7, protect_server=True), tmp_path / "s.json")
    back = import_store(path)
    assert back.dim == 4 and back.budget == 7 and back.protect_server
    assert len(back) == 0


def test_store_round_trip_preserves_everything(tmp_path):
    store = random_store(n_entries=50, n_classes=5, dim=8, seed=2)
    store.nearest(np.ones(8))  # move some usage state
    path = export_store(store, tmp_path / "s.json")
    back = import_store(path)
    assert back.clock == store.clock and back.budget == store.budget
    for a, b in zip(store.entries, back.entries):
        assert (a.proto_id, a.label, a.source, a.created_seq, a.last_used_seq) == (
            b.proto_id, b.label, b.source, b.created_seq, b.last_used_seq)
        assert np.array_equal(a.vector, b.vector)


def test_store_round_trip_preserves_predictions(tmp_path):
    store = random_store(n_entries=300, n_classes=12, dim=10, seed=6)
    back = import_store(export_store(store, tmp_path / "s.json"))
    rng = np.random.default_rng(0)
    for _ in range(100):
        q = rng.normal(size=10)
        assert store.clone().nearest(q) == back.clone().nearest(q)


def test_store_import_rejects_bad_version(tmp_path):
    doc = store_to_document(random_store(3, 2, 4, seed=1))
    doc["version"] = 9
    with pytest.raises(FormatError, match="version"):
        store_from_document(doc)


def test_store_import_rejects_structural_damage(tmp_path):
    base = store_to_document(random_store(3, 2, 4, seed=1))
    dup = json.loads(json.dumps(base))
    dup["entries"][1]["proto_id"] = dup["entries"][0]["proto_id"]
    with pytest.raises(FormatError, match="duplicate"):
        store_from_document(dup)
    short = json.loads(json.dumps(base))
    short["entries"][0]["vector"] = [1.0]
    with pytest.raises(DimensionMismatch):
        store_from_document(short)
    warped = json.loads(json.dumps(base))
    warped["entries"][0]["created_seq"] = warped["entries"][0]["last_used_seq"] + 1
    with pytest.raises(FormatError, match="created_seq"):
        store_from_document(warped)
    bad_json = tmp_path / "broken.json"
    bad_json.write_text("{not json")
    with pytest.raises(FormatError):
        import_store(bad_json)


@given(st.integers(1, 40), st.integers(1, 6), st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_round_trip_random_datasets(tmp_path_factory, n, dim, seed):
    tmp = tmp_path_factory.mktemp("roundtrip")
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        v = rng.normal(size=dim)
        while np.linalg.norm(v) < 1e-6:
            v = rng.normal(size=dim)
        v = (v / np.linalg.norm(v)).astype(np.float32)
        records.append(DatasetRecord(f"r{i}", v, ClassLabel(0, "only"), Split.TEST))
    ds = EmbeddingDataset(dim, records)
    write_embeddings(ds, tmp / "x")
    back = read_embeddings(tmp / "x")
    for a, b in zip(ds.records, back.records):
        assert a.embedding.tobytes() == b.embedding.tobytes()
