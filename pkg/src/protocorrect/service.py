"""HTTP interface for the correction loop: browse predictions, submit
corrections, watch live metrics against the session's original split.

Single-session, in-memory. One lock serializes every request handler, which
trivially satisfies the single-writer contract and guarantees that reads never
observe a partially applied mutation (throughput is a non-goal here).
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .classifier import Prediction, predict_batch_readonly, predict_topk
from .clustering import KMeansConfig, build_initial_prototypes
from .correction import correct
from .core import ClassLabel
from .dataio import (
    EmbeddingDataset,
    Split,
    read_embeddings,
    store_from_document,
    store_to_document,
)
from .errors import ProtocorrectError, ZeroVector
from .harness import _accuracy, split_by_correctness
from .store import PrototypeStore, StoreConfig


@dataclass
class ServiceConfig:
    k: int = 3
    budget: int | None = None
    protect_server: bool = False
    open_class: bool = False
    reveal_labels: bool = False
    cluster_seed: int = 0
    topk: int = 5


@dataclass
class Session:
    session_id: str
    config: ServiceConfig
    dataset: EmbeddingDataset
    store: PrototypeStore
    snapshot: dict  # store document taken at session start, used by reset
    acc_base: float
    d_c_ids: list[str]
    d_e_ids: list[str]
    correction_log: list[tuple[float, str, str]] = field(default_factory=list)
    _metrics_cache: dict | None = None

    @classmethod
    def create(
        cls, train_path: str, test_path: str, config: ServiceConfig
    ) -> "Session":
        train = read_embeddings(train_path)
        test = train if test_path == train_path else read_embeddings(test_path)
        store = build_initial_prototypes(
            train,
            KMeansConfig(k=config.k, seed=config.cluster_seed),
            StoreConfig(budget=config.budget, protect_server=config.protect_server),
        )
        acc_base = _accuracy(store, test.records_for(Split.TEST))
        d_c, d_e = split_by_correctness(store, test)
        return cls(
            session_id=uuid.uuid4().hex[:12],
            config=config,
            dataset=test,
            store=store,
            snapshot=store_to_document(store),
            acc_base=acc_base,
            d_c_ids=d_c,
            d_e_ids=d_e,
        )

    # -- helpers ----------------------------------------------------------

    def class_list(self) -> list[dict]:
        return [{"id": c.id, "name": c.name} for c in self.store.known_classes()]

    def resolve_label(self, name: str | None, label_id: int | None) -> ClassLabel:
        known = self.store.known_classes()
        if label_id is not None:
            for c in known:
                if c.id == label_id:
                    return c
            if name is None:
                raise KeyError(f"unknown class id {label_id}")
        if name is not None:
            for c in known:
                if c.name == name:
                    return c
            # open-class candidates get the next free id
            next_id = max((c.id for c in known), default=-1) + 1
            return ClassLabel(next_id, name)
        raise KeyError("no label given")

    def corrected_ids(self) -> set[str]:
        return {item_id for _, item_id, _ in self.correction_log}

    def metrics(self) -> dict:
        if self._metrics_cache is None:
            d_c = [self.dataset.by_id[i] for i in self.d_c_ids]
            d_e = [self.dataset.by_id[i] for i in self.d_e_ids]
            acc_c = _accuracy(self.store, d_c)
            acc_e = _accuracy(self.store, d_e) if d_e else None
            stats = self.store.stats()
            self._metrics_cache = {
                "acc_base": self.acc_base,
                "acc_e_live": acc_e,
                "acc_c_live": acc_c,
                "forgetting_live": 100.0 - acc_c,
                "store_stats": {
                    "total": stats.total,
                    "per_class": stats.per_class,
                    "by_source": stats.by_source,
                    "budget": stats.budget,
                    "dim": stats.dim,
                },
                "corrections": len(self.correction_log),
            }
        return self._metrics_cache

    def invalidate(self) -> None:
        self._metrics_cache = None


class SessionRequest(BaseModel):
    train_path: str
    test_path: str
    k: int = 3
    budget: int | None = None
    protect_server: bool = False


class PredictRequest(BaseModel):
    embedding: list[float] | None = None
    item_id: str | None = None
    k: int | None = None


class CorrectionRequest(BaseModel):
    item_id: str
    label: str | None = None
    label_id: int | None = None


def _prediction_json(pred: Prediction) -> dict:
    return {
        "class_id": pred.label.id,
        "class_name": pred.label.name,
        "distance": pred.distance,
        "proto_id": pred.proto_id,
        "alternatives": [
            {"class_id": c.id, "class_name": c.name, "distance": d}
            for c, d in pred.alternatives
        ],
    }


def create_app(
    session: Session | None = None,
    config: ServiceConfig | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="protocorrect", version="0.1.0")
    state = {"session": session}
    defaults = config or ServiceConfig()
    lock = threading.Lock()

    def current() -> Session:
        sess = state["session"]
        if sess is None:
            raise HTTPException(status_code=404, detail="no active session")
        return sess

    @app.exception_handler(ProtocorrectError)
    def _domain_error(request, exc: ProtocorrectError):  # pragma: no cover - glue
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/session", status_code=201)
    def create_session(req: SessionRequest):
        with lock:
            cfg = ServiceConfig(
                k=req.k,
                budget=req.budget,
                protect_server=req.protect_server,
                open_class=defaults.open_class,
                reveal_labels=defaults.reveal_labels,
                cluster_seed=defaults.cluster_seed,
                topk=defaults.topk,
            )
            try:
                sess = Session.create(req.train_path, req.test_path, cfg)
            except (ProtocorrectError, OSError) as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            state["session"] = sess
            return {
                "session_id": sess.session_id,
                "acc_base": sess.acc_base,
                "class_list": sess.class_list(),
            }

    @app.get("/session")
    def session_info():
        with lock:
            sess = current()
            return {
                "session_id": sess.session_id,
                "acc_base": sess.acc_base,
                "class_list": sess.class_list(),
                "open_class": sess.config.open_class,
                "reveal_labels": sess.config.reveal_labels,
                "test_size": len(sess.dataset.records_for(Split.TEST)),
                "misclassified_size": len(sess.d_e_ids),
            }

    @app.get("/items")
    def list_items(
        split: str = "test",
        page: int = 1,
        page_size: int = 50,
        only: str = "all",
    ):
        with lock:
            sess = current()
            if only not in ("all", "misclassified"):
                raise HTTPException(status_code=422, detail=f"bad only={only!r}")
            if page < 1 or page_size < 1:
                raise HTTPException(status_code=422, detail="page and page_size are 1-based")
            try:
                records = sess.dataset.records_for(Split(split))
            except ValueError:
                raise HTTPException(status_code=422, detail=f"bad split={split!r}")
            if only == "misclassified":
                wanted = set(sess.d_e_ids)
                records = [r for r in records if r.id in wanted]
            records = sorted(records, key=lambda r: r.id)
            total = len(records)
            page_records = records[(page - 1) * page_size : page * page_size]
            corrected = sess.corrected_ids()
            items = []
            if page_records:
                queries = np.vstack([r.embedding for r in page_records]).astype(np.float64)
                batch = predict_batch_readonly(sess.store, queries)
                for rec, cid, dist in zip(page_records, batch.class_ids, batch.distances):
                    label = sess.store.classes[int(cid)]
                    item = {
                        "id": rec.id,
                        "prediction": {"class_id": label.id, "class_name": label.name},
                        "distance": float(dist),
                        "image": rec.image_path,
                        # lets the UI draw a deterministic glyph when there is no image
                        "embedding_prefix": [float(x) for x in rec.embedding[:3]],
                        "label_hidden": not sess.config.reveal_labels,
                        "corrected": rec.id in corrected,
                    }
                    if sess.config.reveal_labels:
                        item["label"] = {"class_id": rec.label.id, "class_name": rec.label.name}
                    items.append(item)
            return {"items": items, "total": total, "page": page, "page_size": page_size}

    @app.post("/predict")
    def predict_endpoint(req: PredictRequest):
        with lock:
            sess = current()
            if (req.embedding is None) == (req.item_id is None):
                raise HTTPException(
                    status_code=422, detail="provide exactly one of embedding or item_id"
                )
            if req.item_id is not None:
                rec = sess.dataset.by_id.get(req.item_id)
                if rec is None:
                    raise HTTPException(status_code=404, detail=f"unknown item {req.item_id!r}")
                query = rec.embedding
            else:
                query = req.embedding
            try:
                pred = predict_topk(sess.store, query, k=req.k or sess.config.topk)
            except ProtocorrectError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            return _prediction_json(pred)

    @app.post("/corrections")
    def submit_correction(req: CorrectionRequest):
        with lock:
            sess = current()
            rec = sess.dataset.by_id.get(req.item_id)
            if rec is None:
                raise HTTPException(status_code=404, detail=f"unknown item {req.item_id!r}")
            try:
                label = sess.resolve_label(req.label, req.label_id)
            except KeyError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            if label.id not in sess.store.classes and not sess.config.open_class:
                raise HTTPException(
                    status_code=409,
                    detail=f"unknown label {label.name!r} and open-class mode is off",
                )
            try:
                outcome = correct(
                    sess.store, rec.embedding, label, open_class=sess.config.open_class
                )
            except ProtocorrectError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            sess.correction_log.append((time.time(), rec.id, label.name))
            sess.invalidate()
            return {
                "added_proto_id": outcome.added_proto_id,
                "evicted_proto_id": outcome.evicted_proto_id,
                "store_size_after": outcome.store_size_after,
                "prediction_before": _prediction_json(outcome.prediction_before),
                "prediction_after": _prediction_json(outcome.prediction_after),
            }

    @app.get("/metrics")
    def metrics():
        with lock:
            return current().metrics()

    @app.post("/store/reset")
    def reset_store():
        with lock:
            sess = current()
            sess.store = store_from_document(sess.snapshot)
            sess.correction_log.clear()
            sess.invalidate()
            return {"status": "reset", "store_size": len(sess.store)}

    @app.get("/store/export")
    def export_store_doc():
        with lock:
            return store_to_document(current().store)

    @app.post("/store/import")
    def import_store_doc(doc: dict):
        with lock:
            sess = current()
            try:
                store = store_from_document(doc)
            except ProtocorrectError as exc:
                raise HTTPException(status_code=422, detail=str(exc)) from exc
            if store.dim != sess.dataset.dim:
                raise HTTPException(
                    status_code=422,
                    detail=f"store dim {store.dim} != dataset dim {sess.dataset.dim}",
                )
            sess.store = store
            sess.invalidate()
            return {"status": "imported", "store_size": len(store)}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
