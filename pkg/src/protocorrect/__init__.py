"""protocorrect: prototype-based continual few-shot error correction.

Classify embedding vectors by minimum cosine distance to stored class
prototypes, fix mistakes by appending the corrected sample's embedding as a
new prototype (no backprop), keep memory bounded with LRU eviction, and
measure error-correction accuracy vs. forgetting with the bundled protocol.
"""

from .classifier import Prediction, predict, predict_batch_readonly, predict_readonly, predict_topk
from .clustering import KMeansConfig, KMeansResult, build_initial_prototypes, kmeans, kmeans_objective
from .core import ClassLabel, cosine_distance, l1_distance, mean, normalize
from .correction import CorrectionOutcome, correct, correct_batch
from .dataio import (
    DatasetRecord,
    EmbeddingDataset,
    Split,
    SyntheticConfig,
    export_store,
    generate_synthetic,
    import_store,
    read_embeddings,
    write_embeddings,
)
from .harness import MetricsReport, ProtocolConfig, ShotRun, run_protocol, run_protocol_from_store, split_by_correctness
from .losses import distillation_l1, protonet_loss, protonet_query_gradient
from .report import emit_report, load_report, render_figures, render_table
from .store import PrototypeEntry, PrototypeStore, Source, StoreConfig, new_store

__version__ = "0.1.0"

__all__ = [
    "ClassLabel",
    "CorrectionOutcome",
    "DatasetRecord",
    "EmbeddingDataset",
    "KMeansConfig",
    "KMeansResult",
    "MetricsReport",
    "Prediction",
    "ProtocolConfig",
    "PrototypeEntry",
    "PrototypeStore",
    "ShotRun",
    "Source",
    "Split",
    "StoreConfig",
    "SyntheticConfig",
    "build_initial_prototypes",
    "correct",
    "correct_batch",
    "cosine_distance",
    "distillation_l1",
    "emit_report",
    "export_store",
    "generate_synthetic",
    "import_store",
    "kmeans",
    "kmeans_objective",
    "l1_distance",
    "load_report",
    "mean",
    "new_store",
    "normalize",
    "predict",
    "predict_batch_readonly",
    "predict_readonly",
    "predict_topk",
    "protonet_loss",
    "protonet_query_gradient",
    "read_embeddings",
    "render_figures",
    "render_table",
    "run_protocol",
    "run_protocol_from_store",
    "split_by_correctness",
    "write_embeddings",
]
