"""Image-folder to embedding-dataset exporter.

Walks a class-per-directory image tree, embeds every decodable image, assigns
seeded train/val/test splits per class, and writes the `.pemb` binary matrix
plus the `.meta.jsonl` sidecar (the same two-file format the classification
engine reads). Output files are written atomically (temp file + rename).

Embedding backends: "stub" derives a deterministic pseudo-embedding from the
SHA-256 of each image's relative path (no ML stack needed; exercises the file
contract), anything else is loaded as a torchvision model name.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

log = logging.getLogger("pemb_exporter")

PEMB_MAGIC = b"PEMB"
PEMB_VERSION = 1
IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


class ExporterError(Exception):
    pass


@dataclass(frozen=True)
class ExportManifest:
    model: str  # "stub" or a torchvision model name
    image_root: Path
    out_base: Path
    seed: int = 0
    dim: int = 384  # stub embedding width; real models dictate their own
    split_fractions: tuple[float, float, float] = (0.70, 0.15, 0.15)  # train, val, test

    def __post_init__(self) -> None:
        if abs(sum(self.split_fractions) - 1.0) > 1e-9:
            raise ExporterError(f"split fractions must sum to 1, got {self.split_fractions}")
        if self.dim < 1:
            raise ExporterError(f"dim must be >= 1, got {self.dim}")


@dataclass
class ExportResult:
    pemb_path: Path
    meta_path: Path
    rows: int
    classes: list[str]
    skipped: list[str] = field(default_factory=list)


def discover_classes(image_root: Path) -> dict[str, list[Path]]:
    """Class name -> sorted image paths, one class per direct subdirectory."""
    root = Path(image_root)
    if not root.is_dir():
        raise ExporterError(f"image root {root} is not a directory")
    classes: dict[str, list[Path]] = {}
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        images = sorted(
            p for p in sub.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not images:
            raise ExporterError(f"class directory {sub.name!r} contains no images")
        classes[sub.name] = images
    if not classes:
        raise ExporterError(f"no class subdirectories under {root}")
    return classes


def assign_splits(n: int, fractions: tuple[float, float, float], rng: np.random.Generator) -> list[str]:
    """Seeded split labels for n items: shuffled, train gets the rounding remainder."""
    n_val = int(n * fractions[1])
    n_test = int(n * fractions[2])
    n_train = n - n_val - n_test
    order = rng.permutation(n)
    labels = [""] * n
    for rank, idx in enumerate(order):
        if rank < n_train:
            labels[idx] = "train"
        elif rank < n_train + n_val:
            labels[idx] = "val"
        else:
            labels[idx] = "test"
    return labels


def stub_embedding(relative_path: str, dim: int) -> np.ndarray:
    """Deterministic unit vector from the SHA-256 of the relative path."""
    digest = hashlib.sha256(relative_path.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    return (v / np.linalg.norm(v)).astype(np.float32)


class StubModel:
    def __init__(self, dim: int):
        self.dim = dim

    def embed(self, image_path: Path, relative: str) -> np.ndarray:
        return stub_embedding(relative, self.dim)


class TorchvisionModel:
    """Feature extractor over a named torchvision classifier (pooled features)."""

    def __init__(self, name: str):
        try:
            import torch
            import torchvision.models as tvm
            from torchvision import transforms
        except ImportError as exc:
            raise ExporterError(f"model backend unavailable: {exc}") from exc
        try:
            factory = getattr(tvm, name)
            model = factory(weights="DEFAULT")
        except Exception as exc:
            raise ExporterError(f"cannot load model {name!r}: {exc}") from exc
        self._torch = torch
        model.eval()
        # drop the classification head where the architecture exposes one
        if hasattr(model, "classifier"):
            model.classifier = torch.nn.Identity()
        elif hasattr(model, "fc"):
            model.fc = torch.nn.Identity()
        self.model = model
        self.transform = transforms.Compose([
            transforms.Resize(256),
            transforms.CenterCrop(224),
            transforms.ToTensor(),
            transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
        ])
        with torch.no_grad():
            probe = self.model(torch.zeros(1, 3, 224, 224))
        self.dim = int(probe.reshape(1, -1).shape[1])

    def embed(self, image_path: Path, relative: str) -> np.ndarray:
        with Image.open(image_path) as img:
            tensor = self.transform(img.convert("RGB")).unsqueeze(0)
        with self._torch.no_grad():
            feats = self.model(tensor).reshape(-1).numpy().astype(np.float64)
        norm = np.linalg.norm(feats)
        if norm <= 1e-12:
            raise ExporterError(f"model produced a zero embedding for {image_path}")
        return (feats / norm).astype(np.float32)


def load_model(manifest: ExportManifest):
    if manifest.model == "stub":
        return StubModel(manifest.dim)
    return TorchvisionModel(manifest.model)


def _decodable(path: Path) -> bool:
    try:
        with Image.open(path) as img:
            img.verify()
        return True
    except (UnidentifiedImageError, OSError):
        return False


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def export(manifest: ExportManifest) -> ExportResult:
    """Run the full export; returns paths and per-run bookkeeping."""
    model = load_model(manifest)
    classes = discover_classes(manifest.image_root)
    rng = np.random.default_rng(manifest.seed)

    rows: list[np.ndarray] = []
    meta: list[dict] = []
    skipped: list[str] = []
    for label_id, (name, images) in enumerate(sorted(classes.items())):
        readable = []
        for img in images:
            if _decodable(img):
                readable.append(img)
            else:
                rel = img.relative_to(manifest.image_root).as_posix()
                log.warning("skipping unreadable image %s", rel)
                skipped.append(rel)
        if not readable:
            raise ExporterError(f"class {name!r} has no readable images")
        splits = assign_splits(len(readable), manifest.split_fractions, rng)
        for img, split in zip(readable, splits):
            rel = img.relative_to(manifest.image_root).as_posix()
            vec = model.embed(img, rel)
            rows.append(vec)
            meta.append({
                "id": rel,
                "label": name,
                "label_id": label_id,
                "split": split,
                "image": rel,
            })

    matrix = np.vstack(rows).astype("<f4")
    header = PEMB_MAGIC + struct.pack("<III", PEMB_VERSION, matrix.shape[0], matrix.shape[1])
    pemb_path = manifest.out_base.with_name(manifest.out_base.name + ".pemb")
    meta_path = manifest.out_base.with_name(manifest.out_base.name + ".meta.jsonl")
    _write_atomic(pemb_path, header + matrix.tobytes(order="C"))
    _write_atomic(
        meta_path, "".join(json.dumps(m) + "\n" for m in meta).encode("utf-8")
    )
    return ExportResult(
        pemb_path=pemb_path,
        meta_path=meta_path,
        rows=matrix.shape[0],
        classes=sorted(classes),
        skipped=skipped,
    )
