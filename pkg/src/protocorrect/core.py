"""Embedding vector math: the value types and distance functions everything else builds on.

Vectors are plain 1-D numpy arrays. They may be stored in float32 (the dataset
file format is float32), but every distance here is computed in float64 so that
argmin tie-breaks do not flip across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, InvalidConfig, ZeroVector

# Norms at or below this are treated as degenerate zero vectors. Any real
# embedding is orders of magnitude above it.
NORM_EPS = 1e-12

# Cosine distances below this are colinearity at the limit of float64
# arithmetic (1 - dot/(|u||v|) keeps a 1-2 ulp residue even for u == v);
# they snap to exactly 0 so that self-matches report distance 0.
COLINEAR_SNAP = 1e-15


@dataclass(frozen=True, order=True)
class ClassLabel:
    """A class identity: canonical non-negative integer id plus a display name."""

    id: int
    name: str

    def __post_init__(self) -> None:
        if self.id < 0:
            raise InvalidConfig(f"class id must be non-negative, got {self.id}")


def as_vector(values: Iterable[float] | np.ndarray) -> np.ndarray:
    """Validate an embedding vector and return it as a float64 1-D array.

    Raises DimensionMismatch for non-1-D input and InvalidConfig for NaN/Inf.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidConfig("vector contains NaN or Inf")
    return arr


def _pair(u, v) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_vector(u), as_vector(v)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a, b


def cosine_distance(u, v) -> float:
    """1 - cos(u, v), in [0, 2]. Symmetric and scale-invariant.

    Raises ZeroVector if either norm is <= NORM_EPS.
    """
    a, b = _pair(u, v)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na <= NORM_EPS or nb <= NORM_EPS:
        raise ZeroVector(f"cosine distance undefined for near-zero vector (norms {na:g}, {nb:g})")
    d = 1.0 - float(np.dot(a, b)) / (na * nb)
    if d < COLINEAR_SNAP:
        return 0.0
    return min(d, 2.0)


def l1_distance(u, v) -> float:
    """Sum of absolute component-wise differences."""
    a, b = _pair(u, v)
    return float(np.abs(a - b).sum())


def normalize(v) -> np.ndarray:
    """v / ||v|| as float64. Raises ZeroVector when the norm is <= NORM_EPS."""
    a = as_vector(v)
    n = float(np.linalg.norm(a))
    if n <= NORM_EPS:
        raise ZeroVector(f"cannot normalize vector with norm {n:g}")
    return a / n


def mean(vs: Sequence) -> np.ndarray:
    """Component-wise arithmetic mean of a non-empty sequence of same-dim vectors."""
    vs = list(vs)
    if not vs:
        raise EmptyInput("mean of an empty sequence of vectors")
    arrs = [as_vector(v) for v in vs]
    dim = arrs[0].shape[0]
    for a in arrs[1:]:
        if a.shape[0] != dim:
            raise DimensionMismatch(f"dimension mismatch: {dim} vs {a.shape[0]}")
    return np.mean(np.vstack(arrs), axis=0)
