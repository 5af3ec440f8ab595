"""Dissimilarity measures for nearest-neighbor conformal scores.

Supported kinds:

``euclidean``
    d(x', x) = ||x' - x||_2. Symmetric, nonnegative.
``squared_euclidean``
    d(x', x) = ||x' - x||_2^2. Symmetric, nonnegative.
``unsafe_safe_squared``
    d(x', x) = ||x' - x||^2 - min_{y in D_G} ||y - x||^2 against a reference
    safe set D_G. Asymmetric and possibly negative; the subtracted term
    depends only on the query, so nearest-neighbor structure is preserved.
``neg_safe_distance``
    d(x', x) = -min_{y in D_G} ||y - x||_2: ignores x' entirely and flags
    points far from every safe state. Used by the safe-only monitor ablation.
``transformed``
    Applies a fitted linear map first, then one of the kinds above in the
    latent space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DegenerateInputError, DimensionMismatchError

BASE_KINDS = ("euclidean", "squared_euclidean", "unsafe_safe_squared", "neg_safe_distance")


@dataclass(frozen=True)
class LinearTransform:
    """Mean-centering followed by projection onto orthonormal rows."""

    mean: np.ndarray
    components: np.ndarray  # (latent_dim, ambient_dim), orthonormal rows
    rank_deficient: bool = False

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x - self.mean) @ self.components.T

    @property
    def latent_dim(self) -> int:
        return self.components.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.components.shape[1]


def fit_linear_transform(safe_states: np.ndarray, latent_dim: int) -> LinearTransform:
    """PCA projection onto the top latent_dim principal directions.

    Fit on safe states only, so calibration data never leaks into the
    transform. If the sample covariance is rank deficient the transform keeps
    as many directions as the rank allows and sets ``rank_deficient``.
    """
    pts = np.asarray(safe_states, dtype=float)
    if pts.ndim != 2:
        raise DimensionMismatchError("safe_states must be a 2-D array")
    n, d = pts.shape
    if latent_dim < 1:
        raise ConfigError("latent_dim must be >= 1")
    if n <= latent_dim:
        raise DegenerateInputError(f"need more than latent_dim={latent_dim} points, got {n}")
    mean = pts.mean(axis=0)
    centered = pts - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    tol = max(n, d) * np.finfo(float).eps * (svals[0] if svals.size else 0.0)
    rank = int((svals > tol).sum())
    keep = min(latent_dim, rank)
    comps = vt[:keep].copy()
    # deterministic sign: flip each row so its largest-|.| entry is positive
    for row in comps:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    return LinearTransform(mean=mean, components=comps, rank_deficient=keep < latent_dim)


@dataclass(frozen=True)
class Dissimilarity:
    kind: str
    safe_states: np.ndarray | None = None
    transform: LinearTransform | None = None
    inner_kind: str | None = None
    _latent_safe: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "transformed":
            if self.transform is None or self.inner_kind not in BASE_KINDS:
                raise ConfigError("transformed kind needs a transform and a base inner_kind")
        elif self.kind not in BASE_KINDS:
            raise ConfigError(f"unknown dissimilarity kind: {self.kind!r}")
        if self.effective_kind in ("unsafe_safe_squared", "neg_safe_distance"):
            if self.safe_states is None or len(self.safe_states) == 0:
                raise DegenerateInputError(f"{self.effective_kind} requires a non-empty safe set")
        if self.safe_states is not None:
            ss = np.ascontiguousarray(self.safe_states, dtype=float)
            object.__setattr__(self, "safe_states", ss)
            latent = self.transform.apply(ss) if self.transform is not None else ss
            object.__setattr__(self, "_latent_safe", np.ascontiguousarray(latent))

    # -- constructors ------------------------------------------------------
    @staticmethod
    def euclidean() -> "Dissimilarity":
        return Dissimilarity(kind="euclidean")

    @staticmethod
    def squared_euclidean() -> "Dissimilarity":
        return Dissimilarity(kind="squared_euclidean")

    @staticmethod
    def unsafe_safe_squared(safe_states: np.ndarray) -> "Dissimilarity":
        return Dissimilarity(kind="unsafe_safe_squared", safe_states=np.asarray(safe_states, dtype=float))

    @staticmethod
    def neg_safe_distance(safe_states: np.ndarray) -> "Dissimilarity":
        return Dissimilarity(kind="neg_safe_distance", safe_states=np.asarray(safe_states, dtype=float))

    @staticmethod
    def transformed(transform: LinearTransform, inner_kind: str, safe_states: np.ndarray | None = None) -> "Dissimilarity":
        return Dissimilarity(
            kind="transformed",
            transform=transform,
            inner_kind=inner_kind,
            safe_states=None if safe_states is None else np.asarray(safe_states, dtype=float),
        )

    # -- properties ---------------------------------------------------------
    @property
    def effective_kind(self) -> str:
        return self.inner_kind if self.kind == "transformed" else self.kind

    @property
    def symmetric(self) -> bool:
        return self.effective_kind in ("euclidean", "squared_euclidean")

    @property
    def latent_safe(self) -> np.ndarray | None:
        return self._latent_safe

    def to_latent(self, x: np.ndarray) -> np.ndarray:
        return self.transform.apply(x) if self.transform is not None else np.asarray(x, dtype=float)
