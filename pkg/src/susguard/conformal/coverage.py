"""Monte Carlo validation of the marginal coverage guarantee."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DegenerateInputError
from .calibration import calibrate, compute_k, contains_batch
from .dissimilarity import Dissimilarity, fit_linear_transform


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted Gaussian mixture used as a synthetic state distribution."""

    means: np.ndarray  # (n_comp, d)
    covs: np.ndarray  # (n_comp, d, d)
    weights: np.ndarray  # (n_comp,)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or not np.all(w > 0):
            raise ConfigError("mixture weights must be positive")
        object.__setattr__(self, "weights", w / w.sum())
        object.__setattr__(self, "means", np.atleast_2d(np.asarray(self.means, dtype=float)))
        object.__setattr__(self, "covs", np.asarray(self.covs, dtype=float))

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for c in range(len(self.weights)):
            mask = comp == c
            m = int(mask.sum())
            if m:
                out[mask] = rng.multivariate_normal(self.means[c], self.covs[c], size=m)
        return out


@dataclass(frozen=True)
class SamplerSpec:
    """Paired unsafe/safe distributions for coverage experiments."""

    unsafe: GaussianMixture
    safe: GaussianMixture


def default_planar_sampler() -> SamplerSpec:
    """Two unsafe clusters embedded in a broad safe cloud (2-D)."""

    def iso(s: float) -> np.ndarray:
        return np.asarray([[s, 0.0], [0.0, s]])

    unsafe = GaussianMixture(
        means=[[-2.0, 0.5], [2.0, -0.5]],
        covs=np.stack([iso(0.35), iso(0.25)]),
        weights=[0.5, 0.5],
    )
    safe = GaussianMixture(
        means=[[0.0, 2.0], [0.0, -2.0], [-3.5, -2.5], [3.5, 2.5]],
        covs=np.stack([iso(1.2), iso(1.2), iso(0.8), iso(0.8)]),
        weights=[0.35, 0.35, 0.15, 0.15],
    )
    return SamplerSpec(unsafe=unsafe, safe=safe)


@dataclass(frozen=True)
class CoverageReport:
    repetitions: int
    mean_coverage: float
    coverage_samples: np.ndarray
    lower_bound: float  # 1 - eps
    upper_bound: float  # + 2/(N+1) symmetric, + 1/(N+1) + 1/N asymmetric
    epsilon: float
    n_unsafe: int
    n_safe: int
    dissimilarity_kind: str
    extra: dict = field(default_factory=dict)

    @property
    def std_error(self) -> float:
        if self.repetitions < 2:
            return 0.0
        return float(np.std(self.coverage_samples, ddof=1) / np.sqrt(self.repetitions))


def _build_dissimilarity(kind: str, safe: np.ndarray, transform_latent_dim: int | None) -> Dissimilarity:
    if transform_latent_dim is not None:
        transform = fit_linear_transform(safe, transform_latent_dim)
        inner = kind
        needs_safe = kind in ("unsafe_safe_squared", "neg_safe_distance")
        return Dissimilarity.transformed(transform, inner, safe_states=safe if needs_safe else None)
    if kind == "unsafe_safe_squared":
        return Dissimilarity.unsafe_safe_squared(safe)
    if kind == "neg_safe_distance":
        return Dissimilarity.neg_safe_distance(safe)
    if kind in ("euclidean", "squared_euclidean"):
        return Dissimilarity(kind=kind)
    raise ConfigError(f"unknown dissimilarity kind {kind!r}")


def monte_carlo_coverage(
    sampler: SamplerSpec,
    n_unsafe: int,
    n_safe: int,
    epsilon: float,
    repetitions: int,
    n_test: int,
    dissimilarity_kind: str = "euclidean",
    rng_seed: int = 0,
    transform_latent_dim: int | None = None,
) -> CoverageReport:
    """Re-calibrate on fresh draws and measure coverage on fresh test draws.

    Each repetition derives its RNG stream from (rng_seed, repetition_index),
    so results do not depend on scheduling or repetition order.
    """
    if repetitions < 1:
        raise DegenerateInputError("repetitions must be >= 1")
    if n_test < 1:
        raise DegenerateInputError("n_test must be >= 1 (empty coverage samples)")
    compute_k(n_unsafe, epsilon)  # fail fast on infeasible epsilon

    samples = np.empty(repetitions)
    for rep in range(repetitions):
        rng = np.random.default_rng(np.random.SeedSequence((rng_seed, rep)))
        unsafe = sampler.unsafe.draw(rng, n_unsafe)
        safe = sampler.safe.draw(rng, n_safe)
        diss = _build_dissimilarity(dissimilarity_kind, safe, transform_latent_dim)
        cal = calibrate(unsafe, epsilon, diss)
        test = sampler.unsafe.draw(rng, n_test)
        samples[rep] = float(contains_batch(cal, test).mean())

    n = n_unsafe
    symmetric = dissimilarity_kind in ("euclidean", "squared_euclidean")
    upper = (1.0 - epsilon) + (2.0 / (n + 1) if symmetric else 1.0 / (n + 1) + 1.0 / n)
    return CoverageReport(
        repetitions=repetitions,
        mean_coverage=float(samples.mean()),
        coverage_samples=samples,
        lower_bound=1.0 - epsilon,
        upper_bound=upper,
        epsilon=float(epsilon),
        n_unsafe=n_unsafe,
        n_safe=n_safe,
        dissimilarity_kind=dissimilarity_kind,
        extra={"transform_latent_dim": transform_latent_dim},
    )
