"""Sample-based comparison metrics: MMD with a permutation null, DTM, hull area and 1-D W2"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Optional, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_validator
from scipy.spatial.distance import cdist, pdist

from quantile import Hull, polygon_area
from simulators import Simulator


class MetricReport(BaseModel):
    """One evaluation record, serialized as a JSON line"""
    metric: str
    value: float
    sizes: Dict[str, int] = Field(default_factory=dict)
    metadata: Dict[str, Any] = Field(default_factory=dict)
    seed: Optional[int] = None

    @field_validator("value")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError(f"metric value must be finite, got {value}")
        return value


def _as_samples(samples: np.ndarray, label: str) -> np.ndarray:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 2:
        raise ValueError(f"{label} must be an (N, d) array with N >= 2, got shape {arr.shape}")
    return arr


def median_bandwidth(pooled: np.ndarray) -> float:
    """Median pairwise Euclidean distance; 1.0 with a warning when it is zero."""
    bandwidth = float(np.median(pdist(pooled)))
    if not bandwidth > 0.0:
        logger.warning("Median pairwise distance is zero; falling back to MMD bandwidth 1.0")
        return 1.0
    return bandwidth


def rbf_kernel(a: np.ndarray, b: np.ndarray, bandwidth: float) -> np.ndarray:
    return np.exp(-0.5 * cdist(a, b, "sqeuclidean") / bandwidth ** 2)


def _within(kernel: np.ndarray) -> float:
    m = kernel.shape[0]
    return (kernel.sum() - np.trace(kernel)) / (m * (m - 1))


def mmd(samples_a: np.ndarray, samples_b: np.ndarray, bandwidth: Optional[float] = None) -> float:
    """Unbiased squared MMD with the Gaussian RBF kernel; may be slightly negative.

    The bandwidth defaults to the median pairwise distance of the pooled sample.
    """
    a = _as_samples(samples_a, "samples_a")
    b = _as_samples(samples_b, "samples_b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"sample dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    if bandwidth is None:
        bandwidth = median_bandwidth(np.vstack([a, b]))
    cross = np.sort(rbf_kernel(a, b, bandwidth), axis=None)  # sorted so mmd(a, b) == mmd(b, a) bit for bit
    return float(_within(rbf_kernel(a, a, bandwidth)) + _within(rbf_kernel(b, b, bandwidth)) - 2.0 * cross.mean())


def _mmd_from_kernel(kernel: np.ndarray, ia: np.ndarray, ib: np.ndarray) -> float:
    return float(_within(kernel[np.ix_(ia, ia)]) + _within(kernel[np.ix_(ib, ib)]) - 2.0 * kernel[np.ix_(ia, ib)].mean())


def mmd_permutation_null(samples_a: np.ndarray, samples_b: np.ndarray, rng: np.random.Generator,
                         permutations: int = 200, bandwidth: Optional[float] = None) -> np.ndarray:
    """MMD values over random relabelings of the pooled sample, at a fixed bandwidth."""
    a = _as_samples(samples_a, "samples_a")
    b = _as_samples(samples_b, "samples_b")
    pooled = np.vstack([a, b])
    if bandwidth is None:
        bandwidth = median_bandwidth(pooled)
    kernel = rbf_kernel(pooled, pooled, bandwidth)
    m = len(a)
    null = np.empty(permutations)
    for k in range(permutations):
        perm = rng.permutation(len(pooled))
        null[k] = _mmd_from_kernel(kernel, perm[:m], perm[m:])
    return null


@dataclass
class MmdTest:
    value: float
    threshold: float
    p_value: float
    bandwidth: float
    alpha: float
    null: np.ndarray

    @property
    def rejected(self) -> bool:
        return self.value > self.threshold


def mmd_test(samples_a: np.ndarray, samples_b: np.ndarray, rng: np.random.Generator,
             alpha: float = 0.05, permutations: int = 200) -> MmdTest:
    """Permutation two-sample test; the threshold is the (1 - alpha) quantile of the null."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    a = _as_samples(samples_a, "samples_a")
    b = _as_samples(samples_b, "samples_b")
    bandwidth = median_bandwidth(np.vstack([a, b]))
    value = mmd(a, b, bandwidth)
    null = mmd_permutation_null(a, b, rng, permutations, bandwidth)
    threshold = float(np.quantile(null, 1.0 - alpha))
    p_value = float((1 + np.sum(null >= value)) / (1 + permutations))
    return MmdTest(value=value, threshold=threshold, p_value=p_value, bandwidth=bandwidth, alpha=alpha, null=null)


PosteriorSampler = Callable[[np.ndarray, int, np.random.Generator], np.ndarray]


def dtm(posterior_sampler: PosteriorSampler, prior_simulator: Simulator, J: int = 100, I: int = 300,
        rng: Optional[np.random.Generator] = None) -> float:
    """Mean absolute deviation between generating parameters and posterior draws.

    For each of J prior draws theta*_j with data X_j, ``posterior_sampler(X_j, I, rng)``
    returns I draws; deviations are averaged over draws and coordinates.
    """
    if J < 1 or I < 1:
        raise ValueError(f"J and I must be >= 1, got J={J}, I={I}")
    rng = np.random.default_rng(0) if rng is None else rng
    total = 0.0
    for _ in range(J):
        truth = prior_simulator.simulate(1, rng)
        draws = np.asarray(posterior_sampler(truth.x[0], I, rng), dtype=np.float64).reshape(I, -1)
        total += float(np.mean(np.abs(draws - truth.theta[0])))
    return total / J


def hull_area(polygon: Union[Hull, np.ndarray]) -> float:
    """Shoelace area of a convex polygon; 0 with a warning when degenerate."""
    if isinstance(polygon, Hull):
        degenerate, vertices = polygon.degenerate, polygon.vertices
    else:
        vertices = np.asarray(polygon, dtype=np.float64)
        degenerate = len(vertices) < 3
    if degenerate:
        logger.warning("Degenerate hull has zero area")
        return 0.0
    return polygon_area(vertices)


def w2_1d(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """Root-mean-square difference of sorted samples.

    Unequal sizes are matched by evaluating both empirical quantile functions
    at the midpoints of the larger sample's grid.
    """
    a = np.sort(np.ravel(np.asarray(samples_a, dtype=np.float64)))
    b = np.sort(np.ravel(np.asarray(samples_b, dtype=np.float64)))
    if a.size == 0 or b.size == 0:
        raise ValueError("w2_1d needs non-empty samples")
    if a.size != b.size:
        grid = (np.arange(max(a.size, b.size)) + 0.5) / max(a.size, b.size)
        a = np.quantile(a, grid)
        b = np.quantile(b, grid)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def w2_marginals(samples_a: np.ndarray, samples_b: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(np.asarray(samples_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(samples_b, dtype=np.float64))
    return np.array([w2_1d(a[:, k], b[:, k]) for k in range(a.shape[1])])
