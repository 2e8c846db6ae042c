"""Posterior draws and tau-credible sets by pushing source draws through grad_u psi"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from simulators import SourceSample, sample_source
from .geometry import Hull, convex_hull_2d, polygon_area

Pair = Tuple[int, int]


def _require_inference(model):
    if getattr(model, "training", False):
        raise ValueError("model must be in inference mode; call model.eval() first")


@dataclass
class PosteriorSampleSet:
    x: np.ndarray
    points: np.ndarray
    sources: SourceSample
    tau_cap: float = 1.0

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass
class CredibleSet:
    """Pushed-forward cloud at level tau with one hull per coordinate pair.

    ``boundary`` holds the images of the radius-tau sphere; hulls and
    intervals are taken over cloud and boundary together.
    """
    tau: float
    points: np.ndarray
    boundary: np.ndarray
    hulls: Dict[Pair, Hull] = field(default_factory=dict)
    intervals: np.ndarray = None

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def degenerate_pairs(self) -> List[Pair]:
        return [pair for pair, hull in self.hulls.items() if hull.degenerate]

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Inside every pairwise hull (d >= 2) or inside the interval (d = 1)."""
        pts = np.atleast_2d(points)
        if self.dim == 1:
            lo, hi = self.intervals[0]
            return (pts[:, 0] >= lo - tol) & (pts[:, 0] <= hi + tol)
        inside = np.ones(len(pts), dtype=bool)
        for (i, j), hull in self.hulls.items():
            inside &= hull.contains(pts[:, [i, j]], tol)
        return inside

    def area(self, pair: Pair = (0, 1)) -> float:
        hull = self.hulls[pair]
        return 0.0 if hull.degenerate else polygon_area(hull.vertices)

    def to_records(self) -> List[dict]:
        return [
            {"level": self.tau, "pair": list(pair), "vertices": hull.vertices.tolist(), "degenerate": hull.degenerate}
            for pair, hull in self.hulls.items()
        ]


def sample_posterior(model, x: np.ndarray, n: int, rng: np.random.Generator) -> PosteriorSampleSet:
    """n posterior draws grad_u psi(U_i, x) with U_i ~ F_U."""
    _require_inference(model)
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    sources = sample_source(model.d, n, 1.0, rng)
    return PosteriorSampleSet(x=np.asarray(x), points=model.grad_u(sources.u, x), sources=sources)


def _pair_hulls(cloud: np.ndarray) -> Dict[Pair, Hull]:
    hulls = {}
    for i, j in combinations(range(cloud.shape[1]), 2):
        hulls[(i, j)] = convex_hull_2d(cloud[:, [i, j]])
    return hulls


def sample_credible_set(model, x: np.ndarray, tau: float, n: int, rng: np.random.Generator,
                        shared: Optional[SourceSample] = None) -> CredibleSet:
    """Level-tau credible set from n source draws with radius capped at tau.

    Pass ``shared`` (a tau_cap = 1 source sample) to reuse directions and radius
    fractions across levels, which makes sets at different tau nested.
    """
    _require_inference(model)
    if not 0.0 < tau < 1.0 + 1e-12:
        raise ValueError(f"tau must lie in (0, 1), got {tau}")
    tau = min(float(tau), 1.0)
    count = n if shared is None else len(shared)
    if count < model.d + 1:
        raise ValueError(f"need at least d + 1 = {model.d + 1} points, got {count}")
    if shared is None:
        shared = sample_source(model.d, n, 1.0, rng)
    sources = shared.scaled(tau)
    cloud = model.grad_u(sources.u, x)
    boundary = model.grad_u(shared.on_sphere(tau), x)
    both = np.vstack([cloud, boundary])
    hulls = _pair_hulls(both)
    intervals = np.column_stack([both.min(axis=0), both.max(axis=0)])
    cred = CredibleSet(tau=tau, points=cloud, boundary=boundary, hulls=hulls, intervals=intervals)
    if cred.degenerate_pairs:
        logger.warning(f"Credible set at tau={tau}: degenerate hull for pairs {cred.degenerate_pairs}")
    return cred


def credible_sets(model, x: np.ndarray, taus: Sequence[float], n: int, rng: np.random.Generator) -> List[CredibleSet]:
    """Nested credible sets at several levels from one shared source sample."""
    shared = sample_source(model.d, n, 1.0, rng)
    return [sample_credible_set(model, x, tau, n, rng, shared=shared) for tau in taus]
