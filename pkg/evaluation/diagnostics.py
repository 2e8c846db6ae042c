"""Coverage of credible sets and empirical checks that the learned map is a convex gradient"""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from loguru import logger

from quantile import sample_credible_set, sample_posterior
from simulators import sample_source


@dataclass
class CoverageResult:
    tau: float
    fraction: float
    n_test: int
    degenerate_pairs: List[Tuple[int, int]] = field(default_factory=list)


@dataclass
class ViolationReport:
    rate: float
    worst: float
    pairs: int


def coverage(model, x: np.ndarray, tau: float, N_set: int, N_test: int, rng: np.random.Generator) -> CoverageResult:
    """Fraction of N_test full-posterior draws inside the tau credible set (every pairwise hull for d > 2)."""
    cred = sample_credible_set(model, x, tau, N_set, rng)
    test = sample_posterior(model, x, N_test, rng)
    fraction = float(np.mean(cred.contains(test.points)))
    return CoverageResult(tau=cred.tau, fraction=fraction, n_test=N_test, degenerate_pairs=cred.degenerate_pairs)


def _pairs(model, rng: np.random.Generator, pairs: int) -> Tuple[np.ndarray, np.ndarray]:
    u = sample_source(model.d, pairs, 1.0, rng).u
    v = sample_source(model.d, pairs, 1.0, rng).u
    return u, v


def monotonicity_violation_rate(model, x: np.ndarray, rng: np.random.Generator,
                                pairs: int = 1000, tol: float = 1e-6) -> ViolationReport:
    """Pairs with [Q(u) - Q(v)]^T (u - v) < -tol; ``worst`` is the most negative inner product (or 0)."""
    u, v = _pairs(model, rng, pairs)
    inner = np.sum((model.grad_u(u, x) - model.grad_u(v, x)) * (u - v), axis=1)
    report = ViolationReport(rate=float(np.mean(inner < -tol)), worst=float(min(inner.min(), 0.0)), pairs=pairs)
    if report.rate > 0:
        logger.warning(f"Monotonicity violated on {report.rate:.4f} of pairs (worst {report.worst:.3g})")
    return report


def convexity_violation_rate(model, x: np.ndarray, rng: np.random.Generator,
                             pairs: int = 1000, tol: float = 1e-6) -> ViolationReport:
    """Pairs where psi(v) < psi(u) + grad psi(u)^T (v - u) - tol."""
    u, v = _pairs(model, rng, pairs)
    gap = model.potential(v, x) - model.potential(u, x) - np.sum(model.grad_u(u, x) * (v - u), axis=1)
    report = ViolationReport(rate=float(np.mean(gap < -tol)), worst=float(min(gap.min(), 0.0)), pairs=pairs)
    if report.rate > 0:
        logger.warning(f"Convexity violated on {report.rate:.4f} of pairs (worst {report.worst:.3g})")
    return report
