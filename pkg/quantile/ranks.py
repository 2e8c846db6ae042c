"""Vector ranks R(theta) = argmax_{|u| <= 1} theta^T u - psi(u, x) and depth ordering"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from loguru import logger

from simulators import sample_source
from .sampling import _require_inference


@dataclass
class RankResult:
    theta: np.ndarray
    u_star: np.ndarray
    objective: float
    converged: bool
    iterations: int
    trace: List[float] = field(default_factory=list)

    @property
    def depth(self) -> float:
        """Depth proxy 1 - |u*|: 1 at the center of the source ball, 0 on its boundary."""
        return 1.0 - float(np.linalg.norm(self.u_star))


def _project_ball(u: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    return np.where(norm > 1.0, u / np.maximum(norm, 1e-300), u)


def _objective(model, x, theta: np.ndarray, u: np.ndarray) -> np.ndarray:
    return u @ theta - model.potential(u, x)


def vector_rank(model, x: np.ndarray, theta: np.ndarray, rng: Optional[np.random.Generator] = None,
                starts: int = 256, max_iter: int = 500, tol: float = 1e-10, step: float = 1.0) -> RankResult:
    """Projected gradient ascent on the unit ball from the best of ``starts`` source draws.

    Steps that would lower the objective are halved until they do not, so the
    objective trace is nondecreasing.
    """
    _require_inference(model)
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.size != model.d:
        raise ValueError(f"theta has {theta.size} coordinates, model expects {model.d}")
    rng = np.random.default_rng(0) if rng is None else rng

    candidates = np.vstack([np.zeros((1, model.d)), sample_source(model.d, starts, 1.0, rng).u])
    values = _objective(model, x, theta, candidates)
    best = int(np.argmax(values))
    u = candidates[best]
    value = float(values[best])
    trace = [value]
    eta = step
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        grad = theta - model.grad_u(u[None, :], x)[0]
        accepted = False
        while eta > 1e-12:
            u_new = _project_ball(u + eta * grad)
            value_new = float(_objective(model, x, theta, u_new[None, :])[0])
            if value_new >= value:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            converged = True
            break
        moved = float(np.linalg.norm(u_new - u))
        u, value = u_new, value_new
        trace.append(value)
        if moved < tol:
            converged = True
            break
        eta = min(eta * 2.0, step)

    if not converged:
        logger.warning(f"vector_rank did not converge in {max_iter} iterations (theta={np.round(theta, 4).tolist()})")
    return RankResult(theta=theta, u_star=u, objective=value, converged=converged, iterations=iteration, trace=trace)


def mk_depth_order(model, x: np.ndarray, thetas: Sequence[np.ndarray], rng: Optional[np.random.Generator] = None) -> List[int]:
    """Indices of ``thetas`` from deepest to shallowest; ties keep input order."""
    rng = np.random.default_rng(0) if rng is None else rng
    depths = [vector_rank(model, x, theta, rng).depth for theta in thetas]
    return sorted(range(len(depths)), key=lambda k: -depths[k])
