"""Spherical-uniform source F_U: U = r v with r ~ Uniform[0, tau_cap], v uniform on the sphere"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SourceSample:
    """A batch of source points; row i satisfies u[i] = radius[i] * direction[i]."""
    u: np.ndarray
    radius: np.ndarray
    direction: np.ndarray
    tau_cap: float = 1.0

    def __len__(self) -> int:
        return self.u.shape[0]

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def scaled(self, tau: float) -> "SourceSample":
        """Same directions and radius fractions, radius cap moved from ``tau_cap`` to ``tau``."""
        _check_tau(tau)
        radius = self.radius * (tau / self.tau_cap)
        return SourceSample(radius[:, None] * self.direction, radius, self.direction, tau)

    def on_sphere(self, tau: float) -> np.ndarray:
        """Directions pushed to the radius-``tau`` sphere."""
        _check_tau(tau)
        return tau * self.direction


def _check_tau(tau: float):
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau_cap must lie in (0, 1], got {tau}")


def sample_directions(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((count, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    # a zero draw has probability zero; redraw the row if it ever happens
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        v[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v / norms


def sample_source(d: int, count: int, tau_cap: float, rng: np.random.Generator) -> SourceSample:
    """``count`` draws from tau_cap * F_U in dimension ``d``."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    _check_tau(tau_cap)
    direction = sample_directions(d, count, rng)
    radius = rng.uniform(0.0, tau_cap, size=count)
    return SourceSample(radius[:, None] * direction, radius, direction, float(tau_cap))
