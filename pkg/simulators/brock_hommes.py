"""Brock–Hommes heterogeneous-beliefs asset pricing model.

x_{t+1} = (1/R) sum_h w_{h,t+1} (g_h x_t + b_h) + eps_{t+1}
w_{h,t+1} = softmax_h(beta A_{h,t})
A_{h,t} = (x_t - R x_{t-1}) (g_h x_{t-2} + b_h - R x_{t-1})

Four strategies; theta = (g2, b2, g3, b3) and the first and fourth strategy
are fixed by the config.
"""

from typing import Optional, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .base import Simulator, TrainingBatch
from .source import sample_source

PRIOR_BOUNDS = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 1.0], [-1.0, 0.0]])
THETA_STAR = np.array([0.9, 0.2, 0.9, -0.2])


class DivergenceError(RuntimeError):
    """Series left the divergence cap for a parameter draw"""

    def __init__(self, theta: np.ndarray, step: int, cap: float):
        super().__init__(f"Brock–Hommes series diverged (|x| > {cap:g}) at step {step} for theta={np.round(theta, 6).tolist()}")
        self.theta = np.asarray(theta)
        self.step = step


class BrockHommesConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    beta: float = 120.0
    R: float = 1.01
    sigma: float = Field(default=0.04, ge=0.0)
    H: int = 4
    g1: float = 0.0
    b1: float = 0.0
    g4: float = 1.01
    b4: float = 0.0
    T: int = Field(default=100, ge=3)
    burn_in: int = Field(default=50, ge=0)
    divergence_cap: float = Field(default=1e6, gt=0.0)
    max_redraws: int = Field(default=100, ge=0)

    @model_validator(mode="after")
    def _check_constants(self):
        if self.R == 0:
            raise ValueError("R must be nonzero")
        if self.H != 4:
            raise ValueError(f"only the four-strategy configuration is supported, got H={self.H}")
        return self


def sample_brock_hommes_prior(rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
    """g2, b2, g3 ~ U(0, 1) and b3 ~ U(-1, 0); shape (4,) or (count, 4)."""
    size = 1 if count is None else count
    theta = rng.uniform(PRIOR_BOUNDS[:, 0], PRIOR_BOUNDS[:, 1], size=(size, 4))
    return theta[0] if count is None else theta


def strategy_coefficients(cfg: BrockHommesConfig, theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(N, 4) trend coefficients g and biases b for a batch of theta."""
    theta = np.atleast_2d(theta)
    count = theta.shape[0]
    g = np.column_stack([np.full(count, cfg.g1), theta[:, 0], theta[:, 2], np.full(count, cfg.g4)])
    b = np.column_stack([np.full(count, cfg.b1), theta[:, 1], theta[:, 3], np.full(count, cfg.b4)])
    return g, b


def strategy_fractions(cfg: BrockHommesConfig, g: np.ndarray, b: np.ndarray,
                       x_t: np.ndarray, x_tm1: np.ndarray, x_tm2: np.ndarray) -> np.ndarray:
    """Softmax of beta * fitness with max-subtraction; rows sum to one."""
    fitness = (x_t - cfg.R * x_tm1)[:, None] * (g * x_tm2[:, None] + b - cfg.R * x_tm1[:, None])
    logits = cfg.beta * fitness
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=1, keepdims=True)


def run_recursion(cfg: BrockHommesConfig, theta: np.ndarray, noise: np.ndarray,
                  record_fractions: bool = False):
    """Run the recursion for a batch from x0 = x1 = x2 = 0.

    ``noise`` has shape (N, burn_in + T) and is already scaled by sigma.
    Returns ``(series (N, T), diverged_at (N,), fractions or None)``; ``diverged_at``
    is -1 for finite runs.
    """
    g, b = strategy_coefficients(cfg, theta)
    count, steps = noise.shape
    x_tm2 = np.zeros(count)
    x_tm1 = np.zeros(count)
    x_t = np.zeros(count)
    series = np.empty((count, steps))
    fractions = np.empty((count, steps, 4)) if record_fractions else None
    diverged_at = np.full(count, -1)
    for step in range(steps):
        w = strategy_fractions(cfg, g, b, x_t, x_tm1, x_tm2)
        x_next = (w * (g * x_t[:, None] + b)).sum(axis=1) / cfg.R + noise[:, step]
        bad = (~np.isfinite(x_next) | (np.abs(x_next) > cfg.divergence_cap)) & (diverged_at < 0)
        diverged_at[bad] = step
        # frozen at zero once diverged so the batch stays finite
        x_next = np.where(diverged_at >= 0, 0.0, x_next)
        series[:, step] = x_next
        if record_fractions:
            fractions[:, step] = w
        x_tm2, x_tm1, x_t = x_tm1, x_t, x_next
    keep = slice(cfg.burn_in, steps)
    return series[:, keep], diverged_at, (fractions[:, keep] if record_fractions else None)


def _check_support(theta: np.ndarray):
    theta = np.atleast_2d(theta)
    if theta.shape[1] != 4:
        raise ValueError(f"theta must have 4 coordinates (g2, b2, g3, b3), got {theta.shape[1]}")
    outside = (theta < PRIOR_BOUNDS[:, 0]) | (theta > PRIOR_BOUNDS[:, 1])
    if np.any(outside):
        row = int(np.argwhere(outside)[0][0])
        raise ValueError(f"theta {theta[row].tolist()} outside the prior support")


def simulate_brock_hommes(cfg: BrockHommesConfig, theta: np.ndarray, rng: np.random.Generator,
                          return_fractions: bool = False):
    """One series x_1..x_T after burn-in; optionally also the (T, 4) strategy fractions."""
    theta = np.asarray(theta, dtype=np.float64)
    _check_support(theta)
    noise = cfg.sigma * rng.standard_normal((1, cfg.burn_in + cfg.T))
    series, diverged_at, fractions = run_recursion(cfg, theta[None, :], noise, record_fractions=return_fractions)
    if diverged_at[0] >= 0:
        raise DivergenceError(theta, int(diverged_at[0]), cfg.divergence_cap)
    if return_fractions:
        return series[0], fractions[0]
    return series[0]


class BrockHommesSimulator(Simulator):
    """theta = (g2, b2, g3, b3); data is one (1, T) series."""

    name = "brock_hommes"
    param_dim = 4
    data_dim = 1

    def __init__(self, config: BrockHommesConfig):
        self.config = config
        self.redraws = 0
        self.draws = 0

    @property
    def n_obs(self) -> int:
        return self.config.T

    def sample_prior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_brock_hommes_prior(rng, count)

    def prior_support(self) -> np.ndarray:
        return PRIOR_BOUNDS.copy()

    def simulate_data(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        theta = np.atleast_2d(theta)
        _check_support(theta)
        cfg = self.config
        noise = cfg.sigma * rng.standard_normal((theta.shape[0], cfg.burn_in + cfg.T))
        series, diverged_at, _ = run_recursion(cfg, theta, noise)
        if np.any(diverged_at >= 0):
            row = int(np.argmax(diverged_at >= 0))
            raise DivergenceError(theta[row], int(diverged_at[row]), cfg.divergence_cap)
        return series[:, None, :]

    def simulate(self, count: int, rng: np.random.Generator):
        """Prior draws whose series diverge are rejected and redrawn."""
        cfg = self.config
        theta = self.sample_prior(count, rng)
        noise = cfg.sigma * rng.standard_normal((count, cfg.burn_in + cfg.T))
        series, diverged_at, _ = run_recursion(cfg, theta, noise)
        rejected = 0
        for _ in range(cfg.max_redraws):
            bad = np.flatnonzero(diverged_at >= 0)
            if bad.size == 0:
                break
            rejected += bad.size
            theta[bad] = self.sample_prior(bad.size, rng)
            noise_bad = cfg.sigma * rng.standard_normal((bad.size, cfg.burn_in + cfg.T))
            series[bad], diverged_at[bad], _ = run_recursion(cfg, theta[bad], noise_bad)
        else:
            if np.any(diverged_at >= 0):
                row = int(np.argmax(diverged_at >= 0))
                raise DivergenceError(theta[row], int(diverged_at[row]), cfg.divergence_cap)
        self.draws += count
        self.redraws += rejected
        if rejected:
            logger.warning(f"Brock–Hommes: redrew {rejected} diverging theta draws "
                           f"(rate {self.redraws / max(self.draws, 1):.4f} so far)")
        u = sample_source(self.param_dim, count, 1.0, rng).u
        return TrainingBatch(theta, series[:, None, :], u)
