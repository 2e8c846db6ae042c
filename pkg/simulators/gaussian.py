"""Normal model with normal-inverse-chi-square conjugate prior and its exact posterior"""

from dataclasses import dataclass
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import stats

from .base import Simulator, TrainingBatch
from .source import sample_source


class GaussianConjugateConfig(BaseModel):
    """nu0 sigma0^2 / sigma^2 ~ chi2(nu0), mu | sigma^2 ~ N(mu0, sigma^2 / kappa), x_i ~ N(mu, sigma^2)"""
    model_config = ConfigDict(extra="forbid")

    mu0: float = 0.0
    sigma0: float = Field(default=1.0, gt=0.0)
    kappa: float = Field(default=2.0, gt=0.0)
    nu0: float = Field(default=25.0, gt=2.0)
    n_obs: int = Field(default=2, ge=1)


@dataclass(frozen=True)
class PosteriorOracle:
    """Normal-inverse-chi-square posterior over theta = (mu, sigma^2)."""
    mu_n: float
    kappa_n: float
    nu_n: float
    sigma2_n: float

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        sigma2 = self.nu_n * self.sigma2_n / rng.chisquare(self.nu_n, size=count)
        mu = rng.normal(self.mu_n, np.sqrt(sigma2 / self.kappa_n))
        return np.column_stack([mu, sigma2])

    def mu_marginal(self):
        """mu | x is Student-t with nu_n dof, location mu_n, scale sqrt(sigma2_n / kappa_n)."""
        return stats.t(df=self.nu_n, loc=self.mu_n, scale=np.sqrt(self.sigma2_n / self.kappa_n))

    def sigma2_marginal(self):
        """sigma^2 | x is scaled inverse chi-square(nu_n, sigma2_n)."""
        return stats.invgamma(a=self.nu_n / 2.0, scale=self.nu_n * self.sigma2_n / 2.0)


def sample_gaussian_prior(cfg: GaussianConjugateConfig, count: int, rng: np.random.Generator) -> np.ndarray:
    sigma2 = cfg.nu0 * cfg.sigma0 ** 2 / rng.chisquare(cfg.nu0, size=count)
    mu = rng.normal(cfg.mu0, np.sqrt(sigma2 / cfg.kappa))
    return np.column_stack([mu, sigma2])


def simulate_gaussian_data(theta: np.ndarray, n_obs: int, rng: np.random.Generator) -> np.ndarray:
    mu, sigma2 = theta[:, 0], theta[:, 1]
    noise = rng.standard_normal((theta.shape[0], 1, n_obs))
    return mu[:, None, None] + np.sqrt(sigma2)[:, None, None] * noise


def simulate_gaussian_batch(cfg: GaussianConjugateConfig, count: int, rng: np.random.Generator) -> TrainingBatch:
    """``count`` triples with theta = (mu, sigma^2), x of shape (1, n_obs) and U ~ F_U in 2-D."""
    if count < 1:
        raise ValueError(f"batch size must be >= 1, got {count}")
    theta = sample_gaussian_prior(cfg, count, rng)
    x = simulate_gaussian_data(theta, cfg.n_obs, rng)
    u = sample_source(2, count, 1.0, rng).u
    return TrainingBatch(theta, x, u)


def gaussian_posterior_oracle(cfg: GaussianConjugateConfig, observed: Union[np.ndarray, list]) -> PosteriorOracle:
    x = np.ravel(np.asarray(observed, dtype=np.float64))
    n = x.size
    if n < 1:
        raise ValueError("posterior oracle needs at least one observation")
    xbar = x.mean()
    kappa_n = cfg.kappa + n
    nu_n = cfg.nu0 + n
    mu_n = (cfg.kappa * cfg.mu0 + n * xbar) / kappa_n
    scatter = np.sum((x - xbar) ** 2)
    shrinkage = cfg.kappa * n / kappa_n * (xbar - cfg.mu0) ** 2
    sigma2_n = (cfg.nu0 * cfg.sigma0 ** 2 + scatter + shrinkage) / nu_n
    return PosteriorOracle(mu_n=mu_n, kappa_n=kappa_n, nu_n=nu_n, sigma2_n=sigma2_n)


class GaussianConjugateSimulator(Simulator):
    """theta = (mu, sigma^2), data (1, n_obs). Observed data replicate a scalar x across the n slots."""

    name = "gaussian"
    param_dim = 2
    data_dim = 1
    has_oracle = True

    def __init__(self, config: GaussianConjugateConfig):
        self.config = config

    @property
    def n_obs(self) -> int:
        return self.config.n_obs

    def sample_prior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return sample_gaussian_prior(self.config, count, rng)

    def simulate_data(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return simulate_gaussian_data(np.atleast_2d(theta), self.config.n_obs, rng)

    def simulate(self, count: int, rng: np.random.Generator) -> TrainingBatch:
        return simulate_gaussian_batch(self.config, count, rng)

    def prior_support(self) -> np.ndarray:
        return np.array([[-np.inf, np.inf], [0.0, np.inf]])

    def observed_data(self, value) -> np.ndarray:
        x = np.asarray(value, dtype=np.float64)
        if x.ndim == 0:
            return np.full((1, self.config.n_obs), float(x))
        return super().observed_data(x)

    def posterior_oracle(self, x: np.ndarray) -> PosteriorOracle:
        return gaussian_posterior_oracle(self.config, x)


class GaussianMeanConfig(BaseModel):
    """mu ~ N(mu0, tau0^2), x_i ~ N(mu, sigma^2) with sigma known"""
    model_config = ConfigDict(extra="forbid")

    mu0: float = 0.0
    tau0: float = Field(default=1.0, gt=0.0)
    sigma: float = Field(default=1.0, gt=0.0)
    n_obs: int = Field(default=4, ge=1)


@dataclass(frozen=True)
class NormalPosterior:
    """mu | x ~ N(mean, sd^2)."""
    mean: float
    sd: float

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.sd, size=(count, 1))

    def mu_marginal(self):
        return stats.norm(loc=self.mean, scale=self.sd)


def gaussian_mean_posterior(cfg: GaussianMeanConfig, observed: Union[np.ndarray, list]) -> NormalPosterior:
    x = np.ravel(np.asarray(observed, dtype=np.float64))
    if x.size < 1:
        raise ValueError("posterior oracle needs at least one observation")
    precision = 1.0 / cfg.tau0 ** 2 + x.size / cfg.sigma ** 2
    mean = (cfg.mu0 / cfg.tau0 ** 2 + x.sum() / cfg.sigma ** 2) / precision
    return NormalPosterior(mean=float(mean), sd=float(np.sqrt(1.0 / precision)))


class GaussianMeanSimulator(Simulator):
    """theta = mu alone (d = 1), data (1, n_obs); scalar observations are replicated like the conjugate model."""

    name = "gaussian_mean"
    param_dim = 1
    data_dim = 1
    has_oracle = True

    def __init__(self, config: GaussianMeanConfig):
        self.config = config

    @property
    def n_obs(self) -> int:
        return self.config.n_obs

    def sample_prior(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.config.mu0, self.config.tau0, size=(count, 1))

    def simulate_data(self, theta: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mu = np.atleast_2d(theta)[:, 0]
        noise = rng.standard_normal((mu.shape[0], 1, self.config.n_obs))
        return mu[:, None, None] + self.config.sigma * noise

    def observed_data(self, value) -> np.ndarray:
        x = np.asarray(value, dtype=np.float64)
        if x.ndim == 0:
            return np.full((1, self.config.n_obs), float(x))
        return super().observed_data(x)

    def posterior_oracle(self, x: np.ndarray) -> NormalPosterior:
        return gaussian_mean_posterior(self.config, x)
