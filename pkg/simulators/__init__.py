"""Source distribution, forward models and priors"""

from typing import Any, Dict

from .base import Simulator, TrainingBatch, export_batch_csv
from .brock_hommes import (
    THETA_STAR,
    BrockHommesConfig,
    BrockHommesSimulator,
    DivergenceError,
    run_recursion,
    sample_brock_hommes_prior,
    simulate_brock_hommes,
    strategy_fractions,
)
from .gaussian import (
    GaussianConjugateConfig,
    GaussianConjugateSimulator,
    GaussianMeanConfig,
    GaussianMeanSimulator,
    NormalPosterior,
    PosteriorOracle,
    gaussian_mean_posterior,
    gaussian_posterior_oracle,
    simulate_gaussian_batch,
)
from .source import SourceSample, sample_directions, sample_source


def make_simulator(kind: str, params: Dict[str, Any]) -> Simulator:
    """Simulator for a config block: ``kind`` is 'gaussian', 'gaussian_mean' or 'brock_hommes'."""
    if kind == "gaussian":
        return GaussianConjugateSimulator(GaussianConjugateConfig(**params))
    if kind == "gaussian_mean":
        return GaussianMeanSimulator(GaussianMeanConfig(**params))
    if kind == "brock_hommes":
        return BrockHommesSimulator(BrockHommesConfig(**params))
    raise ValueError(f"unknown simulator '{kind}', expected 'gaussian', 'gaussian_mean' or 'brock_hommes'")


__all__ = [
    'THETA_STAR',
    'BrockHommesConfig',
    'BrockHommesSimulator',
    'DivergenceError',
    'GaussianConjugateConfig',
    'GaussianConjugateSimulator',
    'GaussianMeanConfig',
    'GaussianMeanSimulator',
    'NormalPosterior',
    'PosteriorOracle',
    'Simulator',
    'SourceSample',
    'TrainingBatch',
    'export_batch_csv',
    'gaussian_mean_posterior',
    'gaussian_posterior_oracle',
    'make_simulator',
    'run_recursion',
    'sample_brock_hommes_prior',
    'sample_directions',
    'sample_source',
    'simulate_brock_hommes',
    'simulate_gaussian_batch',
    'strategy_fractions',
]
