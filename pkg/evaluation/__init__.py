"""Metrics and diagnostics for comparing posterior samplers"""

from .diagnostics import CoverageResult, ViolationReport, convexity_violation_rate, coverage, monotonicity_violation_rate
from .metrics import (
    MetricReport,
    MmdTest,
    dtm,
    hull_area,
    median_bandwidth,
    mmd,
    mmd_permutation_null,
    mmd_test,
    rbf_kernel,
    w2_1d,
    w2_marginals,
)

__all__ = [
    'CoverageResult',
    'MetricReport',
    'MmdTest',
    'ViolationReport',
    'convexity_violation_rate',
    'coverage',
    'dtm',
    'hull_area',
    'median_bandwidth',
    'mmd',
    'mmd_permutation_null',
    'mmd_test',
    'monotonicity_violation_rate',
    'rbf_kernel',
    'w2_1d',
    'w2_marginals',
]
