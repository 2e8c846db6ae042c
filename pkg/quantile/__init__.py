"""Posterior sampling, credible sets, vector ranks and depth from a trained potential"""

from .geometry import Hull, convex_hull_2d, point_in_polygon, points_in_hull, polygon_area
from .ranks import RankResult, mk_depth_order, vector_rank
from .sampling import CredibleSet, PosteriorSampleSet, credible_sets, sample_credible_set, sample_posterior

__all__ = [
    'CredibleSet',
    'Hull',
    'PosteriorSampleSet',
    'RankResult',
    'convex_hull_2d',
    'credible_sets',
    'mk_depth_order',
    'point_in_polygon',
    'points_in_hull',
    'polygon_area',
    'sample_credible_set',
    'sample_posterior',
    'vector_rank',
]
