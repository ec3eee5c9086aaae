from .mcs import SpectralEfficiency
from .scenario import LinkStats, LinkTable, Scenario, build_link_stats, reference_lineup, uniform_scenario
from .sinr_dist import ExponentialSinrDist, SinrDist

__all__ = [
    'SpectralEfficiency',
    'LinkStats',
    'LinkTable',
    'Scenario',
    'build_link_stats',
    'reference_lineup',
    'uniform_scenario',
    'SinrDist',
    'ExponentialSinrDist'
]
