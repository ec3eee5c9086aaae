from .pfs_analytic import ScheduledSinr, ScheduledSinrModel, scheduling_probability, total_rate
from .uniform_mcs import AssignmentDist, total_rate_uniform, uniform_rates
from .ref_models import ReferenceModelKind, reference_rates

__all__ = [
    'ScheduledSinr',
    'ScheduledSinrModel',
    'scheduling_probability',
    'total_rate',
    'AssignmentDist',
    'total_rate_uniform',
    'uniform_rates',
    'ReferenceModelKind',
    'reference_rates'
]
