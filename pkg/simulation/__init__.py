from .fading import FadingProcess
from .simulator import SimTrace, SimulationSettings, aggregate, replicate, run

__all__ = [
    'FadingProcess',
    'SimulationSettings',
    'SimTrace',
    'run',
    'replicate',
    'aggregate'
]
