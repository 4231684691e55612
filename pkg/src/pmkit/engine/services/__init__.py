"""Engine services package."""

from . import sampling as sampling
from . import scheduler as scheduler
from . import simulation as simulation
