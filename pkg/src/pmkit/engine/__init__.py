"""Rolling scheduler, replay and Monte Carlo simulation."""

from . import schemas as schemas
from . import services as services
