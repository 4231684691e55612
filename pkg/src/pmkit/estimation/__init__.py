"""Censored Weibull and Cox proportional-hazards estimation."""

from . import schemas as schemas
from . import services as services
