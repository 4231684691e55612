"""Weibull life-length law."""

from . import schemas as schemas
from . import services as services
