"""Maintenance cost model and the farm monthly cost rate."""

from . import schemas as schemas
from . import services as services
