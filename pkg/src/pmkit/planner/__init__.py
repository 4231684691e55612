"""Next-PM optimisation."""

from . import routes as routes
from . import schemas as schemas
from . import services as services
