"""System package."""

from . import routes as routes
