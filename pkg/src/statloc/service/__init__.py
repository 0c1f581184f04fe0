"""HTTP service exposing the simulator and verification campaigns."""

from statloc.service.app import app, create_app

__all__ = ["app", "create_app"]
