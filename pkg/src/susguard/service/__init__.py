"""Local labeling and monitoring service over a trajectory corpus."""

from .app import create_app

__all__ = ["create_app"]
