"""HTTP service wrapping the retrieval-augmentation engine."""

from .app import create_app

__all__ = ["create_app"]
