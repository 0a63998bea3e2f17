"""Sequential compressive MUSIC for joint sparse recovery."""

__version__ = "0.1.0"
