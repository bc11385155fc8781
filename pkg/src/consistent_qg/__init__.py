"""Question-generation pipeline, filtering, and editorial review service."""

__version__ = "0.1.0"
