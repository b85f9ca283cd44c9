"""Faceted figure renderer for arena-evolution analysis tables."""

__version__ = "0.1.0"

from .render import FIGURE_KINDS, SchemaError, render

__all__ = ["FIGURE_KINDS", "SchemaError", "render", "__version__"]
