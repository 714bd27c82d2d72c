"""Figure rendering for structscan experiment reports."""

from .figures import FigureSpec, PANEL_KINDS, SchemaError, render

__version__ = "0.1.0"
