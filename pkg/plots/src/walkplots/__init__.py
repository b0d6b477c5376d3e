from .figures import FigureSpec, SchemaError, SeriesSpec, render

__all__ = ["FigureSpec", "SchemaError", "SeriesSpec", "render"]
