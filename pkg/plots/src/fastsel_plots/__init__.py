"""Figure generation over fastsel experiment artifacts."""

__version__ = "0.1.0"

from .render import FigureSpec, PlotDataError, render

__all__ = ["FigureSpec", "PlotDataError", "render"]
