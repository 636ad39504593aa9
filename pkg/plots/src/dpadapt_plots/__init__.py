"""Chart rendering for the domain-adaptation experiment aggregate CSVs."""

from .render import PlotSpec, RenderError, load_aggregate, render

__all__ = ["PlotSpec", "RenderError", "load_aggregate", "render"]

__version__ = "0.1.0"
