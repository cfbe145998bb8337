from .render import PlotSpec, SchemaError, read_csv, render

__all__ = ["PlotSpec", "SchemaError", "read_csv", "render"]
