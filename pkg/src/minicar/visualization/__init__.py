"""Plotly charts of simulation traces."""

from .charts import TraceChartGenerator

__all__ = ["TraceChartGenerator"]
