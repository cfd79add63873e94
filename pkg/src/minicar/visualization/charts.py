"""Trace charts using Plotly."""

import logging
from pathlib import Path
from typing import List, Union

import pandas as pd
import plotly.graph_objects as go
import plotly.io as pio
from plotly.subplots import make_subplots

from ..core.exceptions import ExportError
from ..core.models import ParkPhase
from ..sensors.suite import US_FRONT_RIGHT

logger = logging.getLogger(__name__)

IMAGE_FORMATS = {"svg", "png", "pdf"}
READING_PREFIX = "d_"


class TraceChartGenerator:
    """Generates charts from a trace table (see ``trace_to_dataframe``)."""

    def __init__(self) -> None:
        self.logger = logger
        pio.templates.default = "plotly_white"

    def create_deviation_chart(
        self, frame: pd.DataFrame, title: str = "Deviation from Lane Skeleton"
    ) -> go.Figure:
        """Signed skeleton deviation over driven distance."""
        if frame.empty or frame["deviation"].isna().all():
            return self._create_empty_chart("No deviation data available")

        fig = go.Figure()
        fig.add_trace(
            go.Scatter(
                x=frame["odometer"],
                y=frame["deviation"] * 100.0,
                mode="lines",
                name="Deviation",
                line=dict(color="steelblue", width=1.5),
            )
        )
        fig.add_hline(y=0.0, line_dash="dash", line_color="gray")
        fig.update_layout(
            title=title,
            xaxis_title="Distance driven (m)",
            yaxis_title="Deviation, right positive (cm)",
            height=450,
        )
        return fig

    def create_sensor_chart(
        self, frame: pd.DataFrame, title: str = "Distance Sensor Readings"
    ) -> go.Figure:
        """All distance readings over time; sentinel samples are left as gaps."""
        columns = [c for c in frame.columns if c.startswith(READING_PREFIX)]
        if frame.empty or not columns:
            return self._create_empty_chart("No sensor data available")

        fig = go.Figure()
        for column in columns:
            values = frame[column].where(frame[column] > 0.0)
            fig.add_trace(
                go.Scatter(
                    x=frame["t"],
                    y=values,
                    mode="lines",
                    name=column[len(READING_PREFIX) :],
                    connectgaps=False,
                )
            )
        fig.update_layout(
            title=title, xaxis_title="Time (s)", yaxis_title="Distance (m)", height=450
        )
        return fig

    def create_control_chart(
        self, frame: pd.DataFrame, title: str = "Lateral Error and Steering"
    ) -> go.Figure:
        """Perceived lateral error and the steering angle over time."""
        if frame.empty:
            return self._create_empty_chart("No control data available")

        fig = make_subplots(specs=[[{"secondary_y": True}]])
        fig.add_trace(
            go.Scatter(
                x=frame["t"],
                y=frame["e"],
                mode="lines",
                name="Lateral error e",
                line=dict(color="darkorange", width=1),
            ),
            secondary_y=False,
        )
        fig.add_trace(
            go.Scatter(
                x=frame["t"],
                y=frame["delta"],
                mode="lines",
                name="Steering angle",
                line=dict(color="seagreen", width=1.5),
            ),
            secondary_y=True,
        )
        fig.update_xaxes(title_text="Time (s)")
        fig.update_yaxes(title_text="e (px)", secondary_y=False)
        fig.update_yaxes(title_text="δ (rad)", secondary_y=True)
        fig.update_layout(title=title, height=450)
        return fig

    def create_parking_timeline(
        self, frame: pd.DataFrame, title: str = "Parking Gap Search"
    ) -> go.Figure:
        """Front-right ultrasonic distance over the odometer, with phase changes marked."""
        column = READING_PREFIX + US_FRONT_RIGHT
        if frame.empty or column not in frame.columns:
            return self._create_empty_chart("No parking data available")

        fig = go.Figure()
        fig.add_trace(
            go.Scatter(
                x=frame["odometer"],
                y=frame[column],
                mode="lines",
                name="d_U",
                line=dict(color="slateblue", width=1.5, shape="hv"),
            )
        )
        changes = frame[frame["phase"] != frame["phase"].shift()]
        for _, row in changes.iloc[1:].iterrows():
            fig.add_vline(x=row["odometer"], line_dash="dot", line_color="firebrick")
            fig.add_annotation(
                x=row["odometer"],
                y=1.0,
                yref="paper",
                text=str(row["phase"]),
                showarrow=False,
                textangle=-90,
                font=dict(size=10, color="firebrick"),
            )
        gaps = frame.dropna(subset=["gap"])
        if not gaps.empty:
            fig.add_trace(
                go.Scatter(
                    x=gaps["odometer"],
                    y=gaps["gap"],
                    mode="markers",
                    name="Accepted gap width",
                    marker=dict(size=10, color="green", symbol="diamond"),
                )
            )
        fig.add_hline(y=0.0, line_color="gray")
        fig.update_layout(
            title=title,
            xaxis_title="Odometer (m)",
            yaxis_title="Distance (m), -1 = no echo",
            height=450,
        )
        return fig

    def export_chart(
        self, fig: go.Figure, filename: Union[str, Path], format_type: str = "svg"
    ) -> Path:
        """Export chart to file; image formats go through kaleido."""
        path = Path(filename)
        fmt = format_type.lower()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            if fmt == "html":
                fig.write_html(str(path))
            elif fmt in IMAGE_FORMATS:
                fig.write_image(str(path), format=fmt)
            else:
                raise ValueError(f"Unsupported format: {format_type}")
        except (OSError, RuntimeError) as e:
            raise ExportError(str(path), str(e)) from e

        self.logger.info(f"Chart exported to {path}")
        return path

    def export_trace_plots(
        self, frame: pd.DataFrame, directory: Union[str, Path], format_type: str = "svg"
    ) -> List[Path]:
        """Write the standard set of trace charts into ``directory``."""
        directory = Path(directory)
        charts = {
            "deviation": self.create_deviation_chart(frame),
            "sensors": self.create_sensor_chart(frame),
            "control": self.create_control_chart(frame),
        }
        park_phases = {p.value for p in ParkPhase}
        if not frame.empty and frame["phase"].isin(park_phases).any():
            charts["parking"] = self.create_parking_timeline(frame)
        return [
            self.export_chart(fig, directory / f"{name}.{format_type}", format_type)
            for name, fig in charts.items()
        ]

    def _create_empty_chart(self, message: str) -> go.Figure:
        """Create empty chart with message."""
        fig = go.Figure()
        fig.add_annotation(
            text=message,
            xref="paper",
            yref="paper",
            x=0.5,
            y=0.5,
            showarrow=False,
            font=dict(size=16, color="gray"),
        )
        fig.update_layout(xaxis=dict(visible=False), yaxis=dict(visible=False), height=400)
        return fig
