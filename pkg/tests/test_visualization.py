"""Tests for trace charts."""

import plotly.graph_objects as go
import pytest

from src.minicar.core.models import EventKind, ParkPhase, Trace, TraceRecord
from src.minicar.harness import trace_to_dataframe
from src.minicar.visualization import TraceChartGenerator


def _trace(phases):
    trace = Trace(dt=0.025, sensor_ids=["us_front", "us_front_right"])
    for i, phase in enumerate(phases):
        trace.append(
            TraceRecord(
                t=0.025 * i,
                x=0.0125 * i,
                y=0.0,
                psi=0.0,
                v=0.5,
                delta=0.01 * (i % 3),
                odometer=0.0125 * i,
                readings={"us_front": -1.0, "us_front_right": 0.2 if i % 4 else -1.0},
                e=float(i % 5),
                e_valid=True,
                deviation=0.001 * i,
                gap=0.9 if i == 6 else None,
                phase=phase,
                events=[EventKind.GAP_FOUND] if i == 6 else [],
            )
        )
    return trace


@pytest.fixture
def lane_frame():
    return trace_to_dataframe(_trace(["lane"] * 10))


@pytest.fixture
def park_frame():
    phases = (
        [ParkPhase.TRIGGER_MEASUREMENTS.value] * 2
        + [ParkPhase.FIND_BEGINNING_OF_GAP.value] * 2
        + [ParkPhase.FIND_END_OF_GAP.value] * 2
        + [ParkPhase.ADVANCE_TO_START.value] * 4
    )
    return trace_to_dataframe(_trace(phases))


class TestTraceChartGenerator:
    """Test chart creation and export."""

    def test_deviation_chart(self, lane_frame):
        fig = TraceChartGenerator().create_deviation_chart(lane_frame)
        assert isinstance(fig, go.Figure)
        assert len(fig.data) == 1
        assert fig.data[0].y[-1] == pytest.approx(0.9)

    def test_sensor_chart_hides_sentinels(self, lane_frame):
        fig = TraceChartGenerator().create_sensor_chart(lane_frame)
        assert [trace.name for trace in fig.data] == ["us_front", "us_front_right"]
        front_right = list(fig.data[1].y)
        assert front_right[1] == pytest.approx(0.2)
        assert front_right[0] != front_right[0]  # NaN gap

    def test_control_chart_has_two_axes(self, lane_frame):
        fig = TraceChartGenerator().create_control_chart(lane_frame)
        assert len(fig.data) == 2
        assert fig.data[1].yaxis == "y2"

    def test_parking_timeline_marks_phases(self, park_frame):
        fig = TraceChartGenerator().create_parking_timeline(park_frame)
        names = [trace.name for trace in fig.data]
        assert names == ["d_U", "Accepted gap width"]
        assert len(fig.layout.annotations) == 3

    def test_empty_frame(self, lane_frame):
        fig = TraceChartGenerator().create_deviation_chart(lane_frame.iloc[0:0])
        assert len(fig.data) == 0
        assert fig.layout.annotations[0].text == "No deviation data available"

    def test_export_html(self, lane_frame, tmp_path):
        generator = TraceChartGenerator()
        fig = generator.create_deviation_chart(lane_frame)
        path = generator.export_chart(fig, tmp_path / "plots" / "dev.html", "html")
        assert path.exists()
        assert "plotly" in path.read_text(encoding="utf-8").lower()

    def test_export_image_uses_kaleido(self, lane_frame, tmp_path, mocker):
        generator = TraceChartGenerator()
        fig = generator.create_deviation_chart(lane_frame)
        write_image = mocker.patch.object(go.Figure, "write_image")
        generator.export_chart(fig, tmp_path / "dev.svg", "svg")
        write_image.assert_called_once_with(str(tmp_path / "dev.svg"), format="svg")

    def test_unsupported_format(self, lane_frame, tmp_path):
        generator = TraceChartGenerator()
        fig = generator.create_deviation_chart(lane_frame)
        with pytest.raises(ValueError, match="Unsupported"):
            generator.export_chart(fig, tmp_path / "dev.bmp", "bmp")

    def test_trace_plots_include_parking_for_park_runs(self, lane_frame, park_frame, tmp_path):
        generator = TraceChartGenerator()
        lane = generator.export_trace_plots(lane_frame, tmp_path / "lane", "html")
        park = generator.export_trace_plots(park_frame, tmp_path / "park", "html")
        assert [p.stem for p in lane] == ["deviation", "sensors", "control"]
        assert [p.stem for p in park] == ["deviation", "sensors", "control", "parking"]
