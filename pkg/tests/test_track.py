"""Tests for the track language and geometric queries."""

import math

import numpy as np
import pytest

from src.minicar.core.exceptions import OffTrackError, TrackSemanticError, TrackSyntaxError
from src.minicar.core.models import LaneId, MarkingSide
from src.minicar.track import (
    deviation_from_skeleton,
    exemplary_track_path,
    lane_length,
    lane_marking_segments,
    load_track,
    parse_track,
    project_to_skeleton,
    serialize_track,
    skeleton_pose,
    track_summary,
)

STRIP_DOC = """
lane_width 0.4
start 0 0 0
segment straight 5
parking_strip 0
parkbox 1.0 0.0 0.2 0.4 0.05
parkbox 1.4 0.5 0.2 0.4 0.05
"""


@pytest.fixture(scope="module")
def exemplary():
    return load_track(exemplary_track_path())


def _dense_skeleton(track, step=0.005):
    points = []
    for lane in (LaneId.RIGHT, LaneId.LEFT):
        total = lane_length(track, lane)
        for s in np.arange(0.0, total, step):
            pose = skeleton_pose(track, lane, float(s))
            points.append((pose.x, pose.y))
    return np.array(points)


def _polyline_length(points):
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


class TestExemplaryTrack:
    """Test the bundled course."""

    def test_lane_lengths(self, exemplary):
        assert exemplary.closed
        assert len(exemplary.segments) == 12
        assert lane_length(exemplary, LaneId.RIGHT) == pytest.approx(15.6 + 4.0 * math.pi)
        assert lane_length(exemplary, LaneId.LEFT) == pytest.approx(15.6 + 3.2 * math.pi)

    def test_loop_returns_to_start(self, exemplary):
        end = skeleton_pose(exemplary, LaneId.RIGHT, lane_length(exemplary))
        assert end.x == pytest.approx(0.0, abs=1e-9)
        assert end.y == pytest.approx(0.0, abs=1e-9)
        assert math.cos(end.heading) == pytest.approx(1.0)

    def test_summary(self, exemplary):
        summary = track_summary(exemplary)
        assert summary["segments"] == 12.0
        assert summary["obstacles"] == 0.0
        assert summary["lane_width"] == pytest.approx(0.4)

    def test_scale_override_scales_lengths(self):
        track = load_track(exemplary_track_path(), scale=2.0)
        assert track.lane_width == pytest.approx(0.8)
        assert lane_length(track) == pytest.approx(2.0 * (15.6 + 4.0 * math.pi))

    def test_fixed_lane_width_is_not_scaled(self):
        text = exemplary_track_path().read_text() + "\nlane_width_fixed\n"
        track = parse_track(text, scale=2.0)
        assert track.lane_width == pytest.approx(0.4)
        # left skeleton radius 4.0 - 0.4 on each quarter turn
        assert lane_length(track, LaneId.LEFT) == pytest.approx(31.2 + 7.2 * math.pi)


class TestParser:
    """Test parsing and diagnostics."""

    def test_degree_and_radian_angles_agree(self):
        a = parse_track("segment arc 2 90deg\n")
        b = parse_track(f"segment arc 2 {math.pi / 2!r}\n")
        assert a.segments[0].end.x == pytest.approx(b.segments[0].end.x)
        assert a.segments[0].end.y == pytest.approx(b.segments[0].end.y)

    def test_negative_radius_turns_right(self):
        track = parse_track("segment arc -2 90deg\n")
        end = track.segments[0].end
        assert (end.x, end.y) == pytest.approx((2.0, -2.0))

    def test_unknown_statement(self):
        with pytest.raises(TrackSyntaxError) as info:
            parse_track("  segmnt straight 2\n")
        diag = info.value.diagnostics[0]
        assert (diag.line, diag.column) == (1, 3)
        assert "segment" in diag.expected
        assert "unknown statement 'segmnt'" in diag.message

    def test_invalid_number_position(self):
        with pytest.raises(TrackSyntaxError) as info:
            parse_track("start 0 0 0\nsegment straight abc\n")
        diag = info.value.diagnostics[0]
        assert (diag.line, diag.column) == (2, 18)
        assert "<length>" in diag.message

    def test_all_syntax_errors_reported(self):
        with pytest.raises(TrackSyntaxError) as info:
            parse_track("segment straight 1\nbogus 1\nsegment curve 2\nstart 0 0\n")
        assert [d.line for d in info.value.diagnostics] == [2, 3, 4]

    def test_invalid_utf8(self):
        with pytest.raises(TrackSyntaxError, match="UTF-8"):
            parse_track(b"segment straight \xff\n")

    def test_radius_below_minimum(self):
        with pytest.raises(TrackSemanticError) as info:
            parse_track("segment straight 1\nsegment arc 0.5 90deg\n")
        diag = info.value.diagnostics[0]
        assert (diag.line, diag.column) == (2, 13)
        assert "radius below minimum" in diag.message

    def test_unclosed_loop(self):
        with pytest.raises(TrackSemanticError, match="discontinuous chain"):
            parse_track("closed\nsegment straight 1\n")

    def test_no_segments(self):
        with pytest.raises(TrackSemanticError, match="no segments"):
            parse_track("lane_width 0.4\n")

    def test_semantic_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            parse_track("segment straight -1\n")


class TestParkingStrip:
    """Test parking box placement along the strip."""

    def test_boxes_placed_right_of_marking(self):
        strip = parse_track(STRIP_DOC).parking_strip
        assert strip.spans == [pytest.approx((1.0, 1.4)), pytest.approx((1.9, 2.3))]
        centers = [box.center for box in strip.boxes]
        assert centers[0] == pytest.approx((1.2, -0.35))
        assert centers[1] == pytest.approx((2.1, -0.35))

    def test_overlapping_boxes_rejected(self):
        doc = STRIP_DOC.replace("parkbox 1.4 0.5", "parkbox 1.2 0.0")
        with pytest.raises(TrackSemanticError, match="overlaps"):
            parse_track(doc)

    def test_box_crossing_marking_rejected(self):
        doc = STRIP_DOC.replace("0.4 0.05\nparkbox 1.4", "0.4 -0.05\nparkbox 1.4")
        with pytest.raises(TrackSemanticError, match="off-strip"):
            parse_track(doc)

    def test_box_past_segment_rejected(self):
        with pytest.raises(TrackSemanticError, match="past the anchor"):
            parse_track("segment straight 1\nparkbox 0.8 0.0 0.2 0.4 0.05\n")


class TestSerialize:
    """Test writing tracks back to the language."""

    def test_serialize_reaches_fixed_point(self, exemplary):
        text = serialize_track(exemplary)
        again = serialize_track(parse_track(text))
        assert again == text

    def test_scaled_strip_survives(self):
        track = parse_track(STRIP_DOC, scale=2.0)
        copy = parse_track(serialize_track(track))
        assert copy.scale == 2.0
        assert copy.parking_strip.spans == [
            pytest.approx(span) for span in track.parking_strip.spans
        ]
        assert lane_length(copy) == pytest.approx(lane_length(track))


class TestDeviation:
    """Test signed deviation from the lane skeletons."""

    def test_right_of_right_lane_is_positive(self, exemplary):
        assert deviation_from_skeleton(exemplary, (1.0, -0.1)) == pytest.approx(0.1)

    def test_nearest_lane_is_used(self, exemplary):
        assert deviation_from_skeleton(exemplary, (1.0, 0.3)) == pytest.approx(0.1)
        assert deviation_from_skeleton(exemplary, (1.0, 0.45)) == pytest.approx(-0.05)

    def test_explicit_lane(self, exemplary):
        value = deviation_from_skeleton(exemplary, (1.0, 0.3), lane=LaneId.RIGHT)
        assert value == pytest.approx(-0.3)

    def test_outside_of_left_curve(self, exemplary):
        angle = -math.pi / 4
        p = (4.8 + 2.1 * math.cos(angle), 2.0 + 2.1 * math.sin(angle))
        assert deviation_from_skeleton(exemplary, p) == pytest.approx(0.1)

    def test_projection_arc_length(self, exemplary):
        proj = project_to_skeleton(exemplary, 1.0, -0.05)
        assert proj.lane == LaneId.RIGHT
        assert proj.segment_index == 0
        assert proj.s == pytest.approx(1.0)

    def test_far_point_raises(self, exemplary):
        with pytest.raises(OffTrackError) as info:
            deviation_from_skeleton(exemplary, (1.0, -1.0))
        assert info.value.distance == pytest.approx(1.0)
        assert info.value.limit == pytest.approx(0.8)

    def test_matches_dense_sampling(self, exemplary):
        samples = _dense_skeleton(exemplary)
        rng = np.random.default_rng(3)
        total = lane_length(exemplary)
        for s, lateral in zip(rng.uniform(0.0, total, 40), rng.uniform(-0.3, 0.7, 40)):
            pose = skeleton_pose(exemplary, LaneId.RIGHT, float(s))
            p = (
                pose.x - lateral * math.sin(pose.heading),
                pose.y + lateral * math.cos(pose.heading),
            )
            expected = np.min(np.hypot(samples[:, 0] - p[0], samples[:, 1] - p[1]))
            assert abs(deviation_from_skeleton(exemplary, p)) == pytest.approx(
                expected, abs=3e-3
            )

    def test_skeleton_pose_range(self, exemplary):
        with pytest.raises(ValueError):
            skeleton_pose(exemplary, LaneId.RIGHT, -0.5)


class TestMarkings:
    """Test lane marking generation."""

    def test_intersection_has_no_markings(self, exemplary):
        for line in lane_marking_segments(exemplary):
            pts = line.points
            inside = (pts[:, 0] > 2.0 + 1e-6) & (pts[:, 0] < 2.8 - 1e-6) & (pts[:, 1] < 1.0)
            assert not inside.any()

    def test_solid_lines_split_at_intersections(self, exemplary):
        lines = lane_marking_segments(exemplary)
        assert sum(1 for m in lines if m.side == MarkingSide.LEFT) == 3
        assert sum(1 for m in lines if m.side == MarkingSide.RIGHT) == 3

    def test_dashes_are_short(self, exemplary):
        dashes = [m for m in lane_marking_segments(exemplary) if m.side == MarkingSide.CENTER]
        assert len(dashes) > 30
        assert all(_polyline_length(d.points) <= exemplary.dash_length + 1e-9 for d in dashes)

    def test_right_marking_offset(self):
        track = parse_track("segment straight 2\n")
        right = [m for m in lane_marking_segments(track) if m.side == MarkingSide.RIGHT][0]
        assert np.allclose(right.points[:, 1], -0.2)
        assert right.points[0, 0] == pytest.approx(0.0)
        assert right.points[-1, 0] == pytest.approx(2.0)
