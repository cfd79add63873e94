"""Tests for scan-line perception and arc fitting."""

import math
import time

import numpy as np
import pandas as pd
import pytest

from src.minicar.core.models import (
    CameraConfig,
    CameraImage,
    PerceptionMode,
    ScanLineResult,
    VehicleState,
)
from src.minicar.perception import (
    PerceptionPipeline,
    calibrate_targets,
    center_points,
    default_scan_rows,
    evaluate_offset,
    fit_arc,
    lateral_error,
    scan_rows,
    write_scan_csv,
)
from src.minicar.sensors import render_camera
from src.minicar.track import parse_track


def _image(width, height, pixels):
    data = np.zeros((height, width), dtype=np.uint8)
    for row, col in pixels:
        data[row, col] = 1
    return CameraImage(width=width, height=height, data=data)


def _circle_points(cx, cy, radius, rows, right_branch=True):
    sign = 1.0 if right_branch else -1.0
    return [(float(r), cx + sign * math.sqrt(radius**2 - (r - cy) ** 2)) for r in rows]


class TestScanRows:
    """Test marching from the image center line."""

    def test_default_rows(self):
        rows = default_scan_rows(480)
        assert len(rows) == 8
        assert rows[0] == 479
        assert rows[-1] == 288

    def test_odd_width_distances(self):
        img = _image(11, 3, [(1, 8), (1, 1)])
        scan = scan_rows(img, [1])[0]
        assert scan.right == 3.0
        assert scan.left == 4.0

    def test_even_width_distances(self):
        img = _image(10, 2, [(0, 7), (0, 9)])
        scan = scan_rows(img, [0])[0]
        assert scan.right == 2.5
        assert scan.left is None

    def test_first_pixel_wins(self):
        img = _image(11, 1, [(0, 7), (0, 9), (0, 0), (0, 3)])
        scan = scan_rows(img, [0])[0]
        assert scan.right == 2.0
        assert scan.left == 2.0

    def test_row_out_of_range(self):
        with pytest.raises(ValueError, match="outside image rows"):
            scan_rows(_image(4, 4, []), [4])


class TestLateralError:
    """Test the lateral error modes."""

    def test_calibrated(self):
        scans = [ScanLineResult(row=1, right=90.0), ScanLineResult(row=2, right=94.0)]
        error = lateral_error(scans, PerceptionMode.CALIBRATED, {1: 100.0, 2: 100.0})
        assert error.valid
        assert error.rows == 2
        assert error.e == pytest.approx(8.0)

    def test_implausible_rows_ignored(self):
        scans = [
            ScanLineResult(row=1, right=90.0),
            ScanLineResult(row=2, right=94.0),
            ScanLineResult(row=3, right=200.0),
        ]
        targets = {1: 100.0, 2: 100.0, 3: 100.0}
        error = lateral_error(scans, PerceptionMode.CALIBRATED, targets)
        assert error.rows == 2
        assert error.e == pytest.approx(8.0)

    def test_too_few_rows_is_invalid(self):
        scans = [ScanLineResult(row=1, right=90.0), ScanLineResult(row=2)]
        error = lateral_error(scans, PerceptionMode.CALIBRATED, {1: 100.0, 2: 100.0})
        assert not error.valid
        assert error.e == 0.0

    def test_balanced(self):
        scans = [
            ScanLineResult(row=1, left=80.0, right=120.0),
            ScanLineResult(row=2, left=90.0, right=110.0),
        ]
        error = lateral_error(scans, PerceptionMode.BALANCED)
        assert error.e == pytest.approx(-15.0)

    def test_arc_mode_reads_lowest_row(self):
        scans = [
            ScanLineResult(row=479, left=100.0, right=120.0),
            ScanLineResult(row=379, left=100.0, right=110.0),
            ScanLineResult(row=279, left=100.0, right=100.0),
        ]
        error = lateral_error(scans, PerceptionMode.ARC)
        assert error.valid
        assert error.e == pytest.approx(-10.0, abs=1e-6)

    def test_calibrated_needs_targets(self):
        with pytest.raises(ValueError, match="targets"):
            lateral_error([ScanLineResult(row=1, right=1.0)], PerceptionMode.CALIBRATED)

    def test_needs_scans(self):
        with pytest.raises(ValueError):
            lateral_error([], PerceptionMode.BALANCED)

    def test_center_points_skip_one_sided_rows(self):
        scans = [ScanLineResult(row=1, left=10.0, right=14.0), ScanLineResult(row=2, left=5.0)]
        assert center_points(scans) == [(1.0, 2.0)]

    def test_mirrored_frame_swaps_sides(self):
        rng = np.random.default_rng(3)
        data = (rng.random((480, 752)) < 0.01).astype(np.uint8)
        rows = default_scan_rows(480)
        image = CameraImage(width=752, height=480, data=data)
        flipped = CameraImage(width=752, height=480, data=np.fliplr(data).copy())
        scans = scan_rows(image, rows)
        mirrored = scan_rows(flipped, rows)
        for a, b in zip(scans, mirrored):
            assert (b.left, b.right) == (a.right, a.left)
        error = lateral_error(scans, PerceptionMode.BALANCED, min_rows=1)
        assert error.valid
        assert lateral_error(mirrored, PerceptionMode.BALANCED, min_rows=1).e == pytest.approx(
            -error.e
        )

    @pytest.mark.parametrize("mode", list(PerceptionMode))
    def test_row_order_does_not_matter(self, mode):
        scans = [
            ScanLineResult(row=479, left=100.0, right=118.0),
            ScanLineResult(row=424, left=98.0, right=109.0),
            ScanLineResult(row=369, left=97.0, right=104.0),
            ScanLineResult(row=314, left=95.0, right=99.0),
        ]
        targets = {479: 110.0, 424: 105.0, 369: 100.0, 314: 95.0}
        reference = lateral_error(scans, mode, targets)
        assert reference.valid
        rng = np.random.default_rng(8)
        for _ in range(10):
            shuffled = [scans[i] for i in rng.permutation(len(scans))]
            error = lateral_error(shuffled, mode, targets)
            assert error.rows == reference.rows
            assert error.e == pytest.approx(reference.e, abs=1e-6)

class TestArcFit:
    """Test the circle fit against exact geometry."""

    def test_left_curve(self):
        rows = range(240, 480, 30)
        fit = fit_arc(_circle_points(-200.0, 400.0, 500.0, rows))
        assert not fit.degenerate
        assert fit.curvature == pytest.approx(1.0 / 500.0, rel=1e-6)
        assert fit.center == pytest.approx((-200.0, 400.0), rel=1e-6)
        assert fit.rms == pytest.approx(0.0, abs=1e-6)
        assert fit.inliers == 8

    def test_right_curve_is_negative(self):
        rows = range(240, 480, 30)
        fit = fit_arc(_circle_points(600.0, 400.0, 700.0, rows, right_branch=False))
        assert fit.curvature == pytest.approx(-1.0 / 700.0, rel=1e-6)

    def test_straight_line(self):
        fit = fit_arc([(float(r), 0.05 * r) for r in range(200, 480, 40)])
        assert not fit.degenerate
        assert fit.curvature == pytest.approx(0.0, abs=1e-9)

    def test_too_few_points(self):
        fit = fit_arc([(1.0, 2.0), (3.0, 4.0)])
        assert fit.degenerate
        assert fit.curvature == 0.0

    def test_evaluate_offset_on_circle(self):
        points = _circle_points(-200.0, 400.0, 500.0, range(240, 480, 30))
        fit = fit_arc(points)
        row, offset = points[-1]
        assert evaluate_offset(fit, points, row) == pytest.approx(offset, abs=1e-6)


class TestCalibration:
    """Test target calibration and the pipeline on rendered frames."""

    @pytest.fixture(scope="class")
    def camera(self):
        return CameraConfig()

    @pytest.fixture(scope="class")
    def targets(self, camera):
        return calibrate_targets(camera, 0.4)

    @pytest.fixture(scope="class")
    def straight(self, camera):
        # same geometry as the calibration road
        return parse_track(f"start -1 0 0\nsegment straight {camera.render_range + 2.0!r}\n")

    def test_targets_cover_rows(self, targets):
        assert set(targets) == set(default_scan_rows(480))
        rows = sorted(targets)
        # the right marking diverges from the center line toward the bottom
        assert all(targets[a] <= targets[b] for a, b in zip(rows, rows[1:]))

    def test_centered_car_has_zero_error(self, camera, targets, straight):
        pipeline = PerceptionPipeline(PerceptionMode.CALIBRATED, sorted(targets), targets)
        error, _ = pipeline.process(render_camera(camera, VehicleState(), straight))
        assert error.valid
        assert error.e == pytest.approx(0.0, abs=1e-9)

    def test_car_left_of_line_is_negative(self, camera, targets, straight):
        pipeline = PerceptionPipeline(PerceptionMode.CALIBRATED, sorted(targets), targets)
        error, _ = pipeline.process(render_camera(camera, VehicleState(y=0.05), straight))
        assert error.valid
        assert error.e < -5.0

    def test_scan_dump(self, camera, targets, straight, tmp_path):
        pipeline = PerceptionPipeline(
            PerceptionMode.CALIBRATED, sorted(targets), targets, record_scans=True
        )
        frame = render_camera(camera, VehicleState(), straight)
        pipeline.process(frame)
        pipeline.process(frame)
        path = write_scan_csv(pipeline.scan_log, tmp_path / "scans.csv")
        dumped = pd.read_csv(path)
        assert list(dumped.columns) == ["frame", "row", "left", "right"]
        assert len(dumped) == 2 * len(targets)
        assert sorted(dumped["frame"].unique()) == [0, 1]

    def test_frame_cost_stays_within_budget(self, camera, targets, straight):
        frame = render_camera(camera, VehicleState(y=0.02), straight)
        rows = sorted(targets)
        lateral_error(scan_rows(frame, rows), PerceptionMode.CALIBRATED, targets)
        count = 200
        start = time.perf_counter()
        for _ in range(count):
            lateral_error(scan_rows(frame, rows), PerceptionMode.CALIBRATED, targets)
        per_frame = (time.perf_counter() - start) / count
        assert per_frame <= 0.005
