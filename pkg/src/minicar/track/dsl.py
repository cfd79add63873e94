"""Reader and writer for the line-oriented track description language.

A document is a sequence of statements, one per line; ``#`` starts a comment::

    lane_width 0.4
    scale 1
    start 0 0 0
    closed
    segment straight 2.0
    intersection 0.8
    segment arc 2.0 90deg
    obstacle 3.0 0.0 0.2 0.4 0
    parking_strip 0
    parkbox 0.5 0.0 0.25 0.40 0.05

Segments describe the skeleton line of the right (driving) lane. Lengths are
multiplied by ``scale`` while reading, so downstream code only sees the scaled
world.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from pydantic import ValidationError

from ..core.exceptions import Diagnostic, TrackSemanticError, TrackSyntaxError
from ..core.models import (
    ObstacleBox,
    ParkingStrip,
    Pose,
    Segment,
    SegmentKind,
    TrackModel,
    normalize_angle,
)

logger = logging.getLogger(__name__)

CLOSURE_TOLERANCE = 1e-6

# keyword -> argument names
STATEMENTS: Dict[str, Tuple[str, ...]] = {
    "lane_width": ("width",),
    "lane_width_fixed": (),
    "scale": ("factor",),
    "start": ("x", "y", "heading"),
    "closed": (),
    "dash": ("emit", "skip"),
    "segment": ("kind",),
    "intersection": ("length",),
    "obstacle": ("x", "y", "w", "l", "heading"),
    "parking_strip": ("segment",),
    "parkbox": ("offset_s", "gap_before", "w", "l", "lateral"),
}
SEGMENT_ARGS: Dict[str, Tuple[str, ...]] = {
    "straight": ("length",),
    "arc": ("radius", "sweep"),
}
ANGLE_ARGS = {"heading", "sweep"}


@dataclass
class _Token:
    text: str
    column: int


@dataclass
class _Statement:
    keyword: str
    args: Dict[str, float]
    line: int
    columns: Dict[str, int]
    kind: Optional[str] = None


def _tokenize(line: str) -> List[_Token]:
    body = line.split("#", 1)[0]
    tokens: List[_Token] = []
    col = 0
    for part in body.split():
        col = body.index(part, col)
        tokens.append(_Token(part, col + 1))
        col += len(part)
    return tokens


def _number(token: _Token, angle: bool) -> float:
    text = token.text
    if angle and text.endswith("deg"):
        return math.radians(float(text[:-3]))
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(text)
    return value


class TrackParser:
    """Parses track documents into validated TrackModel instances."""

    def __init__(self, scale: Optional[float] = None):
        """Initialize parser.

        Args:
            scale: Overrides the document's ``scale`` header when given.
        """
        self.logger = logger
        self.scale_override = scale

    def parse(self, text: Union[str, bytes]) -> TrackModel:
        """Parse a document.

        Raises:
            TrackSyntaxError: On malformed statements.
            TrackSemanticError: When the statements describe an invalid track.
        """
        if isinstance(text, bytes):
            try:
                text = text.decode("utf-8")
            except UnicodeDecodeError as e:
                raise TrackSyntaxError(
                    [Diagnostic(1, 1, f"document is not valid UTF-8: {e.reason}")]
                ) from e
        statements = self._read_statements(text)
        return self._build(statements)

    def _read_statements(self, text: str) -> List[_Statement]:
        statements: List[_Statement] = []
        diagnostics: List[Diagnostic] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            tokens = _tokenize(raw)
            if not tokens:
                continue
            head = tokens[0]
            if head.text not in STATEMENTS:
                diagnostics.append(
                    Diagnostic(
                        lineno,
                        head.column,
                        f"unknown statement '{head.text}'",
                        sorted(STATEMENTS),
                    )
                )
                continue

            names = STATEMENTS[head.text]
            rest = tokens[1:]
            kind = None
            if head.text == "segment":
                if not rest or rest[0].text not in SEGMENT_ARGS:
                    col = rest[0].column if rest else len(raw.rstrip()) + 1
                    diagnostics.append(
                        Diagnostic(
                            lineno, col, "expected segment kind", sorted(SEGMENT_ARGS)
                        )
                    )
                    continue
                kind = rest[0].text
                names = SEGMENT_ARGS[kind]
                rest = rest[1:]

            if len(rest) != len(names):
                col = rest[len(names)].column if len(rest) > len(names) else (
                    len(raw.split("#", 1)[0].rstrip()) + 1
                )
                diagnostics.append(
                    Diagnostic(
                        lineno,
                        col,
                        f"'{head.text}' takes {len(names)} argument(s), "
                        f"got {len(rest)}",
                        [f"<{n}>" for n in names] if len(rest) < len(names) else [],
                    )
                )
                continue

            args: Dict[str, float] = {}
            columns: Dict[str, int] = {}
            for name, token in zip(names, rest):
                try:
                    args[name] = _number(token, name in ANGLE_ARGS)
                except ValueError:
                    diagnostics.append(
                        Diagnostic(
                            lineno,
                            token.column,
                            f"invalid number '{token.text}' for <{name}>",
                            ["<number>"] + (["<number>deg"] if name in ANGLE_ARGS else []),
                        )
                    )
                    break
                columns[name] = token.column
            else:
                statements.append(_Statement(head.text, args, lineno, columns, kind))

        if diagnostics:
            raise TrackSyntaxError(diagnostics)
        return statements

    def _build(self, statements: List[_Statement]) -> TrackModel:
        diagnostics: List[Diagnostic] = []

        def header(keyword: str) -> Optional[_Statement]:
            found = [s for s in statements if s.keyword == keyword]
            return found[-1] if found else None

        scale_stmt = header("scale")
        scale = self.scale_override or (scale_stmt.args["factor"] if scale_stmt else 1.0)
        if scale <= 0.0:
            col = scale_stmt.columns["factor"] if scale_stmt else 1
            line = scale_stmt.line if scale_stmt else 1
            raise TrackSemanticError([Diagnostic(line, col, "scale must be > 0")])

        scale_lane_width = header("lane_width_fixed") is None
        lw_stmt = header("lane_width")
        lane_width = lw_stmt.args["width"] if lw_stmt else 0.4
        if lane_width <= 0.0 and lw_stmt is not None:
            diagnostics.append(
                Diagnostic(lw_stmt.line, lw_stmt.columns["width"], "lane_width must be > 0")
            )
        if scale_lane_width:
            lane_width *= scale

        dash_stmt = header("dash")
        dash_length, dash_gap = (0.2, 0.2)
        if dash_stmt:
            dash_length, dash_gap = dash_stmt.args["emit"], dash_stmt.args["skip"]
            if dash_length <= 0.0 or dash_gap <= 0.0:
                diagnostics.append(
                    Diagnostic(
                        dash_stmt.line, dash_stmt.columns["emit"], "dash lengths must be > 0"
                    )
                )

        start_stmt = header("start")
        pose = Pose(x=0.0, y=0.0, heading=0.0)
        if start_stmt:
            pose = Pose(
                x=start_stmt.args["x"] * scale,
                y=start_stmt.args["y"] * scale,
                heading=normalize_angle(start_stmt.args["heading"]),
            )
        first_pose = pose
        min_radius = 1.0 * scale

        segments: List[Segment] = []
        segment_lines: List[int] = []
        for stmt in statements:
            if stmt.keyword == "segment" and stmt.kind == "straight":
                length = stmt.args["length"]
                if length <= 0.0:
                    diagnostics.append(
                        Diagnostic(stmt.line, stmt.columns["length"], "straight length must be > 0")
                    )
                    continue
                seg = Segment(kind=SegmentKind.STRAIGHT, start=pose, length=length * scale)
            elif stmt.keyword == "segment":
                radius, sweep = stmt.args["radius"], stmt.args["sweep"]
                if radius == 0.0 or sweep == 0.0:
                    diagnostics.append(
                        Diagnostic(
                            stmt.line,
                            stmt.columns["radius"],
                            "arc radius and sweep must be non-zero",
                        )
                    )
                    continue
                if abs(radius) * scale < min_radius:
                    diagnostics.append(
                        Diagnostic(
                            stmt.line,
                            stmt.columns["radius"],
                            f"radius below minimum {min_radius:g} m "
                            f"(got {abs(radius) * scale:g} m)",
                        )
                    )
                    continue
                seg = Segment(
                    kind=SegmentKind.ARC,
                    start=pose,
                    radius=radius * scale,
                    sweep=abs(sweep),
                )
            elif stmt.keyword == "intersection":
                length = stmt.args["length"]
                if length <= 0.0:
                    diagnostics.append(
                        Diagnostic(
                            stmt.line, stmt.columns["length"], "intersection length must be > 0"
                        )
                    )
                    continue
                seg = Segment(kind=SegmentKind.INTERSECTION, start=pose, length=length * scale)
            else:
                continue
            segments.append(seg)
            segment_lines.append(stmt.line)
            pose = seg.end

        if not segments:
            diagnostics.append(
                Diagnostic(1, 1, "track declares no segments", ["segment", "intersection"])
            )

        closed = header("closed") is not None
        if closed and segments:
            gap = pose.distance_to(first_pose)
            turn = abs(normalize_angle(pose.heading - first_pose.heading))
            if gap > CLOSURE_TOLERANCE * scale or turn > CLOSURE_TOLERANCE:
                stmt = header("closed")
                diagnostics.append(
                    Diagnostic(
                        stmt.line,  # type: ignore[union-attr]
                        1,
                        f"discontinuous chain: track declared closed but ends "
                        f"{gap:.6g} m / {math.degrees(turn):.4g} deg from its start",
                    )
                )

        obstacles = []
        for stmt in (s for s in statements if s.keyword == "obstacle"):
            w, l = stmt.args["w"], stmt.args["l"]
            if w <= 0.0 or l <= 0.0:
                diagnostics.append(
                    Diagnostic(stmt.line, stmt.columns["w"], "obstacle dimensions must be > 0")
                )
                continue
            obstacles.append(
                ObstacleBox(
                    center=(stmt.args["x"] * scale, stmt.args["y"] * scale),
                    half_extents=(w * scale / 2.0, l * scale / 2.0),
                    heading=stmt.args["heading"],
                )
            )

        strip = None
        if segments:
            strip = self._build_strip(statements, segments, lane_width, scale, diagnostics)

        if diagnostics:
            raise TrackSemanticError(diagnostics)

        try:
            track = TrackModel(
                segments=segments,
                lane_width=lane_width,
                obstacles=obstacles,
                parking_strip=strip,
                scale=scale,
                scale_lane_width=scale_lane_width,
                closed=closed,
                dash_length=dash_length * scale,
                dash_gap=dash_gap * scale,
            )
        except ValidationError as e:
            raise TrackSemanticError(
                [Diagnostic(1, 1, err["msg"]) for err in e.errors()]
            ) from e

        self.logger.debug(
            f"Parsed track: {len(segments)} segments, {track.length:.2f} m, scale {scale:g}"
        )
        return track

    def _build_strip(
        self,
        statements: List[_Statement],
        segments: List[Segment],
        lane_width: float,
        scale: float,
        diagnostics: List[Diagnostic],
    ) -> Optional[ParkingStrip]:
        boxes_stmts = [s for s in statements if s.keyword == "parkbox"]
        if not boxes_stmts:
            return None

        anchor_stmts = [s for s in statements if s.keyword == "parking_strip"]
        if anchor_stmts:
            anchor_stmt = anchor_stmts[-1]
            anchor = int(anchor_stmt.args["segment"])
            if anchor != anchor_stmt.args["segment"] or not 0 <= anchor < len(segments):
                diagnostics.append(
                    Diagnostic(
                        anchor_stmt.line,
                        anchor_stmt.columns["segment"],
                        f"parking strip anchor must be a segment index in [0, {len(segments) - 1}]",
                    )
                )
                return None
        else:
            straights = [i for i, s in enumerate(segments) if s.kind == SegmentKind.STRAIGHT]
            if not straights:
                diagnostics.append(
                    Diagnostic(boxes_stmts[0].line, 1, "parking boxes need a straight segment")
                )
                return None
            anchor = straights[0]
            anchor_stmt = None

        seg = segments[anchor]
        if seg.kind != SegmentKind.STRAIGHT:
            line = anchor_stmt.line if anchor_stmt else boxes_stmts[0].line
            diagnostics.append(Diagnostic(line, 1, "parking strip must lie on a straight segment"))
            return None

        s0 = sum(s.arc_length for s in segments[:anchor])
        boxes: List[ObstacleBox] = []
        spans: List[Tuple[float, float]] = []
        laterals: List[float] = []
        prev_end = 0.0
        for stmt in boxes_stmts:
            a = {k: v * scale for k, v in stmt.args.items()}
            if a["w"] <= 0.0 or a["l"] <= 0.0:
                diagnostics.append(
                    Diagnostic(stmt.line, stmt.columns["w"], "parking box dimensions must be > 0")
                )
                continue
            if a["lateral"] < 0.0:
                diagnostics.append(
                    Diagnostic(
                        stmt.line,
                        stmt.columns["lateral"],
                        "obstacle off-strip: parking box crosses the right lane marking",
                    )
                )
                continue
            if a["gap_before"] < 0.0 or a["offset_s"] < 0.0:
                diagnostics.append(
                    Diagnostic(
                        stmt.line, stmt.columns["gap_before"], "parking box offsets must be >= 0"
                    )
                )
                continue
            start = a["offset_s"] + a["gap_before"]
            end = start + a["l"]
            if start < prev_end - 1e-12:
                diagnostics.append(
                    Diagnostic(
                        stmt.line, stmt.columns["offset_s"], "parking box overlaps the previous box"
                    )
                )
                continue
            if end > seg.arc_length + 1e-12:
                diagnostics.append(
                    Diagnostic(
                        stmt.line,
                        stmt.columns["offset_s"],
                        "obstacle off-strip: parking box extends past the anchor segment",
                    )
                )
                continue
            offset = -(lane_width / 2.0 + a["lateral"] + a["w"] / 2.0)
            center = seg.pose_at((start + end) / 2.0, offset=offset)
            boxes.append(
                ObstacleBox(
                    center=(center.x, center.y),
                    half_extents=(a["w"] / 2.0, a["l"] / 2.0),
                    heading=center.heading,
                )
            )
            spans.append((s0 + start, s0 + end))
            laterals.append(a["lateral"])
            prev_end = end

        return ParkingStrip(
            anchor_segment=anchor, boxes=boxes, spans=spans, lateral_offsets=laterals
        )


def parse_track(text: Union[str, bytes], scale: Optional[float] = None) -> TrackModel:
    """Parse a track document into a TrackModel."""
    return TrackParser(scale=scale).parse(text)


def load_track(path: Union[str, Path], scale: Optional[float] = None) -> TrackModel:
    """Read and parse a ``.track`` file."""
    return parse_track(Path(path).read_bytes(), scale=scale)


def serialize_track(track: TrackModel) -> str:
    """Write a TrackModel back to the track language.

    Values are written unscaled together with the ``scale`` header, so parsing
    the result reproduces the model.
    """
    k = track.scale
    lines = [
        f"scale {track.scale!r}",
        f"lane_width {(track.lane_width / k if track.scale_lane_width else track.lane_width)!r}",
    ]
    if not track.scale_lane_width:
        lines.append("lane_width_fixed")
    lines.append(f"dash {track.dash_length / k!r} {track.dash_gap / k!r}")
    first = track.segments[0].start
    lines.append(f"start {first.x / k!r} {first.y / k!r} {first.heading!r}")
    if track.closed:
        lines.append("closed")

    for seg in track.segments:
        if seg.kind == SegmentKind.ARC:
            lines.append(f"segment arc {seg.radius / k!r} {seg.sweep!r}")  # type: ignore[operator]
        elif seg.kind == SegmentKind.INTERSECTION:
            lines.append(f"intersection {seg.length / k!r}")  # type: ignore[operator]
        else:
            lines.append(f"segment straight {seg.length / k!r}")  # type: ignore[operator]

    for box in track.obstacles:
        w, l = box.half_extents
        lines.append(
            f"obstacle {box.center[0] / k!r} {box.center[1] / k!r} "
            f"{2.0 * w / k!r} {2.0 * l / k!r} {box.heading!r}"
        )

    strip = track.parking_strip
    if strip is not None and strip.boxes:
        lines.append(f"parking_strip {strip.anchor_segment}")
        s0 = sum(s.arc_length for s in track.segments[: strip.anchor_segment])
        for box, (start, end), lateral in zip(strip.boxes, strip.spans, strip.lateral_offsets):
            w, _ = box.half_extents
            lines.append(
                f"parkbox {(start - s0) / k!r} 0.0 "
                f"{2.0 * w / k!r} {(end - start) / k!r} {lateral / k!r}"
            )

    return "\n".join(lines) + "\n"
