"""Main CLI application for minicar."""

import logging
from pathlib import Path
from typing import List, Optional

import pandas as pd
import typer
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ..core.config import configure_logging, get_settings
from ..core.exceptions import ExportError, MinicarError, ScenarioConfigError, TrackError
from ..core.models import BehaviorMode, CameraConfig, EventKind, Metrics, ParkPhase
from ..harness import (
    RunCache,
    SweepRunner,
    export_run,
    load_scenario,
    read_trace_csv,
    run_scenario,
    trace_to_dataframe,
    write_sweep_csv,
)
from ..harness.runner import load_scenario_track
from ..harness.scenario import scaled_camera
from ..perception import calibrate_targets, default_scan_rows
from ..track import load_track, track_summary
from ..visualization import TraceChartGenerator

logger = logging.getLogger(__name__)

EXIT_FAILED = 1
EXIT_CONFIG = 2

app = typer.Typer(
    name="minicar",
    help="minicar: closed-loop simulation of a 1/10-scale self-driving car",
)

console = Console()


@app.callback()
def main() -> None:
    """Configure logging from the application settings."""
    configure_logging(get_settings())


@app.command()
def run(
    scenario: Path = typer.Argument(..., help="Scenario TOML file"),
    output_dir: Optional[Path] = typer.Option(
        None, "--output", "-o", help="Output directory (default: <output dir>/<scenario name>)"
    ),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the scenario seed"),
    overrides: List[str] = typer.Option(
        [], "--set", help="Scenario override section.key=value (repeatable)"
    ),
    plots: Optional[bool] = typer.Option(
        None, "--plots/--no-plots", help="Write SVG plots next to the trace"
    ),
    dump_camera: bool = typer.Option(
        False, "--dump-camera", help="Write every camera frame as PGM plus a scan CSV"
    ),
) -> None:
    """Run one scenario and export its trace, transitions, metrics and plots."""
    settings = get_settings()
    if seed is not None:
        overrides = list(overrides) + [f"scenario.seed={seed}"]

    try:
        cfg = load_scenario(scenario, overrides, settings.simulation)
        out = output_dir or Path(settings.output.directory) / cfg.scenario.name
        console.print(
            Panel.fit(
                f"minicar run\n"
                f"Scenario: {cfg.scenario.name} ({cfg.scenario.mode.value})\n"
                f"Seed: {cfg.scenario.seed}\n"
                f"Output: {out}"
            )
        )
        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
        ) as progress:
            task = progress.add_task("Simulating...", total=None)
            trace, metrics = run_scenario(cfg, dump_dir=out / "camera" if dump_camera else None)
            progress.update(task, description=f"Simulated {len(trace)} ticks")

            export_task = progress.add_task("Exporting...", total=None)
            written = export_run(trace, metrics, out)
            if settings.output.plots if plots is None else plots:
                written += TraceChartGenerator().export_trace_plots(
                    trace_to_dataframe(trace), out, settings.output.plot_format
                )
            progress.update(export_task, description=f"Wrote {len(written)} files")
    except (ScenarioConfigError, TrackError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)
    except (MinicarError, ValueError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_FAILED)

    _display_metrics(metrics)
    failure = _scenario_failure(cfg.scenario.mode, metrics)
    if failure:
        console.print(f"[red]Scenario failed: {failure}[/red]")
        raise typer.Exit(EXIT_FAILED)
    console.print(f"\n[green]✓ Run complete! Results saved to {out}[/green]")


@app.command()
def validate(
    track: Path = typer.Argument(..., help="Track description file"),
    scale: Optional[float] = typer.Option(None, "--scale", help="Override the track scale"),
) -> None:
    """Parse a track file and print its diagnostics or a summary."""
    try:
        model = load_track(track, scale=scale)
    except TrackError as e:
        console.print(f"[red]{e.format(str(track))}[/red]")
        raise typer.Exit(EXIT_CONFIG)
    except OSError as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)

    table = Table(title=f"Track {track.name}")
    table.add_column("Property", style="cyan")
    table.add_column("Value", style="magenta")
    for key, value in track_summary(model).items():
        table.add_row(key, f"{value:g}")
    console.print(table)


@app.command()
def plot(
    trace_csv: Path = typer.Argument(..., help="Exported trace.csv"),
    output_dir: Optional[Path] = typer.Option(
        None, "--output", "-o", help="Directory for the plots (default: next to the trace)"
    ),
) -> None:
    """Regenerate the plots of an exported trace."""
    settings = get_settings()
    try:
        frame = read_trace_csv(trace_csv)
        written = TraceChartGenerator().export_trace_plots(
            frame, output_dir or trace_csv.parent, settings.output.plot_format
        )
    except ExportError as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_FAILED)
    for path in written:
        console.print(f"[green]✓[/green] {path}")


@app.command()
def sweep(
    scenario: Path = typer.Argument(..., help="Scenario TOML file"),
    params: List[str] = typer.Option(
        ..., "--param", "-p", help="Swept parameter section.key=v1,v2,... (repeatable)"
    ),
    output_dir: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory"),
    no_cache: bool = typer.Option(False, "--no-cache", help="Ignore and do not fill the run cache"),
) -> None:
    """Run the Cartesian product of parameter values and summarize the runs."""
    settings = get_settings()
    cache = None
    if settings.cache.enabled and not no_cache:
        cache = RunCache(settings.cache)
    try:
        with console.status("Sweeping..."):
            summary = SweepRunner(cache, settings.simulation).run(scenario, params)
        out = output_dir or Path(settings.output.directory) / f"sweep_{scenario.stem}"
        path = write_sweep_csv(summary, out / "sweep.csv")
    except (ScenarioConfigError, TrackError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)
    except (MinicarError, ValueError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_FAILED)
    finally:
        if cache is not None:
            cache.close()

    table = Table(title=f"Sweep of {scenario.name}")
    for column in summary.columns:
        table.add_column(column, style="cyan" if column in _params_keys(params) else "magenta")
    for row in summary.iter_rows():
        table.add_row(*(_cell(v) for v in row))
    console.print(table)
    console.print(f"\n[green]✓ Summary saved to {path}[/green]")


@app.command()
def calibrate(
    scenario: Optional[Path] = typer.Option(
        None, "--scenario", "-s", help="Take camera and lane width from this scenario"
    ),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Write the table as CSV"),
) -> None:
    """Print the calibrated right-distance targets per scan row."""
    camera = CameraConfig()
    rows = default_scan_rows(camera.image_height)
    lane_width = 0.4
    try:
        if scenario is not None:
            cfg = load_scenario(scenario)
            track = load_scenario_track(cfg)
            camera = scaled_camera(cfg.camera, track.scale)
            rows = cfg.perception.rows or default_scan_rows(
                camera.image_height, cfg.perception.row_count
            )
            lane_width = track.lane_width
        targets = calibrate_targets(camera, lane_width, rows=rows)
        if output is not None:
            output.parent.mkdir(parents=True, exist_ok=True)
            pd.DataFrame(
                {"row": list(targets), "right_target": list(targets.values())}
            ).to_csv(output, index=False)
    except (ScenarioConfigError, TrackError) as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_CONFIG)
    except OSError as e:
        console.print(f"[red]Error: {e}[/red]")
        raise typer.Exit(EXIT_FAILED)

    table = Table(title=f"Scan-row targets (lane width {lane_width:g} m)")
    table.add_column("Row", style="cyan")
    table.add_column("Right distance (px)", style="magenta")
    for row in rows:
        target = targets.get(row)
        table.add_row(str(row), f"{target:.1f}" if target is not None else "-")
    console.print(table)
    if output is not None:
        console.print(f"[green]✓ Targets saved to {output}[/green]")


def _params_keys(params: List[str]) -> List[str]:
    return [p.split("=", 1)[0].strip() for p in params]


def _cell(value: object) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _scenario_failure(mode: BehaviorMode, metrics: Metrics) -> Optional[str]:
    """Reason the run counts as failed, or None."""
    if mode == BehaviorMode.LANE:
        return None
    collisions = metrics.penalties.get(EventKind.COLLISION.value, 0)
    if collisions:
        return f"{collisions} collision(s)"
    if mode == BehaviorMode.PARK:
        outcome = metrics.parking.outcome if metrics.parking else None
        if outcome != ParkPhase.DONE.value:
            return f"parking outcome {outcome}"
    return None


def _display_metrics(metrics: Metrics) -> None:
    """Display run metrics in the console."""
    table = Table(title="Run Metrics")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="magenta")

    table.add_row("Duration", f"{metrics.duration:.2f} s")
    table.add_row("Distance driven", f"{metrics.distance_driven:.2f} m")
    table.add_row("Mean |deviation|", f"{metrics.mean_deviation * 100:.2f} cm")
    table.add_row("Max |deviation|", f"{metrics.max_deviation * 100:.2f} cm")
    for kind, count in metrics.penalties.items():
        table.add_row(f"Penalties: {kind}", str(count))
    if metrics.parking is not None:
        p = metrics.parking
        table.add_row("Parking outcome", str(p.outcome))
        table.add_row("Gaps accepted", ", ".join(f"{w:.3f}" for w in p.gap_widths) or "-")
        if p.duration is not None:
            table.add_row("Parking duration", f"{p.duration:.2f} s")
        if p.heading_error_deg is not None:
            table.add_row("Heading error", f"{p.heading_error_deg:.2f}°")
        if p.front_clearance is not None:
            table.add_row("Front clearance", f"{p.front_clearance * 100:.1f} cm")
        if p.rear_clearance is not None:
            table.add_row("Rear clearance", f"{p.rear_clearance * 100:.1f} cm")
    console.print(table)

    if metrics.phase_durations:
        phases = Table(title="Time per Phase")
        phases.add_column("Phase", style="cyan")
        phases.add_column("Seconds", style="magenta")
        for phase, seconds in metrics.phase_durations.items():
            phases.add_row(phase, f"{seconds:.2f}")
        console.print(phases)


if __name__ == "__main__":
    app()
