"""Batch CLI: boundary + OSM source in, walkable GeoJSON + capacity report out.

Exit codes: 0 success, 2 usage error, 3 data-source failure,
4 geometry failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine, geometry, osm, overpass
from .capacity import CapacityParams, CapacityParamError, assess
from .classify import ComputeOptions

EXIT_DATA_SOURCE = 3
EXIT_GEOMETRY = 4


def _parse_cf(ctx, param, values):
    factors = []
    for item in values:
        label, sep, raw = item.partition("=")
        if not sep or not label:
            raise click.BadParameter(
                f"expected label=fraction, got {item!r}", ctx=ctx, param=param)
        try:
            value = float(raw)
        except ValueError:
            raise click.BadParameter(
                f"corrective factor {label!r} has non-numeric value {raw!r}",
                ctx=ctx, param=param)
        if not 0.0 <= value <= 1.0:
            raise click.BadParameter(
                f"corrective factor {label!r} must be a fraction in [0, 1], "
                f"got {value}", ctx=ctx, param=param)
        factors.append((label, value))
    return tuple(factors)


def _progress_bar(fraction: float, phase: str) -> None:
    width = 30
    filled = int(round(width * fraction))
    bar = "#" * filled + "-" * (width - filled)
    sys.stderr.write(f"\r[{bar}] {100 * fraction:5.1f}% {phase:<9}")
    if fraction >= 1.0:
        sys.stderr.write("\n")
    sys.stderr.flush()


@click.command(context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--boundary", "boundary_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="GeoJSON file with the area to analyse (Polygon, "
                   "MultiPolygon, Feature, or FeatureCollection).")
@click.option("--overpass-endpoint", default=None,
              help="Overpass interpreter URL to fetch OSM data from "
                   "(mutually exclusive with --osm-file).")
@click.option("--osm-file", type=click.Path(exists=True, dir_okay=False),
              help="Local OSM extract (Overpass JSON or OSM XML) instead of "
                   "a network fetch.")
@click.option("--roads-walkable", is_flag=True,
              help="Treat roads as walkable, for events that close streets "
                   "to traffic.")
@click.option("--grass-not-walkable", is_flag=True,
              help="Subtract grass polygons, for vegetation that must not "
                   "be stepped on.")
@click.option("--keep-building-inner", is_flag=True,
              help="Keep building courtyard holes walkable (by default inner "
                   "areas are removed as not publicly accessible).")
@click.option("--area-per-pedestrian", default=2.0, show_default=True,
              help="Square meters of space each pedestrian occupies; 2 m2 "
                   "gives a comfortable sightseeing density.")
@click.option("--rotation-factor", default=2.5, show_default=True,
              help="Visits per day: usable daily hours divided by mean "
                   "visit duration (10h/4h = 2.5).")
@click.option("--cf", "corrective_factors", multiple=True, callback=_parse_cf,
              metavar="LABEL=FRACTION",
              help="Corrective factor as label=fraction in [0,1]; repeatable. "
                   "Defaults to temperature=0.7945 precipitation=0.8219 when "
                   "none are given.")
@click.option("--management-capacity", default=0.7775, show_default=True,
              help="Fraction in [0,1] expressing adequacy of infrastructure, "
                   "staff, and policy for the visitor activity.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False),
              help="Write the pedestrian spaces FeatureCollection here.")
@click.option("--report", "report_path", type=click.Path(dir_okay=False),
              help="Write the capacity report JSON here.")
@click.option("--threads", default=None, type=int,
              help="Worker threads for the union phase; the result is "
                   "identical for any value.")
@click.option("--progress", "show_progress", is_flag=True,
              help="Render a progress bar on stderr.")
def main(boundary_path, overpass_endpoint, osm_file, roads_walkable,
         grass_not_walkable, keep_building_inner, area_per_pedestrian,
         rotation_factor, corrective_factors, management_capacity, out_path,
         report_path, threads, show_progress):
    """Compute the pedestrian-walkable area inside a boundary and its
    physical (PCC), real (RCC), and effective (ECC) carrying capacities."""
    if osm_file is None and overpass_endpoint is None:
        raise click.UsageError("one of --osm-file or --overpass-endpoint is required")
    if osm_file is not None and overpass_endpoint is not None:
        raise click.UsageError("--osm-file and --overpass-endpoint are mutually exclusive")

    try:
        boundary = geometry.geometry_from_geojson(
            json.loads(Path(boundary_path).read_text()))
    except (json.JSONDecodeError, geometry.GeometryError) as exc:
        click.echo(f"error: boundary file is not usable GeoJSON: {exc}", err=True)
        sys.exit(EXIT_GEOMETRY)

    sink = _progress_bar if show_progress else None
    tracker = engine.PipelineProgress(sink)
    try:
        tracker.report("fetch", 0.0)
        if osm_file is not None:
            data = Path(osm_file).read_bytes()
        else:
            query = overpass.build_query(boundary)
            data = overpass.OverpassClient(endpoint=overpass_endpoint).fetch(query)
        tracker.report("fetch", 1.0)
        elements = osm.parse_osm_bytes(data)
    except (OSError, overpass.OverpassError, osm.OsmParseError) as exc:
        click.echo(f"error: could not load OSM data: {exc}", err=True)
        sys.exit(EXIT_DATA_SOURCE)

    options = ComputeOptions(
        remove_building_inner_areas=not keep_building_inner,
        roads_walkable=roads_walkable,
        grass_not_walkable=grass_not_walkable,
    )
    try:
        assembled = osm.assemble(elements)
        result = engine.compute_walkable(
            boundary, assembled.features, options, sink,
            max_workers=threads,
            extra_diagnostics={"assembly_skipped": assembled.skipped})
    except geometry.GeometryError as exc:
        click.echo(f"error: geometry failure: {exc}", err=True)
        sys.exit(EXIT_GEOMETRY)

    try:
        params = CapacityParams(
            area_per_pedestrian_m2=area_per_pedestrian,
            rotation_factor=rotation_factor,
            corrective_factors=corrective_factors or
            CapacityParams().corrective_factors,
            management_capacity=management_capacity,
        )
    except CapacityParamError as exc:
        raise click.UsageError(str(exc))
    report = assess(result, params)

    if out_path:
        Path(out_path).write_bytes(
            json.dumps(result.to_geojson(), sort_keys=True, indent=2).encode()
            + b"\n")
    if report_path:
        Path(report_path).write_bytes(
            json.dumps(report.to_dict(), sort_keys=True, indent=2).encode()
            + b"\n")

    click.echo(f"total area:     {result.total_area_m2:12.1f} m2")
    click.echo(f"walkable area:  {result.walkable_area_m2:12.1f} m2 "
               f"({result.walkable_percent:.1f}%)")
    click.echo(f"PCC: {report.pcc:.2f}  RCC: {report.rcc:.2f}  "
               f"ECC: {report.ecc:.2f} visitors/day")
