"""CLI tests: exit codes, outputs, defaults, byte stability."""

import json

import pytest
from click.testing import CliRunner

from walkcap import cli, geometry
from walkcap.capacity import CapacityParams, assess
from walkcap.cli import main
from walkcap.overpass import OverpassError

from conftest import meters_frame, option_scene_xml, rect_m


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def workdir(tmp_path):
    frame = meters_frame()
    boundary = tmp_path / "boundary.geojson"
    boundary.write_text(json.dumps(
        geometry.geometry_to_geojson(rect_m(frame, 0, 0, 100, 100))))
    osm_file = tmp_path / "scene.osm.xml"
    osm_file.write_bytes(option_scene_xml(frame))
    return tmp_path, boundary, osm_file


class TestRuns:
    def test_fixture_run_report_matches_oracle(self, runner, workdir):
        tmp_path, boundary, osm_file = workdir
        out = tmp_path / "walkable.geojson"
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--out", str(out), "--report", str(report)])
        assert result.exit_code == 0, result.output
        doc = json.loads(report.read_text())
        walkable = doc["inputs"]["walkable_area_m2"]
        assert walkable == pytest.approx(9000, rel=1e-3)
        expected = assess(walkable, CapacityParams())
        assert doc["ecc"] == pytest.approx(expected.ecc, rel=1e-9)
        assert doc["pcc"] == pytest.approx(expected.pcc, rel=1e-9)
        spaces = json.loads(out.read_text())
        assert spaces["type"] == "FeatureCollection"
        assert spaces["summary"]["walkable_percent"] == pytest.approx(90.0, rel=1e-3)

    def test_option_flags_change_result(self, runner, workdir):
        tmp_path, boundary, osm_file = workdir
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--roads-walkable", "--grass-not-walkable", "--keep-building-inner",
            "--report", str(report)])
        assert result.exit_code == 0, result.output
        walkable = json.loads(report.read_text())["inputs"]["walkable_area_m2"]
        # 10000 - building(400-100 courtyard kept) - grass 900, road restored
        assert walkable == pytest.approx(8800, rel=1e-3)

    def test_custom_parameters_flow_to_report(self, runner, workdir):
        tmp_path, boundary, osm_file = workdir
        report = tmp_path / "report.json"
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--area-per-pedestrian", "4", "--rotation-factor", "2",
            "--cf", "heat=0.5", "--management-capacity", "0.5",
            "--report", str(report)])
        assert result.exit_code == 0, result.output
        doc = json.loads(report.read_text())
        assert doc["inputs"]["corrective_factors"] == [
            {"label": "heat", "value": 0.5}]
        walkable = doc["inputs"]["walkable_area_m2"]
        assert doc["ecc"] == pytest.approx(walkable / 4 * 2 * 0.5 * 0.5, rel=1e-9)

    def test_progress_flag_renders_bar(self, runner, workdir):
        tmp_path, boundary, osm_file = workdir
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--progress"])
        assert result.exit_code == 0
        assert "100.0%" in result.output


class TestExitCodes:
    def test_missing_boundary_usage_error(self, runner):
        result = runner.invoke(main, [])
        assert result.exit_code == 2
        assert "--boundary" in result.output

    def test_missing_source_usage_error(self, runner, workdir):
        _, boundary, _ = workdir
        result = runner.invoke(main, ["--boundary", str(boundary)])
        assert result.exit_code == 2
        assert "osm-file" in result.output or "overpass" in result.output

    def test_invalid_cf_fraction_usage_error(self, runner, workdir):
        _, boundary, osm_file = workdir
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--cf", "humidity=1.2"])
        assert result.exit_code == 2
        assert "humidity" in result.output
        assert "1.2" in result.output

    def test_malformed_cf_usage_error(self, runner, workdir):
        _, boundary, osm_file = workdir
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(osm_file),
            "--cf", "nolabel"])
        assert result.exit_code == 2

    def test_data_source_failure_exit_3(self, runner, workdir, monkeypatch):
        _, boundary, _ = workdir

        class FailingClient:
            def __init__(self, *args, **kwargs):
                pass

            def fetch(self, query):
                raise OverpassError("endpoint unreachable")

        monkeypatch.setattr(cli.overpass, "OverpassClient", FailingClient)
        result = runner.invoke(main, [
            "--boundary", str(boundary),
            "--overpass-endpoint", "http://overpass.invalid"])
        assert result.exit_code == 3

    def test_geometry_failure_exit_4(self, runner, workdir, tmp_path):
        _, _, osm_file = workdir
        bad = tmp_path / "bad.geojson"
        bad.write_text('{"type": "Point", "coordinates": [0, 0]}')
        result = runner.invoke(main, [
            "--boundary", str(bad), "--osm-file", str(osm_file)])
        assert result.exit_code == 4

    def test_unparseable_osm_exit_3(self, runner, workdir, tmp_path):
        _, boundary, _ = workdir
        bad = tmp_path / "broken.xml"
        bad.write_bytes(b"<osm><node id=")
        result = runner.invoke(main, [
            "--boundary", str(boundary), "--osm-file", str(bad)])
        assert result.exit_code == 3

    def test_contextual_help(self, runner):
        result = runner.invoke(main, ["--help"])
        assert result.exit_code == 0
        for fragment in ("--area-per-pedestrian", "2 m2", "10h/4h",
                         "--management-capacity", "LABEL=FRACTION"):
            assert fragment in result.output


class TestByteStability:
    def test_threads_do_not_change_outputs(self, runner, workdir):
        tmp_path, boundary, osm_file = workdir
        outputs = {}
        for threads in (1, 4):
            out = tmp_path / f"out{threads}.geojson"
            report = tmp_path / f"report{threads}.json"
            result = runner.invoke(main, [
                "--boundary", str(boundary), "--osm-file", str(osm_file),
                "--threads", str(threads),
                "--out", str(out), "--report", str(report)])
            assert result.exit_code == 0, result.output
            outputs[threads] = (out.read_bytes(), report.read_bytes())
        assert outputs[1] == outputs[4]
