import copy
import json

import numpy as np
import pytest

from analysis import CurvatureProfile
from assembly import genus_template
from compare import ProfileStats
from data_manager import (
    FileOperationError,
    MalformedRowError,
    SchemaError,
    assembly_to_document,
    load_assembly_spec,
    load_design_targets,
    parse_assembly_document,
    parse_design_targets,
    read_duration_csv,
    read_json_file,
    read_profile_csv,
    read_rectification_csv,
    read_trace_csv,
    write_profile_csv,
    write_stats_csv,
    write_trace_csv,
)

TRACE_HEADER = "trial_id,point_index,x,y\n"


@pytest.fixture
def micrurus_document(fixtures_dir):
    with open(fixtures_dir / "micrurus_spec.json", encoding="utf-8") as f:
        return json.load(f)


class TestTraceCsv:

    def test_groups_and_orders_points(self, write_text):
        path = write_text("trace.csv", TRACE_HEADER + "B,1,1.0,0\nA,1,2,2\nA,0,0,0\nB,0,0.5,0\n")
        traces = read_trace_csv(path)
        assert list(traces) == ["A", "B"]
        np.testing.assert_array_equal(traces["A"], [[0.0, 0.0], [2.0, 2.0]])
        np.testing.assert_array_equal(traces["B"], [[0.5, 0.0], [1.0, 0.0]])

    @pytest.mark.parametrize("body, line", [
        ("A,0,0,0\nA,1,abc,0\n", 3),
        ("A,0,0,0\nA,1.5,0,0\n", 3),
        ("A,0,0,0\n,1,0,0\n", 3),
        ("A,0,0,0\nA,1,1,1\nA,1,2,2\n", 4),
        ("A,0,inf,0\n", 2),
        ("A,0,0,0\nA,1,0,0,9\n", 3),
    ])
    def test_malformed_rows_report_line(self, write_text, body, line):
        path = write_text("trace.csv", TRACE_HEADER + body)
        with pytest.raises(MalformedRowError) as excinfo:
            read_trace_csv(path)
        assert excinfo.value.line == line

    def test_missing_column(self, write_text):
        path = write_text("trace.csv", "trial_id,x,y\nA,0,0\n")
        with pytest.raises(MalformedRowError) as excinfo:
            read_trace_csv(path)
        assert excinfo.value.line == 1
        assert "point_index" in str(excinfo.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileOperationError):
            read_trace_csv(str(tmp_path / "absent.csv"))

    def test_write_then_read(self, tmp_path):
        traces = {"t2": np.array([[0.0, 0.0], [0.1, 0.2]]), "t1": np.array([[1.0, 1.0], [2.0, 3.0], [4.0, 5.0]])}
        path = str(tmp_path / "trace.csv")
        write_trace_csv(path, traces)
        with open(path, encoding="utf-8") as f:
            assert f.readline() == TRACE_HEADER
            assert f.readline() == "t1,0,1,1\n"
        restored = read_trace_csv(path)
        for trial_id, points in traces.items():
            np.testing.assert_array_equal(restored[trial_id], points)


def test_rectification_csv(write_text):
    rows = "".join(f"*,{x},{y},{2 * x},{2 * y}\n" for x, y in [(0, 0), (1, 0), (1, 1), (0, 1)])
    path = write_text("rectify.csv", "trial_id,src_x,src_y,dst_x,dst_y\n" + rows)
    pairs = read_rectification_csv(path)
    src, dst = pairs["*"]
    np.testing.assert_array_equal(dst, 2.0 * src)
    assert src.shape == (4, 2)


class TestProfileCsv:

    @pytest.fixture
    def profile(self):
        return CurvatureProfile(np.array([0.0, 0.5, 1.0]), np.array([np.nan, 2.5, np.nan]),
                                np.array([False, True, False]), "t1")

    def test_written_text(self, tmp_path, profile):
        path = tmp_path / "profiles.csv"
        write_profile_csv(str(path), [profile])
        assert path.read_bytes() == b"trial_id,arc_fraction,curvature,valid\nt1,0,,0\nt1,0.5,2.5,1\nt1,1,,0\n"

    def test_nine_significant_digits(self, tmp_path):
        profile = CurvatureProfile(np.array([0.0, 1.0 / 3.0]), np.array([np.pi, 1e-12 / 3.0]),
                                   np.array([True, True]), "t")
        path = tmp_path / "profiles.csv"
        write_profile_csv(str(path), [profile])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[1] == "t,0,3.14159265,1"
        assert lines[2] == "t,0.333333333,3.33333333e-13,1"

    def test_read_back(self, tmp_path, profile):
        path = str(tmp_path / "profiles.csv")
        write_profile_csv(path, [profile])
        restored, = read_profile_csv(path)
        assert restored.trial_id == "t1"
        np.testing.assert_array_equal(restored.valid, profile.valid)
        np.testing.assert_array_equal(restored.curvature, profile.curvature)

    def test_valid_row_needs_curvature(self, write_text):
        path = write_text("profiles.csv", "trial_id,arc_fraction,curvature,valid\nt,0,1.0,1\nt,1,,1\n")
        with pytest.raises(MalformedRowError) as excinfo:
            read_profile_csv(path)
        assert excinfo.value.line == 3

    def test_header_only_gives_no_profiles(self, write_text):
        path = write_text("profiles.csv", "trial_id,arc_fraction,curvature,valid\n")
        assert read_profile_csv(path) == []


def test_stats_csv(tmp_path):
    stats = ProfileStats(np.array([0.0, 1.0]), np.array([np.nan, 2.0]), np.array([np.nan, 0.5]), 4,
                         np.array([False, True]), 0, "snake")
    path = tmp_path / "stats.csv"
    write_stats_csv(str(path), [stats])
    assert path.read_text(encoding="utf-8") == "group,arc_fraction,mean,std,n,valid\nsnake,0,,,4,0\nsnake,1,2,0.5,4,1\n"


class TestDurationCsv:

    def test_fixture(self, fixtures_dir):
        records = read_duration_csv(str(fixtures_dir / "robot_durations.csv"))
        assert [r.trial_id for r in records] == ["robot-01", "robot-02", "robot-03"]
        assert [r.duration_seconds for r in records] == pytest.approx([0.2, 0.25, 0.3])

    def test_zero_frames(self, write_text):
        path = write_text("durations.csv", "trial_id,frame_count,fps\na,12,60\nb,0,60\n")
        with pytest.raises(MalformedRowError) as excinfo:
            read_duration_csv(path)
        assert excinfo.value.line == 3


class TestAssemblyDocument:

    def test_load_fixture(self, fixtures_dir):
        spec = load_assembly_spec(str(fixtures_dir / "micrurus_spec.json"))
        assert spec.genus == "Micrurus"
        assert spec.roles == ("head", "mid", "tail")
        assert spec.segment("head-kink").inflation_fraction == 0.0104
        assert [arc.sign for arc in spec.segment("mid-s-curve").sign_pattern] == [1, -1]

    def test_document_round_trip(self):
        spec = genus_template("Micrurus")
        restored = parse_assembly_document(json.loads(json.dumps(assembly_to_document(spec))))
        assert [s.label for s in restored.segments] == [s.label for s in spec.segments]
        assert [s.inflation_fraction for s in restored.segments] == [s.inflation_fraction for s in spec.segments]
        assert restored.total_length == pytest.approx(spec.total_length, rel=1e-12)

    @pytest.mark.parametrize("edit, path", [
        (lambda d: d["segments"][1]["sign_pattern"][0].update(fraction=-0.5), "segments[1].sign_pattern[0].fraction"),
        (lambda d: d["segments"][0].update({"lambda": 1.5}), "segments[0].lambda"),
        (lambda d: d["segments"][2].pop("L0_m"), "segments[2].L0_m"),
        (lambda d: d["segments"][0]["sign_pattern"][1].update(sign=2), "segments[0].sign_pattern[1].sign"),
        (lambda d: d["segments"][1]["sign_pattern"][0].update(fraction=0.4), "segments[1]"),
        (lambda d: d["segments"][2].update(alpha0_deg=50.0), "segments[2]"),
        (lambda d: d["segments"][2].update(label="head-kink"), "segments"),
        (lambda d: d.update(genus="Boa"), "genus"),
        (lambda d: d.update(segments=[]), "segments"),
    ])
    def test_schema_error_paths(self, micrurus_document, edit, path):
        document = copy.deepcopy(micrurus_document)
        edit(document)
        with pytest.raises(SchemaError) as excinfo:
            parse_assembly_document(document)
        assert excinfo.value.path == path


class TestDesignTargets:

    def test_fixture(self, fixtures_dir):
        targets = load_design_targets(str(fixtures_dir / "design_targets.json"))
        assert targets["head"].curvature == 200.0
        assert targets["mid"].curvature == 0.0
        assert targets["tail"].relaxed_length == 0.12
        assert targets["tail"].label == "tail-coil"

    @pytest.mark.parametrize("document", [
        {"head": -1.0},
        {"neck": 10.0},
        {},
        {"tail": {"curvature_per_m": 10.0, "colour": "red"}},
        [1.0, 2.0],
    ])
    def test_invalid_targets(self, document):
        with pytest.raises(SchemaError):
            parse_design_targets(document)


def test_invalid_json(write_text):
    with pytest.raises(FileOperationError):
        read_json_file(write_text("broken.json", "{not json"))
