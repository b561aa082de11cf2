import math

import numpy as np
import pytest

from analysis import (
    BatchReport,
    CenterlineError,
    DegenerateHomographyError,
    DuplicateVertexError,
    Homography,
    PipelineParams,
    ProjectionError,
    analyze_centerline,
    analyze_trials,
    apply_homography,
    curvature_profile,
    estimate_homography,
    resample_uniform,
    smooth_moving_average,
    smoothing_window,
)
from assembly import AssemblySpec, Centerline, SegmentSpec, coil_pattern, inflation_for_sweep, render_centerline

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def random_projective(rng) -> np.ndarray:
    matrix = np.eye(3) + rng.normal(0.0, 0.1, (3, 3))
    matrix[2, :2] = rng.normal(0.0, 0.05, 2)
    matrix[2, 2] = 1.0
    return matrix


class TestHomography:

    def test_four_point_recovery(self, rng):
        for _ in range(1000):
            truth = Homography(random_projective(rng))
            src = UNIT_SQUARE + rng.uniform(-0.2, 0.2, (4, 2))
            dst = truth.apply_points(src)
            h = estimate_homography(src, dst)
            np.testing.assert_allclose(h.apply_points(src), dst, atol=1e-10)
            np.testing.assert_allclose(h.matrix @ h.inverse().matrix, np.eye(3), atol=1e-9)

    def test_overdetermined_exact_correspondences(self, rng):
        truth = Homography(random_projective(rng))
        src = rng.uniform(0.0, 1.0, (12, 2))
        h = estimate_homography(src, truth.apply_points(src))
        np.testing.assert_allclose(h.matrix, truth.matrix, atol=1e-9)

    def test_unit_square_gives_identity(self):
        h = estimate_homography(UNIT_SQUARE, UNIT_SQUARE)
        np.testing.assert_allclose(h.matrix, Homography.identity().matrix, atol=1e-12)

    def test_doubled_square_gives_uniform_scale(self):
        h = estimate_homography(UNIT_SQUARE, 2.0 * UNIT_SQUARE)
        np.testing.assert_allclose(h.matrix, np.diag([2.0, 2.0, 1.0]), atol=1e-12)

    def test_inverse_restores_centerline(self, rng, circle_arc):
        line = Centerline(circle_arc(0.1, 2.0, 300))
        for _ in range(20):
            h = Homography(random_projective(rng))
            restored = apply_homography(h.inverse(), apply_homography(h, line))
            np.testing.assert_allclose(restored.points, line.points, atol=1e-9)

    def test_too_few_points(self):
        with pytest.raises(DegenerateHomographyError):
            estimate_homography(UNIT_SQUARE[:3], UNIT_SQUARE[:3])

    def test_collinear_quad(self):
        src = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
        with pytest.raises(DegenerateHomographyError):
            estimate_homography(src, UNIT_SQUARE)

    def test_singular_matrix(self):
        with pytest.raises(DegenerateHomographyError):
            Homography(np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))

    def test_point_on_vanishing_line(self):
        h = Homography(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 1.0]]))
        with pytest.raises(ProjectionError) as excinfo:
            h.apply_points(np.array([[0.0, 0.0], [-1.0, 0.0]]))
        assert excinfo.value.index == 1

    def test_apply_to_centerline_keeps_order(self):
        line = Centerline(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]), unit="px")
        scaled = apply_homography(Homography(np.diag([2.0, 2.0, 1.0])), line, unit="m")
        assert scaled.unit == "m"
        np.testing.assert_allclose(scaled.points, 2.0 * line.points)


class TestResampleAndSmooth:

    def test_uniform_spacing_keeps_endpoints(self):
        line = Centerline(np.array([[0.0, 0.0], [0.1, 0.0], [1.0, 0.0], [3.0, 0.0]]))
        resampled = resample_uniform(line, 7)
        np.testing.assert_allclose(resampled.points[:, 0], np.linspace(0.0, 3.0, 7))
        np.testing.assert_array_equal(resampled.points[0], line.points[0])
        np.testing.assert_array_equal(resampled.points[-1], line.points[-1])

    def test_resample_needs_two_points(self):
        with pytest.raises(CenterlineError):
            resample_uniform(Centerline(UNIT_SQUARE), 1)

    @pytest.mark.parametrize("span, window", [(30, 31), (31, 31), (1, 1), (2, 3)])
    def test_smoothing_window(self, span, window):
        assert smoothing_window(span) == window

    def test_zero_span_is_rejected(self):
        with pytest.raises(CenterlineError):
            smoothing_window(0)

    def test_smoothing_keeps_straight_lines_and_endpoints(self, rng):
        x = np.sort(rng.uniform(0.0, 1.0, 200))
        line = Centerline(np.column_stack([x, 2.0 * x + 1.0]))
        smoothed = smooth_moving_average(line, 30)
        np.testing.assert_allclose(smoothed.points[:, 1], 2.0 * smoothed.points[:, 0] + 1.0, atol=1e-12)
        np.testing.assert_array_equal(smoothed.points[[0, -1]], line.points[[0, -1]])

    def test_smoothing_window_shrinks_at_ends(self):
        points = np.column_stack([np.arange(10.0), np.zeros(10)])
        points[1, 1] = 3.0
        smoothed = smooth_moving_average(Centerline(points), 30)
        # index 1 averages indices 0..2 only
        assert smoothed.points[1, 1] == pytest.approx(1.0)

    def test_smoothing_needs_three_points(self):
        with pytest.raises(CenterlineError):
            smooth_moving_average(Centerline(UNIT_SQUARE[:2]), 30)


class TestCurvatureProfile:

    def test_circle_is_exact(self, circle_arc):
        radius = 0.05
        line = Centerline(circle_arc(radius, 1.5 * math.pi, 500))
        profile = curvature_profile(line, offset=10)
        expected = line.length / radius
        np.testing.assert_allclose(profile.curvature[profile.valid], expected, rtol=1e-6)

    def test_straight_line_is_zero(self):
        line = Centerline(np.column_stack([np.linspace(0.0, 1.0, 100), np.zeros(100)]))
        profile = curvature_profile(line, offset=10)
        assert profile.valid.sum() == 80
        assert profile.missing_count == 20
        np.testing.assert_array_equal(profile.curvature[profile.valid], 0.0)
        assert np.isnan(profile.curvature[~profile.valid]).all()

    def test_mask_covers_offset_points_at_each_end(self, circle_arc):
        profile = curvature_profile(Centerline(circle_arc(1.0, 1.0, 50)), offset=10)
        assert not profile.valid[:10].any()
        assert not profile.valid[40:].any()
        assert profile.valid[10:40].all()

    def test_reversal_reverses_profile(self, circle_arc):
        points = circle_arc(0.1, 2.0, 300)
        points[:, 1] += 0.01 * np.sin(np.linspace(0.0, 6.0, 300))
        line = Centerline(points)
        forward = curvature_profile(line, offset=10)
        backward = curvature_profile(line.reversed(), offset=10)
        np.testing.assert_allclose(backward.curvature[::-1], forward.curvature, rtol=1e-12, equal_nan=True)

    def test_coincident_triangle_vertices(self):
        line = Centerline(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 0.0], [0.0, 0.0]]))
        with pytest.raises(DuplicateVertexError) as excinfo:
            curvature_profile(line, offset=1)
        assert excinfo.value.index == 2

    def test_too_short_for_offset(self):
        line = Centerline(np.column_stack([np.arange(20.0), np.zeros(20)]))
        with pytest.raises(CenterlineError):
            curvature_profile(line, offset=10)


class TestPipeline:

    @pytest.fixture
    def half_turn(self, kink_geom) -> SegmentSpec:
        fraction = inflation_for_sweep(kink_geom, coil_pattern(), math.pi)
        return SegmentSpec("arc", kink_geom, fraction, coil_pattern())

    def test_single_arc_plateau(self, half_turn):
        line = render_centerline(AssemblySpec("custom", [half_turn]), 2000)
        profile = analyze_centerline(line, PipelineParams(500, 30, 10))
        interior = (profile.arc_fraction >= 0.2) & (profile.arc_fraction <= 0.8)
        expected = half_turn.bend_angle
        assert expected == pytest.approx(math.pi, rel=1e-6)
        np.testing.assert_allclose(profile.curvature[interior], expected, rtol=0.05)

    def test_pipeline_is_reversal_symmetric(self, half_turn):
        line = render_centerline(AssemblySpec("custom", [half_turn]), 2000)
        forward = analyze_centerline(line)
        backward = analyze_centerline(line.reversed())
        np.testing.assert_allclose(backward.curvature[::-1], forward.curvature, rtol=1e-6, equal_nan=True)

    def test_batch_skips_and_orders_trials(self, circle_arc):
        arc = circle_arc(0.1, 2.0, 400)
        traces = {"b": arc, "a": arc.copy(), "bad": np.array([[0.0, 0.0]])}
        profiles, report = analyze_trials(traces, max_workers=3)
        assert [p.trial_id for p in profiles] == ["a", "b"]
        assert report.analysed == ["a", "b"]
        assert list(report.skipped) == ["bad"]
        assert isinstance(report, BatchReport)

    def test_wildcard_rectification_is_scale_invariant(self, circle_arc):
        arc = circle_arc(0.1, 2.0, 400)
        src = UNIT_SQUARE
        dst = 3.0 * UNIT_SQUARE + 1.0
        plain, _ = analyze_trials({"t": arc}, unit="px")
        rectified, _ = analyze_trials({"t": arc}, {"*": (src, dst)}, unit="px")
        np.testing.assert_allclose(rectified[0].curvature, plain[0].curvature, rtol=1e-9, equal_nan=True)

    @pytest.mark.parametrize("scale, angle", [(0.1, 0.3), (1.0, 1.1), (7.3, 1.1), (10.0, -2.0)])
    def test_profile_is_similarity_invariant(self, circle_arc, scale, angle):
        points = circle_arc(0.1, 2.0, 400)
        points[:, 1] += 0.01 * np.sin(np.linspace(0.0, 6.0, 400))
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        moved = scale * points @ rotation.T + np.array([0.5, -0.25])
        original = analyze_centerline(Centerline(points))
        transformed = analyze_centerline(Centerline(moved))
        np.testing.assert_array_equal(transformed.valid, original.valid)
        np.testing.assert_allclose(transformed.curvature[original.valid], original.curvature[original.valid],
                                   rtol=0, atol=1e-9)

    def test_degenerate_rectification_fails_the_batch(self, circle_arc):
        with pytest.raises(DegenerateHomographyError):
            analyze_trials({"t": circle_arc(0.1, 2.0, 100)}, {"*": (UNIT_SQUARE[:3], UNIT_SQUARE[:3])})
