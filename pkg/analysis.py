"""
Curvature-estimation pipeline for traced or simulated centerlines:
projective rectification, arc-length resampling, moving-average smoothing
and circumscribed-circle curvature normalized by body length.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

import config
from assembly import AssemblyError, Centerline

logger = logging.getLogger(__name__)

_PROJECTIVE_EPS = 1e-12


class AnalysisError(Exception):
    """Base exception for analysis errors"""
    pass


class DegenerateHomographyError(AnalysisError):
    """Exception raised when correspondences do not determine a projective map"""
    pass


class ProjectionError(AnalysisError):
    """Exception raised when a point maps to the line at infinity"""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class CenterlineError(AnalysisError):
    """Exception raised for centerlines the pipeline cannot process"""
    pass


class DuplicateVertexError(AnalysisError):
    """Exception raised when a curvature triangle has coincident vertices"""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True, eq=False)
class Homography:
    """3x3 projective map normalized so that matrix[2, 2] == 1"""
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise DegenerateHomographyError(f"homography must be a finite 3x3 matrix, got shape {m.shape}")
        if abs(m[2, 2]) < _PROJECTIVE_EPS:
            raise DegenerateHomographyError("homography cannot be normalized: bottom-right entry is zero")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= _PROJECTIVE_EPS:
            raise DegenerateHomographyError(f"homography is singular (det={np.linalg.det(m):.3e})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        """
        Map an (n, 2) array of points.

        Raises:
            ProjectionError: If a point lies on the line sent to infinity
        """
        pts = np.asarray(points, dtype=float)
        homogeneous = np.column_stack([pts, np.ones(len(pts))]) @ self.matrix.T
        w = homogeneous[:, 2]
        bad = np.flatnonzero(np.abs(w) <= _PROJECTIVE_EPS)
        if bad.size:
            index = int(bad[0])
            raise ProjectionError(f"point {index} {tuple(pts[index])} maps to infinity (w={w[index]:.3e})", index)
        return homogeneous[:, :2] / w[:, None]


def _normalizing_transform(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to the origin with mean distance sqrt(2)"""
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.hypot(*(pts - centroid).T))
    if mean_dist <= _PROJECTIVE_EPS:
        raise DegenerateHomographyError("correspondence points are all coincident")
    scale = math.sqrt(2.0) / mean_dist
    return np.array([[scale, 0.0, -scale * centroid[0]],
                     [0.0, scale, -scale * centroid[1]],
                     [0.0, 0.0, 1.0]])


def _has_collinear_triple(pts: np.ndarray) -> bool:
    span = float(np.ptp(pts, axis=0).max()) or 1.0
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            for k in range(j + 1, len(pts)):
                u = pts[j] - pts[i]
                v = pts[k] - pts[i]
                if abs(u[0] * v[1] - u[1] * v[0]) <= 1e-12 * span * span:
                    return True
    return False


def estimate_homography(src_points, dst_points) -> Homography:
    """
    Projective map taking ``src_points`` onto ``dst_points``.

    Normalized direct linear transform: both point sets are conditioned by a
    similarity, the homogeneous system is solved in the least-squares sense
    by SVD, and the result is de-normalized.

    Args:
        src_points: (n, 2) source points, n >= 4
        dst_points: (n, 2) destination points

    Returns:
        Homography

    Raises:
        DegenerateHomographyError: On too few, collinear or rank-deficient correspondences
    """
    src = np.asarray(src_points, dtype=float)
    dst = np.asarray(dst_points, dtype=float)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise DegenerateHomographyError(f"point arrays must both be (n, 2), got {src.shape} and {dst.shape}")
    if len(src) < 4:
        raise DegenerateHomographyError(f"at least 4 correspondences are required, got {len(src)}")
    if len(src) == 4 and (_has_collinear_triple(src) or _has_collinear_triple(dst)):
        raise DegenerateHomographyError("three of the four correspondences are collinear")

    t_src = _normalizing_transform(src)
    t_dst = _normalizing_transform(dst)
    a_pts = (np.column_stack([src, np.ones(len(src))]) @ t_src.T)[:, :2]
    b_pts = (np.column_stack([dst, np.ones(len(dst))]) @ t_dst.T)[:, :2]

    rows = []
    for (x, y), (u, v) in zip(a_pts, b_pts):
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
        rows.append([x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u])
    _, singular, vt = np.linalg.svd(np.asarray(rows))
    if len(singular) >= 8 and singular[7] <= 1e-10 * singular[0]:
        raise DegenerateHomographyError("correspondences are rank deficient; the map is not unique")

    h_normalized = vt[-1].reshape(3, 3)
    matrix = np.linalg.inv(t_dst) @ h_normalized @ t_src
    return Homography(matrix)


def apply_homography(h: Homography, line: Centerline, unit: Optional[str] = None) -> Centerline:
    """Map every centerline point through ``h``, keeping the order"""
    return Centerline(h.apply_points(line.points), unit or line.unit)


def resample_uniform(line: Centerline, n: int = config.RESAMPLE_POINTS) -> Centerline:
    """
    ``n`` points at equal cumulative-chord-length spacing along ``line``.

    The first and last input points are kept exactly.

    Raises:
        CenterlineError: If n < 2 or the polyline has zero length
    """
    if n < 2:
        raise CenterlineError(f"resampling needs n >= 2, got {n}")
    pts = line.points
    cumulative = np.concatenate([[0.0], np.cumsum(line.segment_lengths)])
    total = cumulative[-1]
    if not total > 0:
        raise CenterlineError("cannot resample a centerline of zero length")
    targets = np.linspace(0.0, total, n)
    resampled = np.column_stack([np.interp(targets, cumulative, pts[:, 0]),
                                 np.interp(targets, cumulative, pts[:, 1])])
    resampled[0] = pts[0]
    resampled[-1] = pts[-1]
    return Centerline(resampled, line.unit)


def smoothing_window(span: int) -> int:
    """Centered window length for a span; even spans round up to the next odd"""
    if span < 1:
        raise CenterlineError(f"span must be >= 1, got {span}")
    return span if span % 2 == 1 else span + 1


def smooth_moving_average(line: Centerline, span: int = config.SMOOTHING_SPAN) -> Centerline:
    """
    Centered moving average of the point coordinates.

    Near the ends the window shrinks symmetrically, so the endpoints stay
    fixed and no data is invented beyond the body.

    Raises:
        CenterlineError: If the line has fewer than 3 points
    """
    pts = line.points
    count = len(pts)
    if count < 3:
        raise CenterlineError(f"smoothing needs at least 3 points, got {count}")
    half = smoothing_window(span) // 2
    index = np.arange(count)
    halves = np.minimum(np.minimum(index, count - 1 - index), half)
    prefix = np.vstack([np.zeros((1, 2)), np.cumsum(pts, axis=0)])
    lo = index - halves
    hi = index + halves + 1
    smoothed = (prefix[hi] - prefix[lo]) / (hi - lo)[:, None]
    smoothed[0] = pts[0]
    smoothed[-1] = pts[-1]
    return Centerline(smoothed, line.unit)


@dataclass(frozen=True, eq=False)
class CurvatureProfile:
    """
    Length-normalized curvature against arc fraction for one trial.

    Missing samples (the masked ends) hold NaN in ``curvature`` and False in ``valid``.
    """
    arc_fraction: np.ndarray
    curvature: np.ndarray
    valid: np.ndarray
    trial_id: str = ""

    def __post_init__(self):
        for name in ("arc_fraction", "curvature"):
            array = np.array(getattr(self, name), dtype=float)
            array.setflags(write=False)
            object.__setattr__(self, name, array)
        valid = np.array(self.valid, dtype=bool)
        valid.setflags(write=False)
        object.__setattr__(self, "valid", valid)
        if not (self.arc_fraction.shape == self.curvature.shape == self.valid.shape) or self.arc_fraction.ndim != 1:
            raise CenterlineError("profile arrays must be one-dimensional and of equal length")

    def __len__(self) -> int:
        return len(self.arc_fraction)

    @property
    def missing_count(self) -> int:
        return int((~self.valid).sum())


def uniform_grid(n: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, n)


def end_mask(n: int, offset: int) -> np.ndarray:
    valid = np.zeros(n, dtype=bool)
    valid[offset:n - offset] = True
    return valid


def curvature_profile(line: Centerline, offset: int = config.CURVATURE_OFFSET,
                      trial_id: str = "") -> CurvatureProfile:
    """
    Circumscribed-circle curvature at every point with a full triangle.

    For index i the triangle (p[i - offset], p[i], p[i + offset]) defines a
    circumradius r; the profile value is the reciprocal of r / total length.
    Collinear triples give 0; the first and last ``offset`` points are masked.

    Args:
        line: Resampled (and usually smoothed) centerline
        offset: Index distance to the outer triangle vertices
        trial_id: Label carried on the result

    Returns:
        CurvatureProfile on the uniform arc-fraction grid of len(line) points

    Raises:
        CenterlineError: If the line is too short for the offset
        DuplicateVertexError: If a triangle has coincident vertices
    """
    pts = line.points
    n = len(pts)
    if offset < 1 or n <= 2 * offset:
        raise CenterlineError(f"a profile with offset {offset} needs more than {2 * offset} points, got {n}")
    total = line.length

    center = pts[offset:n - offset]
    before = pts[:n - 2 * offset] - center
    after = pts[2 * offset:] - center
    a = np.hypot(before[:, 0], before[:, 1])
    b = np.hypot(after[:, 0], after[:, 1])
    c = np.hypot(*(pts[2 * offset:] - pts[:n - 2 * offset]).T)
    coincident = np.flatnonzero((a == 0) | (b == 0) | (c == 0))
    if coincident.size:
        index = int(coincident[0]) + offset
        raise DuplicateVertexError(f"triangle at index {index} has coincident vertices", index)

    twice_area = np.abs(before[:, 0] * after[:, 1] - before[:, 1] * after[:, 0])
    with np.errstate(divide="ignore"):
        radius = (a * b * c) / (2.0 * twice_area)
        normalized_radius = radius / total
        values = np.where(twice_area > 0, 1.0 / normalized_radius, 0.0)

    curvature = np.full(n, np.nan)
    curvature[offset:n - offset] = values
    return CurvatureProfile(uniform_grid(n), curvature, end_mask(n, offset), trial_id)


@dataclass(frozen=True)
class PipelineParams:
    n: int = config.RESAMPLE_POINTS
    span: int = config.SMOOTHING_SPAN
    offset: int = config.CURVATURE_OFFSET


def analyze_centerline(line: Centerline, params: PipelineParams = PipelineParams(),
                       homography: Optional[Homography] = None, trial_id: str = "") -> CurvatureProfile:
    """Rectify (optional), resample, smooth and profile one centerline"""
    if homography is not None:
        line = apply_homography(homography, line)
    line = resample_uniform(line, params.n)
    line = smooth_moving_average(line, params.span)
    return curvature_profile(line, params.offset, trial_id)


@dataclass
class BatchReport:
    """Outcome of a batch run: analysed trial ids and skipped trials with reasons"""
    analysed: List[str] = field(default_factory=list)
    skipped: Dict[str, str] = field(default_factory=dict)


def analyze_trials(traces: Mapping[str, np.ndarray],
                   rectifications: Optional[Mapping[str, Tuple[np.ndarray, np.ndarray]]] = None,
                   params: PipelineParams = PipelineParams(), unit: str = config.DEFAULT_UNITS,
                   max_workers: int = config.ANALYSIS_WORKERS) -> Tuple[List[CurvatureProfile], BatchReport]:
    """
    Run the pipeline over many trials concurrently.

    Trials whose points cannot form a centerline (too few points, zero
    length) are skipped with a warning and listed in the report. Profiles
    are returned in sorted trial-id order regardless of completion order.

    Args:
        traces: trial_id -> (n, 2) points ordered head to tail
        rectifications: trial_id -> (src, dst) correspondences; key "*" applies to all other trials
        params: Pipeline constants
        unit: Unit tag of the trace coordinates
        max_workers: Thread pool size

    Returns:
        (profiles, report)

    Raises:
        DegenerateHomographyError: If a rectification set is degenerate
    """
    # Estimate homographies up front so a degenerate set fails the whole batch
    rectifications = rectifications or {}
    homographies: Dict[str, Homography] = {}
    for key in sorted(rectifications):
        src, dst = rectifications[key]
        homographies[key] = estimate_homography(src, dst)
        logger.info(f"Estimated homography for {key!r} from {len(src)} correspondences")

    def run(trial_id: str):
        try:
            line = Centerline(traces[trial_id], unit)
        except AssemblyError as e:
            return trial_id, None, str(e)
        h = homographies.get(trial_id, homographies.get("*"))
        try:
            return trial_id, analyze_centerline(line, params, h, trial_id), None
        except (CenterlineError, DuplicateVertexError, ProjectionError) as e:
            return trial_id, None, str(e)

    report = BatchReport()
    profiles = []
    with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
        for trial_id, profile, reason in pool.map(run, sorted(traces)):
            if profile is None:
                logger.warning(f"Skipping trial {trial_id!r}: {reason}")
                report.skipped[trial_id] = reason
            else:
                profiles.append(profile)
                report.analysed.append(trial_id)
    logger.info(f"Analysed {len(report.analysed)} trials, skipped {len(report.skipped)}")
    return profiles, report
