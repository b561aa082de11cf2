"""
Cross-trial statistics and robot-versus-snake comparison of curvature
profiles and thrash durations.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

import config
from analysis import CurvatureProfile, end_mask, uniform_grid

logger = logging.getLogger(__name__)

REGIONS = ("head", "mid", "tail")
STD_CONVENTIONS = {"population": 0, "sample": 1}


class ComparisonError(Exception):
    """Base exception for comparison errors"""
    pass


class GridMismatchError(ComparisonError):
    """Exception raised when profiles or statistics do not share a grid and mask"""
    pass


class EmptyRegionError(ComparisonError):
    """Exception raised when a region holds no valid grid points"""
    pass


@dataclass(frozen=True)
class RegionSplit:
    """Head [0, head_end), mid [head_end, tail_start), tail [tail_start, 1]"""
    head_end: float = config.HEAD_END_FRACTION
    tail_start: float = config.TAIL_START_FRACTION

    def __post_init__(self):
        if not 0.0 < self.head_end <= self.tail_start < 1.0:
            raise ComparisonError(f"region boundaries must satisfy 0 < head_end <= tail_start < 1, "
                                  f"got {self.head_end}, {self.tail_start}")

    def masks(self, arc_fraction: np.ndarray) -> Dict[str, np.ndarray]:
        return {
            "head": arc_fraction < self.head_end,
            "mid": (arc_fraction >= self.head_end) & (arc_fraction < self.tail_start),
            "tail": arc_fraction >= self.tail_start,
        }

    def mask(self, region: str, arc_fraction: np.ndarray) -> np.ndarray:
        if region == "all":
            return np.ones(arc_fraction.shape, dtype=bool)
        if region not in REGIONS:
            raise ComparisonError(f"region must be one of {REGIONS + ('all',)}, got {region!r}")
        return self.masks(arc_fraction)[region]


class RegionIndices(NamedTuple):
    head: range
    mid: range
    tail: range


@dataclass(frozen=True, eq=False)
class ProfileStats:
    """Pointwise mean and standard deviation of curvature across trials"""
    arc_fraction: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_trials: int
    valid: np.ndarray
    ddof: int = 0
    group: str = ""

    def __len__(self) -> int:
        return len(self.arc_fraction)


class DurationRecord(NamedTuple):
    trial_id: str
    frame_count: int
    fps: float

    @property
    def duration_seconds(self) -> float:
        return self.frame_count / self.fps


class DurationSummary(NamedTuple):
    mean: float
    std: float
    minimum: float
    maximum: float
    count: int


@dataclass(frozen=True)
class RegionSummary:
    mean: float
    peak: float
    peak_fraction: float


def validate_duration(record: DurationRecord) -> DurationRecord:
    if not (isinstance(record.frame_count, (int, np.integer)) and record.frame_count >= 1):
        raise ComparisonError(f"trial {record.trial_id!r}: frame_count must be an integer >= 1, "
                              f"got {record.frame_count!r}")
    if not record.fps > 0:
        raise ComparisonError(f"trial {record.trial_id!r}: fps must be > 0, got {record.fps!r}")
    return record


def _check_same_grid(first_grid, first_valid, grid, valid, what: str) -> None:
    if len(grid) != len(first_grid) or not np.array_equal(grid, first_grid):
        raise GridMismatchError(f"{what}: arc-fraction grids differ ({len(first_grid)} vs {len(grid)} points)")
    if not np.array_equal(valid, first_valid):
        raise GridMismatchError(f"{what}: validity masks differ")


def aggregate(profiles: Sequence[CurvatureProfile], ddof: int = 0, group: str = "") -> ProfileStats:
    """
    Pointwise mean and standard deviation of a set of profiles.

    Values are sorted per grid point before summation, so the result does
    not depend on the order of ``profiles``.

    Args:
        profiles: One or more profiles on the same grid with the same mask
        ddof: 0 for the population convention, 1 for the sample convention
        group: Label carried on the result

    Returns:
        ProfileStats (NaN at masked points)

    Raises:
        ComparisonError: If no profiles are given
        GridMismatchError: If grids or masks differ
    """
    if not profiles:
        raise ComparisonError(f"group {group!r}: at least one profile is required")
    first = profiles[0]
    for profile in profiles[1:]:
        _check_same_grid(first.arc_fraction, first.valid, profile.arc_fraction, profile.valid,
                         f"group {group!r}, trial {profile.trial_id!r}")

    count = len(profiles)
    valid = first.valid
    stack = np.sort(np.vstack([p.curvature[valid] for p in profiles]), axis=0)
    mean_valid = stack.sum(axis=0) / count
    if count - ddof > 0:
        std_valid = np.sqrt(((stack - mean_valid) ** 2).sum(axis=0) / (count - ddof))
    else:
        logger.warning(f"Group {group!r}: {count} trial(s) with ddof={ddof}; reporting zero spread")
        std_valid = np.zeros_like(mean_valid)

    mean = np.full(len(first), np.nan)
    std = np.full(len(first), np.nan)
    mean[valid] = mean_valid
    std[valid] = std_valid
    return ProfileStats(first.arc_fraction, mean, std, count, valid.copy(), ddof, group)


def region_indices(split: RegionSplit = RegionSplit(), n: int = config.RESAMPLE_POINTS,
                   offset: int = config.CURVATURE_OFFSET) -> RegionIndices:
    """
    Valid grid indices of each region on the uniform n-point grid.

    Raises:
        ComparisonError: If n <= 2 * offset
    """
    if n <= 2 * offset:
        raise ComparisonError(f"a grid of {n} points has no valid samples with offset {offset}")
    grid = uniform_grid(n)
    first, stop = offset, n - offset
    head_stop = int(np.searchsorted(grid, split.head_end, side="left"))
    tail_start = int(np.searchsorted(grid, split.tail_start, side="left"))

    def clip(lo: int, hi: int) -> range:
        lo, hi = max(lo, first), min(hi, stop)
        return range(lo, max(lo, hi))

    return RegionIndices(clip(first, head_stop), clip(head_stop, tail_start), clip(tail_start, stop))


def _within_envelope(subject: ProfileStats, reference: ProfileStats) -> Tuple[np.ndarray, np.ndarray]:
    _check_same_grid(reference.arc_fraction, reference.valid, subject.arc_fraction, subject.valid,
                     f"{subject.group!r} vs {reference.group!r}")
    valid = subject.valid & reference.valid
    within = np.zeros(len(subject), dtype=bool)
    within[valid] = np.abs(subject.mean[valid] - reference.mean[valid]) <= reference.std[valid]
    return within, valid


def envelope_coverage(subject: ProfileStats, reference: ProfileStats, region: str = "all",
                      split: RegionSplit = RegionSplit()) -> float:
    """
    Fraction of valid grid points in ``region`` where the subject mean lies
    within one reference standard deviation of the reference mean.

    Raises:
        GridMismatchError: If the grids differ
        EmptyRegionError: If the region holds no valid points
    """
    within, valid = _within_envelope(subject, reference)
    selected = valid & split.mask(region, subject.arc_fraction)
    total = int(selected.sum())
    if total == 0:
        raise EmptyRegionError(f"region {region!r} has no valid grid points")
    return int((within & selected).sum()) / total


def coverage_spans(subject: ProfileStats, reference: ProfileStats) -> List[Tuple[float, float]]:
    """Maximal arc-fraction intervals where the subject stays inside the reference envelope"""
    within, _ = _within_envelope(subject, reference)
    spans = []
    padded = np.concatenate([[False], within, [False]]).astype(int)
    edges = np.flatnonzero(np.diff(padded))
    for start, stop in zip(edges[::2], edges[1::2]):
        spans.append((float(subject.arc_fraction[start]), float(subject.arc_fraction[stop - 1])))
    return spans


def region_summary(stats: ProfileStats, split: RegionSplit = RegionSplit()) -> Dict[str, RegionSummary]:
    """
    Mean curvature, peak curvature and the peak's arc fraction per region.

    Raises:
        EmptyRegionError: If a region holds no valid points
    """
    summaries = {}
    for region, mask in split.masks(stats.arc_fraction).items():
        selected = np.flatnonzero(mask & stats.valid)
        if selected.size == 0:
            raise EmptyRegionError(f"region {region!r} has no valid grid points")
        values = stats.mean[selected]
        peak = int(selected[np.argmax(values)])
        summaries[region] = RegionSummary(float(np.mean(values)), float(stats.mean[peak]),
                                          float(stats.arc_fraction[peak]))
    return summaries


def regrid_profile(profile: CurvatureProfile, n: int = config.RESAMPLE_POINTS,
                   offset: int = config.CURVATURE_OFFSET) -> CurvatureProfile:
    """
    Linear interpolation of a profile onto the uniform n-point grid.

    The standard end mask is applied; grid points outside the source's valid
    range take the nearest valid source value.
    """
    if len(profile) == n:
        return profile
    logger.warning(f"Regridding trial {profile.trial_id!r} from {len(profile)} to {n} points")
    valid = profile.valid
    if not valid.any():
        raise ComparisonError(f"trial {profile.trial_id!r} has no valid samples to regrid")
    grid = uniform_grid(n)
    mask = end_mask(n, offset)
    curvature = np.full(n, np.nan)
    curvature[mask] = np.interp(grid[mask], profile.arc_fraction[valid], profile.curvature[valid])
    return CurvatureProfile(grid, curvature, mask, profile.trial_id)


def duration_stats(records: Sequence[DurationRecord], ddof: int = 0) -> DurationSummary:
    """
    Mean, standard deviation, minimum and maximum thrash duration in seconds.

    Durations are frame_count / fps, so footage at different frame rates
    combines directly. Sums use math.fsum, which makes the mean independent
    of record order.

    Raises:
        ComparisonError: If no records are given or a record is invalid
    """
    if not records:
        raise ComparisonError("at least one duration record is required")
    values = [validate_duration(r).duration_seconds for r in records]
    count = len(values)
    mean = math.fsum(values) / count
    if count - ddof > 0:
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (count - ddof))
    else:
        std = 0.0
    return DurationSummary(mean, std, min(values), max(values), count)


def compare_durations(subject: DurationSummary, reference: DurationSummary) -> float:
    """Ratio of mean durations, subject over reference"""
    return subject.mean / reference.mean
