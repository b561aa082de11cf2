"""
Snake-robot assemblies: genus design templates, inverse design from target
curvatures, and planar rendering of an assembled robot's centerline by
piecewise-constant-curvature forward kinematics.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

import config
from free_model import (
    FreeGeometry,
    InfeasibleDesignError,
    curvature_at_length,
    length_at_bend_angle,
    max_curvature,
    max_length,
    solve_fiber_angle,
)

logger = logging.getLogger(__name__)

GENERA = ("Atractus", "Micrurus", "Oxyrhopus")
CUSTOM_GENUS = "custom"
ROLE_ORDER = ("head", "mid", "tail")
ROLE_SHARE = {"head": 0.25, "mid": 0.50, "tail": 0.25}
MIDSECTION_SHAPES = ("U", "S")
UNITS = ("m", "px")

_FRACTION_TOLERANCE = 1e-12


class AssemblyError(Exception):
    """Base exception for assembly errors"""
    pass


class UnknownGenusError(AssemblyError):
    """Exception raised for a genus without a design template"""
    pass


class SegmentSpecError(AssemblyError):
    """Exception raised for an invalid segment or assembly description"""
    pass


@dataclass(frozen=True)
class SubArc:
    """One stretch of a segment: sign +1/-1 bends left/right, 0 stays straight"""
    sign: int
    fraction: float


@dataclass(frozen=True, eq=False)
class Centerline:
    """
    Ordered planar points from head to tail.

    Consecutive duplicate points are dropped on construction; at least two
    distinct points must remain.
    """
    points: np.ndarray
    unit: str = "m"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise SegmentSpecError(f"centerline points must have shape (n, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise SegmentSpecError("centerline points must be finite")
        if self.unit not in UNITS:
            raise SegmentSpecError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if len(pts) > 1:
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            if not keep.all():
                logger.debug(f"Dropped {int((~keep).sum())} consecutive duplicate points")
                pts = pts[keep]
        if len(pts) < 2:
            raise SegmentSpecError(f"a centerline needs at least 2 distinct points, got {len(pts)}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.points, axis=0).T)

    @property
    def length(self) -> float:
        return math.fsum(self.segment_lengths)

    def reversed(self) -> "Centerline":
        return Centerline(self.points[::-1], self.unit)


@dataclass(frozen=True)
class SegmentSpec:
    """
    Design of one bending segment.

    Attributes:
        label: Free-text name, unique within an assembly
        geom: Relaxed FREE geometry
        inflation_fraction: lambda in [0, 1]; operating length L0 + lambda (L_max - L0)
        sign_pattern: Ordered sub-arcs whose fractions sum to 1
        role: head, mid or tail; assigned by position when omitted
    """
    label: str
    geom: FreeGeometry
    inflation_fraction: float = 1.0
    sign_pattern: Tuple[SubArc, ...] = (SubArc(0, 1.0),)
    role: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "sign_pattern", tuple(self.sign_pattern))
        if not 0.0 <= self.inflation_fraction <= 1.0:
            raise SegmentSpecError(f"segment {self.label!r}: inflation_fraction must lie in [0, 1], "
                                   f"got {self.inflation_fraction}")
        if not self.sign_pattern:
            raise SegmentSpecError(f"segment {self.label!r}: sign_pattern is empty")
        for arc in self.sign_pattern:
            if arc.sign not in (-1, 0, 1):
                raise SegmentSpecError(f"segment {self.label!r}: sign must be -1, 0 or +1, got {arc.sign}")
            if not arc.fraction > 0:
                raise SegmentSpecError(f"segment {self.label!r}: sub-arc fractions must be > 0, got {arc.fraction}")
        total = math.fsum(arc.fraction for arc in self.sign_pattern)
        if abs(total - 1.0) > _FRACTION_TOLERANCE:
            raise SegmentSpecError(f"segment {self.label!r}: sub-arc fractions sum to {total!r}, expected 1")
        if self.role is not None and self.role not in ROLE_ORDER:
            raise SegmentSpecError(f"segment {self.label!r}: role must be one of {ROLE_ORDER}, got {self.role!r}")

    @property
    def operating_length(self) -> float:
        l0 = self.geom.relaxed_length
        upper = max_length(self.geom)
        return min(l0 + self.inflation_fraction * (upper - l0), upper)

    @property
    def curvature(self) -> float:
        return curvature_at_length(self.geom, self.operating_length)

    @property
    def max_curvature(self) -> float:
        return max_curvature(self.geom)

    @property
    def bend_angle(self) -> float:
        """Bend angle if the whole segment bent, L_op * K(L_op)"""
        return self.operating_length * self.curvature

    @property
    def bending_fraction(self) -> float:
        return math.fsum(arc.fraction for arc in self.sign_pattern if arc.sign != 0)

    @property
    def sweep(self) -> float:
        """Total absolute bend angle of the signed sub-arcs, radians"""
        return self.bending_fraction * self.bend_angle

    @property
    def is_straight(self) -> bool:
        return all(arc.sign == 0 for arc in self.sign_pattern)


@dataclass(frozen=True)
class AssemblySpec:
    """Ordered head-to-tail list of bending segments realizing a genus template"""
    genus: str
    segments: Tuple[SegmentSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "genus", normalize_genus(self.genus))
        if not self.segments:
            raise SegmentSpecError("an assembly needs at least one segment")
        labels = [segment.label for segment in self.segments]
        if len(set(labels)) != len(labels):
            raise SegmentSpecError(f"segment labels must be unique, got {labels}")
        ranks = [ROLE_ORDER.index(role) for role in self.roles]
        if ranks != sorted(ranks):
            raise SegmentSpecError(f"segment roles must run head -> mid -> tail, got {list(self.roles)}")

    @property
    def roles(self) -> Tuple[str, ...]:
        count = len(self.segments)
        roles = []
        for index, segment in enumerate(self.segments):
            if segment.role is not None:
                roles.append(segment.role)
            elif index == 0:
                roles.append("head")
            elif index == count - 1:
                roles.append("tail")
            else:
                roles.append("mid")
        return tuple(roles)

    @property
    def total_length(self) -> float:
        return math.fsum(segment.operating_length for segment in self.segments)

    def segment(self, label: str) -> SegmentSpec:
        for segment in self.segments:
            if segment.label == label:
                return segment
        raise SegmentSpecError(f"no segment labelled {label!r}; labels are {[s.label for s in self.segments]}")


def normalize_genus(genus: str) -> str:
    """Canonical spelling of a genus tag; raises UnknownGenusError for unknown tags"""
    key = str(genus).strip().lower()
    for name in GENERA:
        if name.lower() == key:
            return name
    if key == CUSTOM_GENUS:
        return CUSTOM_GENUS
    raise UnknownGenusError(f"unknown genus {genus!r}; valid tags are {', '.join(GENERA + (CUSTOM_GENUS,))}")


def straight_pattern() -> Tuple[SubArc, ...]:
    return (SubArc(0, 1.0),)


def kink_pattern(kink_fraction: float = config.KINK_FRACTION, sign: int = 1,
                 lead_in: float = config.KINK_LEAD_IN_FRACTION) -> Tuple[SubArc, ...]:
    """Short straight lead-in, bent kink near the front of the head, straight remainder"""
    if not (lead_in >= 0 and kink_fraction > 0 and lead_in + kink_fraction <= 1.0):
        raise SegmentSpecError(f"kink needs lead_in >= 0, kink_fraction > 0 and lead_in + kink_fraction <= 1, "
                               f"got {lead_in} and {kink_fraction}")
    arcs = [SubArc(0, lead_in), SubArc(sign, kink_fraction), SubArc(0, 1.0 - lead_in - kink_fraction)]
    return tuple(arc for arc in arcs if arc.fraction > 0)


def midsection_pattern(shape: str) -> Tuple[SubArc, ...]:
    shape = shape.upper()
    if shape == "U":
        return (SubArc(1, 1.0),)
    if shape == "S":
        return SubArc(1, 0.5), SubArc(-1, 0.5)
    raise SegmentSpecError(f"midsection shape must be one of {MIDSECTION_SHAPES}, got {shape!r}")


def coil_pattern(sign: int = 1) -> Tuple[SubArc, ...]:
    return (SubArc(sign, 1.0),)


def inflation_for_sweep(geom: FreeGeometry, pattern: Sequence[SubArc], sweep: float) -> float:
    """
    Inflation fraction at which the signed sub-arcs of ``pattern`` sweep ``sweep`` radians.

    Falls back to full inflation (with a warning) when the sweep is out of reach.
    """
    bending = math.fsum(arc.fraction for arc in pattern if arc.sign != 0)
    if bending == 0 or sweep == 0:
        return 1.0
    try:
        length = length_at_bend_angle(geom, sweep / bending)
    except InfeasibleDesignError as e:
        logger.warning(f"Sweep of {math.degrees(sweep):.1f} deg unreachable, using full inflation: {str(e)}")
        return 1.0
    l0 = geom.relaxed_length
    return min(max((length - l0) / (max_length(geom) - l0), 0.0), 1.0)


def genus_template(genus: str, midsection: Optional[str] = None,
                   body_length: float = config.BODY_LENGTH_M,
                   relaxed_radius: float = config.RELAXED_RADIUS_M) -> AssemblySpec:
    """
    Head / midsection / tail assembly emulating one snake genus.

    Straight body curves and heads use 67.5 deg windings; kinks and tails use
    89 deg. Bending segments are inflated just far enough to reach their
    template sweep (kink, midsection curve, one full coil).

    Args:
        genus: Atractus, Micrurus or Oxyrhopus (case-insensitive)
        midsection: "U" or "S"; only Atractus admits both, default U
        body_length: Total relaxed length in meters, split 25/50/25
        relaxed_radius: R0 shared by all segments

    Returns:
        AssemblySpec for the genus

    Raises:
        UnknownGenusError: If the genus has no template
        SegmentSpecError: If the midsection shape is not allowed for the genus
    """
    name = normalize_genus(genus)
    if name == CUSTOM_GENUS:
        raise UnknownGenusError(f"'custom' has no template; valid tags are {', '.join(GENERA)}")
    if name == "Atractus":
        shape = (midsection or config.DEFAULT_MIDSECTION).upper()
    else:
        shape = (midsection or "S").upper()
        if shape != "S":
            raise SegmentSpecError(f"{name} midsections are S-curves; {shape!r} is only available for Atractus")

    lengths = {role: ROLE_SHARE[role] * body_length for role in ROLE_ORDER}
    low = config.STRAIGHT_FIBER_ANGLE_DEG
    high = config.KINK_FIBER_ANGLE_DEG

    if name == "Atractus":
        head_geom = FreeGeometry.from_degrees(lengths["head"], relaxed_radius, low)
        head = SegmentSpec("head-straight", head_geom, 1.0, straight_pattern(), "head")
    else:
        head_geom = FreeGeometry.from_degrees(lengths["head"], relaxed_radius, high)
        pattern = kink_pattern()
        head = SegmentSpec("head-kink", head_geom, inflation_for_sweep(head_geom, pattern, config.KINK_SWEEP_RAD),
                           pattern, "head")

    mid_geom = FreeGeometry.from_degrees(lengths["mid"], relaxed_radius, low)
    pattern = midsection_pattern(shape)
    mid = SegmentSpec(f"mid-{shape.lower()}-curve", mid_geom,
                      inflation_for_sweep(mid_geom, pattern, config.MIDSECTION_SWEEP_RAD), pattern, "mid")

    tail_geom = FreeGeometry.from_degrees(lengths["tail"], relaxed_radius, high)
    coil_inflation = inflation_for_sweep(tail_geom, coil_pattern(), config.COIL_SWEEP_RAD)
    if name == "Oxyrhopus":
        tail = SegmentSpec("tail-straight", tail_geom, coil_inflation, straight_pattern(), "tail")
    else:
        tail = SegmentSpec("tail-coil", tail_geom, coil_inflation, coil_pattern(), "tail")

    spec = AssemblySpec(name, (head, mid, tail))
    logger.info(f"Built {name} template: " + ", ".join(
        f"{s.label} ({s.geom.fiber_angle_deg:.1f} deg, lambda={s.inflation_fraction:.4f})" for s in spec.segments))
    return spec


@dataclass(frozen=True)
class RoleTarget:
    """Design target for one body role"""
    curvature: float
    relaxed_length: Optional[float] = None
    sign_pattern: Optional[Tuple[SubArc, ...]] = None
    label: Optional[str] = None


def _default_pattern(role: str) -> Tuple[SubArc, ...]:
    if role == "head":
        return kink_pattern()
    if role == "mid":
        return midsection_pattern("S")
    return coil_pattern()


def design_assembly(targets: Mapping[str, RoleTarget], relaxed_radius: float,
                    body_length: float = config.BODY_LENGTH_M) -> AssemblySpec:
    """
    Assembly whose segments reach the target curvatures at full inflation.

    A target of 0 yields a straight 67.5 deg segment without strain limiter.

    Raises:
        SegmentSpecError: If no role or an unknown role is given
        InfeasibleDesignError: If a target exceeds what R0 permits
    """
    unknown = sorted(set(targets) - set(ROLE_ORDER))
    if unknown:
        raise SegmentSpecError(f"unknown roles {unknown}; expected a subset of {ROLE_ORDER}")
    if not targets:
        raise SegmentSpecError("at least one role target is required")

    segments = []
    for role in ROLE_ORDER:
        if role not in targets:
            continue
        target = targets[role]
        l0 = target.relaxed_length or ROLE_SHARE[role] * body_length
        if target.curvature == 0:
            geom = FreeGeometry.from_degrees(l0, relaxed_radius, config.STRAIGHT_FIBER_ANGLE_DEG)
            pattern = straight_pattern()
        else:
            try:
                angle = solve_fiber_angle(target.curvature, relaxed_radius)
            except InfeasibleDesignError as e:
                logger.error(f"Role {role}: {str(e)}")
                raise
            geom = FreeGeometry(l0, relaxed_radius, angle)
            pattern = target.sign_pattern or _default_pattern(role)
        segments.append(SegmentSpec(target.label or f"{role}-design", geom, 1.0, pattern, role))
    return AssemblySpec(CUSTOM_GENUS, tuple(segments))


def mirrored(spec: AssemblySpec) -> AssemblySpec:
    """Same assembly with every bend direction flipped"""
    segments = tuple(
        replace(s, sign_pattern=tuple(SubArc(-arc.sign, arc.fraction) for arc in s.sign_pattern))
        for s in spec.segments
    )
    return replace(spec, segments=segments)


def with_inflation(spec: AssemblySpec, overrides: Mapping[str, float]) -> AssemblySpec:
    """Copy of ``spec`` with inflation fractions replaced by segment label"""
    for label in overrides:
        spec.segment(label)
    segments = tuple(
        replace(s, inflation_fraction=float(overrides[s.label])) if s.label in overrides else s
        for s in spec.segments
    )
    return replace(spec, segments=segments)


def _advance(x, y, heading, curvature: float, s):
    """Pose after travelling arc length ``s`` along a constant-curvature arc"""
    if curvature == 0.0:
        return x + s * np.cos(heading), y + s * np.sin(heading), heading + 0.0 * s
    turned = heading + curvature * s
    return (x + (np.sin(turned) - np.sin(heading)) / curvature,
            y - (np.cos(turned) - np.cos(heading)) / curvature,
            turned)


def render_centerline(spec: AssemblySpec, samples_per_segment: int) -> Centerline:
    """
    Planar centerline of the inflated assembly.

    Each segment is sampled at ``samples_per_segment`` arc-length-uniform
    points; every signed sub-arc bends with the segment's curvature at its
    operating length. Segments join with position and tangent continuity.

    Args:
        spec: Assembly to render
        samples_per_segment: Samples per segment including both ends (>= 2)

    Returns:
        Centerline in meters, head first, starting at the origin heading +x

    Raises:
        SegmentSpecError: If fewer than 2 samples per segment are requested
    """
    if samples_per_segment < 2:
        raise SegmentSpecError(f"samples_per_segment must be >= 2, got {samples_per_segment}")

    # Start at the origin heading along +x
    x, y, heading = 0.0, 0.0, 0.0
    chunks = [np.array([[x, y]])]
    for segment in spec.segments:
        length = segment.operating_length
        curvature = segment.curvature
        if segment.sweep > 2.0 * math.pi:
            logger.warning(f"Segment {segment.label!r} sweeps {math.degrees(segment.sweep):.0f} deg; "
                           f"the planar centerline overlaps itself")

        # Sample positions along this segment, first point shared with the previous one
        s = np.linspace(0.0, length, samples_per_segment)[1:]
        bounds = np.cumsum([0.0] + [arc.fraction * length for arc in segment.sign_pattern])
        bounds[-1] = length
        xs = np.empty_like(s)
        ys = np.empty_like(s)
        for index, arc in enumerate(segment.sign_pattern):
            start, stop = bounds[index], bounds[index + 1]
            last = index == len(segment.sign_pattern) - 1
            mask = (s >= start) & ((s <= stop) if last else (s < stop))
            k = arc.sign * curvature
            # Points on this sub-arc, then the pose at its end
            xs[mask], ys[mask], _ = _advance(x, y, heading, k, s[mask] - start)
            x, y, heading = _advance(x, y, heading, k, stop - start)
        # Pin the last sample to the exact end pose
        xs[-1], ys[-1] = x, y
        chunks.append(np.column_stack([xs, ys]))

    points = np.vstack(chunks)
    logger.debug(f"Rendered {spec.genus} assembly: {len(points)} points, length {spec.total_length:.6f} m")
    return Centerline(points, "m")
