"""
Closed-form kinematics of extending-type fiber-reinforced elastomeric
enclosures (FREEs) and of the bending segments made from them.

All quantities are SI (meters, radians). Degrees only appear at I/O
boundaries via ``FreeGeometry.from_degrees``.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable

logger = logging.getLogger(__name__)

NEUTRAL_ANGLE = math.atan(math.sqrt(2.0))
_COS_NEUTRAL = math.cos(NEUTRAL_ANGLE)
_SIN_NEUTRAL = math.sin(NEUTRAL_ANGLE)

BISECTION_MARGIN = 1e-9
BISECTION_XTOL = 1e-10
BISECTION_RTOL = 1e-8
BISECTION_MAX_ITER = 200

# relative slack accepted on the upper length bound (L0 + 1 * (Lmax - L0) may
# land one ulp above Lmax)
_LENGTH_SLACK = 1e-12


class FreeModelError(Exception):
    """Base exception for FREE model errors"""
    pass


class GeometryDomainError(FreeModelError, ValueError):
    """Exception raised when an argument lies outside the model's domain"""
    pass


class InfeasibleDesignError(FreeModelError):
    """Exception raised when a design target cannot be reached"""

    def __init__(self, message: str, attainable: float):
        super().__init__(message)
        self.attainable = attainable


class NumericalError(FreeModelError):
    """Exception raised when a numerical solver fails to converge"""
    pass


@dataclass(frozen=True)
class FreeGeometry:
    """
    Relaxed configuration of an extending-type FREE.

    Attributes:
        relaxed_length: L0 in meters
        relaxed_radius: R0 in meters
        fiber_angle: alpha0 in radians, strictly between the neutral angle and pi/2
    """
    relaxed_length: float
    relaxed_radius: float
    fiber_angle: float

    def __post_init__(self):
        if not (self.relaxed_length > 0 and math.isfinite(self.relaxed_length)):
            raise GeometryDomainError(f"relaxed_length must be > 0, got {self.relaxed_length}")
        if not (self.relaxed_radius > 0 and math.isfinite(self.relaxed_radius)):
            raise GeometryDomainError(f"relaxed_radius must be > 0, got {self.relaxed_radius}")
        if not NEUTRAL_ANGLE < self.fiber_angle < math.pi / 2:
            raise GeometryDomainError(
                f"fiber_angle must lie in (neutral_angle={math.degrees(NEUTRAL_ANGLE):.4f} deg, 90 deg), "
                f"got {math.degrees(self.fiber_angle):.4f} deg; contracting-type FREEs are not modeled"
            )

    @classmethod
    def from_degrees(cls, relaxed_length: float, relaxed_radius: float, fiber_angle_deg: float) -> "FreeGeometry":
        return cls(relaxed_length, relaxed_radius, math.radians(fiber_angle_deg))

    @property
    def fiber_angle_deg(self) -> float:
        return math.degrees(self.fiber_angle)

    @property
    def fiber_length(self) -> float:
        """B = L0 / cos(alpha0), the length of one unrolled fiber"""
        return self.relaxed_length / math.cos(self.fiber_angle)

    @property
    def turn_count(self) -> float:
        """N = L0 tan(alpha0) / (2 pi R0), revolutions of one fiber"""
        return self.relaxed_length * math.tan(self.fiber_angle) / (2.0 * math.pi * self.relaxed_radius)


@dataclass(frozen=True)
class BendState:
    """Inflated pose of one bending segment (bend_radius is inf when straight)"""
    central_arc_length: float
    bend_radius: float
    bend_angle: float
    curvature: float


def _check_length(geom: FreeGeometry, length: float, upper: float, upper_name: str,
                  inclusive: bool = True) -> float:
    if not math.isfinite(length) or length < geom.relaxed_length:
        raise GeometryDomainError(
            f"length {length!r} m is below the lower bound L0={geom.relaxed_length!r} m"
        )
    if inclusive:
        if length > upper * (1.0 + _LENGTH_SLACK):
            raise GeometryDomainError(f"length {length!r} m exceeds the upper bound {upper_name}={upper!r} m")
        return min(length, upper)
    if length >= upper:
        raise GeometryDomainError(f"length {length!r} m must be strictly below {upper_name}={upper!r} m")
    return length


def radius_at_length(geom: FreeGeometry, length: float) -> float:
    """
    Radius of a pressurized FREE whose length has grown to ``length``.

    Args:
        geom: Relaxed geometry
        length: Current length in meters, L0 <= length < B

    Returns:
        Radius in meters

    Raises:
        GeometryDomainError: If length is outside [L0, B)
    """
    b = geom.fiber_length
    length = _check_length(geom, length, b, "B", inclusive=False)
    return math.sqrt(b * b - length * length) / (2.0 * math.pi * geom.turn_count)


def max_length(geom: FreeGeometry) -> float:
    """Length reached when the fibers have rotated to the neutral angle"""
    return geom.relaxed_length * _COS_NEUTRAL / math.cos(geom.fiber_angle)


def fiber_angle_at_length(geom: FreeGeometry, length: float) -> float:
    """Fiber angle (radians) once the FREE has extended to ``length``"""
    length = _check_length(geom, length, max_length(geom), "L_max")
    return math.acos(length / geom.fiber_length)


def curvature_at_length(geom: FreeGeometry, length: float) -> float:
    """
    Curvature of a bending segment whose central axis has extended to ``length``.

    The strain-limited side keeps arc length L0, so the curvature vanishes at
    L0 and grows monotonically up to ``max_curvature(geom)`` at L_max.

    Args:
        geom: Relaxed geometry
        length: Central arc length in meters, L0 <= length <= L_max

    Returns:
        Curvature in 1/m

    Raises:
        GeometryDomainError: If length is outside [L0, L_max]
    """
    length = _check_length(geom, length, max_length(geom), "L_max")
    b = geom.fiber_length
    return 2.0 * math.pi * geom.turn_count * (1.0 - geom.relaxed_length / length) / math.sqrt(b * b - length * length)


def max_curvature_for(relaxed_radius: float, fiber_angle: float) -> float:
    """
    Maximum bending curvature for a relaxed radius and fiber angle.

    Defined on the closed interval [neutral_angle, pi/2) so that the boundary
    value (exactly zero at the neutral angle) is expressible.

    Raises:
        GeometryDomainError: If the radius is not positive or the angle is outside the interval
    """
    if not relaxed_radius > 0:
        raise GeometryDomainError(f"relaxed_radius must be > 0, got {relaxed_radius}")
    if not NEUTRAL_ANGLE <= fiber_angle < math.pi / 2:
        raise GeometryDomainError(
            f"fiber_angle must lie in [neutral_angle, 90 deg), got {math.degrees(fiber_angle):.6f} deg"
        )
    return (1.0 / relaxed_radius) * (math.sin(fiber_angle) / _SIN_NEUTRAL) * (
        1.0 - math.cos(fiber_angle) / _COS_NEUTRAL)


def max_curvature(geom: FreeGeometry) -> float:
    """Curvature reached at full inflation (length L_max)"""
    return max_curvature_for(geom.relaxed_radius, geom.fiber_angle)


def curvature_supremum(relaxed_radius: float) -> float:
    """Least upper bound of the maximum curvature as alpha0 approaches pi/2"""
    return 1.0 / (relaxed_radius * _SIN_NEUTRAL)


def bend_state_at(geom: FreeGeometry, length: float) -> BendState:
    """
    Bending pose of a strain-limited segment at central arc length ``length``.

    Raises:
        GeometryDomainError: If length is outside [L0, L_max]
    """
    length = _check_length(geom, length, max_length(geom), "L_max")
    k = curvature_at_length(geom, length)
    if k == 0.0:
        return BendState(length, math.inf, 0.0, 0.0)
    return BendState(length, 1.0 / k, length * k, k)


def _bisect_increasing(fn: Callable[[float], float], target: float, lo: float, hi: float,
                       xtol: float = BISECTION_XTOL, rtol: float = BISECTION_RTOL,
                       max_iter: int = BISECTION_MAX_ITER) -> float:
    """
    Find x in [lo, hi] with fn(x) == target for an increasing fn.

    Stops once the bracket is narrower than ``xtol`` and the relative residual
    is within ``rtol``, or when the bracket can no longer be split in floating
    point.

    Raises:
        NumericalError: If neither criterion is met within ``max_iter`` iterations
    """
    scale = abs(target) if target != 0 else 1.0
    for iteration in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        value = fn(mid)
        residual = abs(value - target) / scale
        if (hi - lo) <= xtol and residual <= rtol:
            logger.debug(f"Bisection converged after {iteration} iterations (residual {residual:.3e})")
            return mid
        if mid <= lo or mid >= hi:
            logger.debug(f"Bisection reached floating-point resolution after {iteration} iterations")
            return mid
        if value < target:
            lo = mid
        else:
            hi = mid
    raise NumericalError(f"Bisection did not converge within {max_iter} iterations (bracket [{lo!r}, {hi!r}])")


def solve_fiber_angle(target_curvature: float, relaxed_radius: float, strict: bool = False) -> float:
    """
    Fiber angle whose maximum curvature equals ``target_curvature``.

    Args:
        target_curvature: Desired maximum curvature in 1/m (>= 0)
        relaxed_radius: R0 in meters
        strict: Treat a zero target as infeasible, since the neutral angle lies
            outside the open interval of extending FREEs

    Returns:
        Fiber angle in radians. A target of exactly 0 returns the neutral angle
        unless ``strict`` is set.

    Raises:
        InfeasibleDesignError: If the target is negative, zero under ``strict``, or not
            attainable at this radius
        NumericalError: If bisection fails to converge
    """
    if not relaxed_radius > 0:
        raise GeometryDomainError(f"relaxed_radius must be > 0, got {relaxed_radius}")
    supremum = curvature_supremum(relaxed_radius)
    if target_curvature == 0:
        if strict:
            raise InfeasibleDesignError(
                "target curvature 0 1/m is only reached at the neutral angle, "
                "which no extending FREE can be wound at",
                attainable=0.0,
            )
        return NEUTRAL_ANGLE
    if not 0 < target_curvature < supremum:
        raise InfeasibleDesignError(
            f"target curvature {target_curvature!r} 1/m is not attainable with R0={relaxed_radius!r} m; "
            f"attainable range is (0, {supremum!r}) 1/m",
            attainable=supremum,
        )

    lo = NEUTRAL_ANGLE + BISECTION_MARGIN
    hi = math.pi / 2 - BISECTION_MARGIN
    reachable = max_curvature_for(relaxed_radius, hi)
    if target_curvature > reachable:
        raise InfeasibleDesignError(
            f"target curvature {target_curvature!r} 1/m lies beyond the largest windable angle "
            f"(K_max={reachable!r} 1/m at R0={relaxed_radius!r} m)",
            attainable=reachable,
        )
    if target_curvature < max_curvature_for(relaxed_radius, lo):
        lo = NEUTRAL_ANGLE
    return _bisect_increasing(lambda a: max_curvature_for(relaxed_radius, a), target_curvature, lo, hi)


def length_at_bend_angle(geom: FreeGeometry, bend_angle: float) -> float:
    """
    Central arc length at which the segment sweeps ``bend_angle`` radians.

    Raises:
        InfeasibleDesignError: If the angle exceeds the sweep at full inflation
    """
    if bend_angle < 0:
        raise GeometryDomainError(f"bend_angle must be >= 0, got {bend_angle}")
    if bend_angle == 0:
        return geom.relaxed_length
    upper = max_length(geom)
    attainable = upper * max_curvature(geom)
    if bend_angle > attainable:
        raise InfeasibleDesignError(
            f"bend angle {math.degrees(bend_angle):.3f} deg exceeds the {math.degrees(attainable):.3f} deg "
            f"reached at full inflation",
            attainable=attainable,
        )
    return _bisect_increasing(lambda length: length * curvature_at_length(geom, length),
                              bend_angle, geom.relaxed_length, upper, xtol=1e-12 * upper)


def fiber_angle_band(fiber_angle: float) -> str:
    """Design band of a fiber angle: high-curvature, low-curvature or intermediate"""
    degrees = math.degrees(fiber_angle)
    if 80.0 <= degrees < 90.0:
        return "high-curvature"
    if 60.0 <= degrees <= 70.0:
        return "low-curvature"
    return "intermediate"
