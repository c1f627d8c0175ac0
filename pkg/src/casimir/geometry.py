"""Exact 2D geometry for Dirichlet-line configurations.

Lines are stored as ``{x : normal . x = offset}``. A loop scaled by ``t = sqrt(beta)``
and placed at ``x`` crosses line ``i`` iff the signed distances of its vertices span
zero, i.e. ``offset_i - t*M_i <= normal_i . x <= offset_i - t*m_i`` where ``(m_i, M_i)``
is the loop's extent along ``normal_i``. The set of such ``x`` is an intersection of
slabs, built here by Sutherland-Hodgman clipping.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import GeometryError

if TYPE_CHECKING:
    from .bridges import UnitBridge
    from .spectral import PotentialObject

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

_PARALLEL_EPS = 1e-12


@dataclass(frozen=True)
class LineObject:
    """Infinite Dirichlet line ``{x : normal . x = offset}``."""
    normal: Point
    offset: float

    def __post_init__(self) -> None:
        nx, ny = (float(c) for c in self.normal)
        if abs(math.hypot(nx, ny) - 1.0) > 1e-12:
            raise GeometryError(f"line normal must be a unit vector, got {self.normal}")
        object.__setattr__(self, "normal", (nx, ny))
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def through(cls, p: Sequence[float], q: Sequence[float]) -> "LineObject":
        """Line through two distinct points."""
        dx, dy = q[0] - p[0], q[1] - p[1]
        length = math.hypot(dx, dy)
        if length == 0.0:
            raise GeometryError("a line needs two distinct points")
        normal = (-dy / length, dx / length)
        return cls(normal, normal[0] * p[0] + normal[1] * p[1])

    def flipped(self) -> "LineObject":
        """Same line with the opposite orientation."""
        return LineObject((-self.normal[0], -self.normal[1]), -self.offset)


@dataclass(frozen=True)
class ConvexPolygon:
    """Convex polygon with counterclockwise vertices; may be empty."""
    vertices: Tuple[Point, ...] = ()

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def signed_area(self) -> float:
        """Shoelace area, positive for counterclockwise vertices."""
        verts = self.vertices
        if len(verts) < 3:
            return 0.0
        total = 0.0
        x0, y0 = verts[-1]
        for x1, y1 in verts:
            total += x0 * y1 - x1 * y0
            x0, y0 = x1, y1
        return 0.5 * total

    def area(self) -> float:
        """Shoelace area."""
        return abs(self.signed_area())

    def is_convex(self, scale: float = 1.0) -> bool:
        verts = self.vertices
        k = len(verts)
        if k < 3:
            return True
        for i in range(k):
            ax, ay = verts[i - 2]
            bx, by = verts[i - 1]
            cx, cy = verts[i]
            cross = (bx - ax) * (cy - by) - (by - ay) * (cx - bx)
            if cross < -1e-12 * scale * scale:
                return False
        return True

    def clip(self, normal: Point, bound: float, tol: float = 0.0) -> "ConvexPolygon":
        """Keep the part with ``normal . x <= bound + tol``."""
        verts = self.vertices
        if not verts:
            return self
        nx, ny = normal
        out = []
        px, py = verts[-1]
        dp = nx * px + ny * py - bound
        for qx, qy in verts:
            dq = nx * qx + ny * qy - bound
            p_in = dp <= tol
            q_in = dq <= tol
            if q_in:
                if not p_in:
                    s = dp / (dp - dq)
                    out.append((px + s * (qx - px), py + s * (qy - py)))
                out.append((qx, qy))
            elif p_in:
                s = dp / (dp - dq)
                out.append((px + s * (qx - px), py + s * (qy - py)))
            px, py, dp = qx, qy, dq
        return ConvexPolygon(tuple(out))

    def contains(self, point: Sequence[float], tol: float = 0.0) -> bool:
        """Whether ``point`` lies inside or on the boundary, up to ``tol``."""
        verts = self.vertices
        if len(verts) < 3:
            return False
        x, y = point
        ax, ay = verts[-1]
        for bx, by in verts:
            if (bx - ax) * (y - ay) - (by - ay) * (x - ax) < -tol:
                return False
            ax, ay = bx, by
        return True


@dataclass(frozen=True)
class TicTacToe:
    """Two pairs of parallel lines enclosing a ``w x h`` rectangle."""
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise GeometryError(f"tic-tac-toe needs w > 0 and h > 0, got w={self.w}, h={self.h}")

    @classmethod
    def from_ratio(cls, ratio: float, area: float = 1.0) -> "TicTacToe":
        """Rectangle with ``w/h = ratio`` and ``w*h = area``."""
        return cls(math.sqrt(area * ratio), math.sqrt(area / ratio))

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def ratio(self) -> float:
        return self.w / self.h

    def lines(self) -> Tuple[LineObject, ...]:
        return (
            LineObject((1.0, 0.0), 0.0),
            LineObject((1.0, 0.0), self.w),
            LineObject((0.0, 1.0), 0.0),
            LineObject((0.0, 1.0), self.h),
        )

    def configuration(self) -> "Configuration":
        return Configuration(self.lines(), name=f"tictactoe(w={self.w:g}, h={self.h:g})",
                             area=self.area, shape=self)


@dataclass(frozen=True)
class IsoTriangle:
    """Three lines bounding an isosceles triangle with the base on the x-axis."""
    base: float
    height: float

    def __post_init__(self) -> None:
        if not (self.base > 0 and self.height > 0):
            raise GeometryError(
                f"triangle needs base > 0 and height > 0, got base={self.base}, height={self.height}"
            )

    @classmethod
    def from_ratio(cls, ratio: float, area: float = 1.0) -> "IsoTriangle":
        """Triangle with ``base/height = ratio`` and ``base*height/2 = area``."""
        return cls(math.sqrt(2.0 * area * ratio), math.sqrt(2.0 * area / ratio))

    @property
    def area(self) -> float:
        return 0.5 * self.base * self.height

    @property
    def ratio(self) -> float:
        return self.base / self.height

    @property
    def vertices(self) -> Tuple[Point, Point, Point]:
        half = 0.5 * self.base
        return ((-half, 0.0), (half, 0.0), (0.0, self.height))

    def lines(self) -> Tuple[LineObject, ...]:
        left, right, apex = self.vertices
        return (
            LineObject.through(left, right),
            LineObject.through(right, apex),
            LineObject.through(apex, left),
        )

    def configuration(self) -> "Configuration":
        return Configuration(self.lines(), name=f"triangle(b={self.base:g}, h={self.height:g})",
                             area=self.area, shape=self)


SceneObject = Union[LineObject, "PotentialObject"]


@dataclass(frozen=True)
class Configuration:
    """Ordered set of objects, optionally tagged with its closed-form geometry."""
    objects: Tuple[Any, ...]
    name: str = "custom"
    area: float = 1.0
    shape: Optional[Union[TicTacToe, IsoTriangle]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "objects", tuple(self.objects))
        if not self.objects:
            raise GeometryError("a configuration needs at least one object")
        if not self.area > 0:
            raise GeometryError(f"enclosed area must be positive, got {self.area}")

    def __len__(self) -> int:
        return len(self.objects)

    def lines(self, operation: str = "support_area") -> Tuple[LineObject, ...]:
        if not all(isinstance(obj, LineObject) for obj in self.objects):
            raise GeometryError(f"{operation} requires Dirichlet lines")
        return self.objects  # type: ignore[return-value]


def signed_distance(line: LineObject, point: Sequence[float]) -> float:
    """``normal . point - offset``; zero iff the point lies on the line."""
    return line.normal[0] * point[0] + line.normal[1] * point[1] - line.offset


def projection_extent(points: Any, direction: Sequence[float]) -> Tuple[float, float]:
    """Smallest and largest projection of ``points`` onto ``direction``."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise GeometryError("empty path")
    proj = pts @ np.asarray(direction, dtype=float)
    return float(proj.min()), float(proj.max())


def line_arrays(lines: Sequence[LineObject]) -> Tuple[np.ndarray, np.ndarray]:
    """Normals as a ``(K, 2)`` array and offsets as a ``(K,)`` array."""
    normals = np.array([line.normal for line in lines], dtype=float)
    offsets = np.array([line.offset for line in lines], dtype=float)
    return normals, offsets


def _first_crossing_pair(normals: np.ndarray) -> Optional[Tuple[int, int]]:
    k = normals.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            if abs(normals[i, 0] * normals[j, 1] - normals[i, 1] * normals[j, 0]) > _PARALLEL_EPS:
                return i, j
    return None


def slab_intersection(
    normals: np.ndarray, lower: np.ndarray, upper: np.ndarray, tol: float = 0.0
) -> ConvexPolygon:
    """Polygon ``{x : lower_i <= normals_i . x <= upper_i for all i}``."""
    pair = _first_crossing_pair(normals)
    if pair is None:
        raise GeometryError("lines must not all be parallel")
    i, j = pair
    mat = np.array([normals[i], normals[j]])
    corners = []
    for a, b in ((lower[i], lower[j]), (upper[i], lower[j]),
                 (upper[i], upper[j]), (lower[i], upper[j])):
        x, y = np.linalg.solve(mat, np.array([a, b]))
        corners.append((float(x), float(y)))
    poly = ConvexPolygon(tuple(corners))
    if poly.signed_area() < 0:
        poly = ConvexPolygon(tuple(reversed(corners)))
    for k in range(normals.shape[0]):
        if k in pair:
            continue
        n = (float(normals[k, 0]), float(normals[k, 1]))
        poly = poly.clip(n, float(upper[k]), tol)
        poly = poly.clip((-n[0], -n[1]), -float(lower[k]), tol)
        if poly.is_empty:
            break
    return poly


def crossing_region_from_extents(
    normals: np.ndarray, offsets: np.ndarray, mins: np.ndarray, maxs: np.ndarray,
    t: float, tol: float = 0.0,
) -> ConvexPolygon:
    """Crossing region of a loop scaled by ``t`` given its unit extents ``(mins, maxs)``.

    Args:
        normals: Line normals, shape ``(K, 2)``.
        offsets: Line offsets, shape ``(K,)``.
        mins: Smallest projection of the unit loop on each normal.
        maxs: Largest projection of the unit loop on each normal.
        t: Scale factor ``sqrt(beta)``.
        tol: Slack passed to the clipper.

    Returns:
        The convex set of translations, possibly empty.
    """
    return slab_intersection(normals, offsets - t * maxs, offsets - t * mins, tol)


def bridge_extents(bridge: "UnitBridge", normals: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-normal ``(mins, maxs)`` of the bridge from ``UnitBridge.extent``."""
    mins = np.empty(normals.shape[0])
    maxs = np.empty(normals.shape[0])
    for k, n in enumerate(normals):
        mins[k], maxs[k] = bridge.extent((float(n[0]), float(n[1])))
    return mins, maxs


def crossing_region(config: Configuration, bridge: "UnitBridge", beta: float) -> ConvexPolygon:
    """Translations at which ``sqrt(beta) * bridge`` crosses every line."""
    lines = config.lines()
    if not beta > 0:
        raise GeometryError(f"beta must be positive, got {beta}")
    normals, offsets = line_arrays(lines)
    mins, maxs = bridge_extents(bridge, normals)
    return crossing_region_from_extents(normals, offsets, mins, maxs, math.sqrt(beta))


def support_area(config: Configuration, bridge: "UnitBridge", beta: float) -> float:
    """Area of translations for which the rescaled loop crosses every line.

    Args:
        config: Dirichlet-line configuration.
        bridge: Unit loop.
        beta: Proper time; the loop is scaled by ``sqrt(beta)``.

    Returns:
        The area, zero below the minimal scale.

    Raises:
        GeometryError: If the configuration holds potentials, all lines are parallel
            or ``beta`` is not positive.
    """
    return crossing_region(config, bridge, beta).area()


def shares_common_point(lines: Sequence[LineObject], tol: float = 1e-12) -> bool:
    """True if all lines pass through one point."""
    normals, offsets = line_arrays(lines)
    pair = _first_crossing_pair(normals)
    if pair is None:
        # all parallel: a common point means a single line
        ref = normals[0]
        signs = np.sign(normals @ ref)
        return bool(np.all(np.abs(signs * offsets - offsets[0]) <= tol * (1 + abs(offsets[0]))))
    i, j = pair
    point = np.linalg.solve(np.array([normals[i], normals[j]]), offsets[[i, j]])
    scale = 1.0 + float(np.abs(point).max())
    return bool(np.all(np.abs(normals @ point - offsets) <= tol * scale))


def _is_feasible(
    normals: np.ndarray, offsets: np.ndarray, mins: np.ndarray, maxs: np.ndarray,
    beta: float, tol: float,
) -> bool:
    region = crossing_region_from_extents(normals, offsets, mins, maxs, math.sqrt(beta), tol)
    return not region.is_empty


def minimal_scale_from_extents(
    normals: np.ndarray, offsets: np.ndarray, mins: np.ndarray, maxs: np.ndarray,
    rtol: float = 1e-10,
) -> float:
    """Bisected minimal scale from precomputed unit extents; see ``minimal_scale``."""
    tol = 1e-12 * (1.0 + float(np.abs(offsets).max()))
    lo, hi = 0.0, 1.0
    grow = 0
    while not _is_feasible(normals, offsets, mins, maxs, hi, tol):
        lo, hi = hi, 2.0 * hi
        grow += 1
        if grow > 400:
            raise GeometryError("minimal scale bracket did not close")
    steps = 0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if _is_feasible(normals, offsets, mins, maxs, mid, tol):
            hi = mid
        else:
            lo = mid
        steps += 1
    logger.debug("minimal_scale: beta0=%.12g after %d bisection steps", hi, steps)
    return hi


def minimal_scale(config: Configuration, bridge: "UnitBridge") -> float:
    """Smallest ``beta`` at which the rescaled loop can cross every line at once.

    Args:
        config: Dirichlet-line configuration.
        bridge: Unit loop.

    Returns:
        ``beta_0``, or 0.0 for a single line or lines through one point.

    Raises:
        GeometryError: If all lines are parallel or the loop has no extent along a normal.
    """
    lines = config.lines("minimal_scale")
    if len(lines) == 1:
        return 0.0
    normals, offsets = line_arrays(lines)
    if _first_crossing_pair(normals) is None:
        raise GeometryError("lines must not all be parallel")
    mins, maxs = bridge_extents(bridge, normals)
    if np.any(maxs - mins <= 0.0):
        raise GeometryError("degenerate loop")
    if shares_common_point(lines):
        return 0.0
    return minimal_scale_from_extents(normals, offsets, mins, maxs)
