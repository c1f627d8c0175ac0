"""Discretized standard unit Brownian bridges and seeded loop ensembles."""

from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple, TypeVar

import numpy as np

from .errors import BridgeError
from .geometry import projection_extent

logger = logging.getLogger(__name__)

MAX_ROTATIONS = 6

T = TypeVar("T")


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True, eq=False)
class UnitBridge:
    """Unit-time 2D Brownian bridge pinned at the origin, as ``N + 1`` vertices."""
    points: np.ndarray
    _extents: Dict[Tuple[float, float], Tuple[float, float]] = field(
        default_factory=dict, init=False, repr=False
    )

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise BridgeError(f"bridge points must have shape (N+1, 2), got {pts.shape}")
        if not _is_power_of_two(pts.shape[0] - 1):
            raise BridgeError(f"N must be a power of two >= 2, got {pts.shape[0] - 1}")
        if np.any(pts[0] != 0.0) or np.any(pts[-1] != 0.0):
            raise BridgeError("bridge must start and end at the origin")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n_segments(self) -> int:
        return self.points.shape[0] - 1

    def extent(self, direction: Tuple[float, float]) -> Tuple[float, float]:
        """Cached ``(min, max)`` projection onto ``direction``."""
        key = (float(direction[0]), float(direction[1]))
        cached = self._extents.get(key)
        if cached is None:
            cached = projection_extent(self.points, key)
            self._extents[key] = cached
        return cached

    def extents(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Uncached extents along each row of ``directions``."""
        proj = self.points @ np.asarray(directions, dtype=float).T
        return proj.min(axis=0), proj.max(axis=0)

    def coarsened(self, factor: int) -> "UnitBridge":
        """Every ``factor``-th vertex: the same loop seen with ``N / factor`` segments."""
        if factor < 1 or self.n_segments % factor or self.n_segments // factor < 2:
            raise BridgeError(f"cannot coarsen N={self.n_segments} by {factor}")
        return UnitBridge(self.points[::factor])

    def rotated(self, angle: float) -> "UnitBridge":
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, s], [-s, c]])
        return UnitBridge(self.points @ rot)


@dataclass(frozen=True)
class EnsembleSpec:
    """Loop ensemble: ``loop_count`` parents, each with ``rotations`` rotated duplicates."""
    seed: int
    loop_count: int = 1000
    points_per_loop: int = 1024
    rotations: int = MAX_ROTATIONS

    def __post_init__(self) -> None:
        if self.loop_count < 1:
            raise BridgeError(f"loop_count must be >= 1, got {self.loop_count}")
        if not _is_power_of_two(self.points_per_loop):
            raise BridgeError(f"points_per_loop must be a power of two >= 2, got {self.points_per_loop}")
        if not 0 <= self.rotations <= MAX_ROTATIONS:
            raise BridgeError("rotations must be in [0,6]")

    @property
    def family_size(self) -> int:
        return self.rotations + 1


def loop_stream(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 substream for loop ``index``; order of generation is irrelevant."""
    entropy = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=(index,))))


def generate_unit_bridge(stream: np.random.Generator, n: int) -> UnitBridge:
    """``x_k = W_k - (k/N) W_N`` for a Gaussian random walk with per-step variance ``1/N``.

    Args:
        stream: Generator for this loop, usually from ``loop_stream``.
        n: Number of segments, a power of two.

    Returns:
        A bridge with ``n + 1`` points pinned at the origin.

    Raises:
        BridgeError: If ``n`` is not a power of two.
    """
    if not _is_power_of_two(n):
        raise BridgeError(f"N must be a power of two >= 2, got {n}")
    steps = stream.standard_normal((n, 2)) * math.sqrt(1.0 / n)
    walk = np.zeros((n + 1, 2))
    np.cumsum(steps, axis=0, out=walk[1:])
    tau = np.arange(n + 1, dtype=float) / n
    points = walk - tau[:, None] * walk[-1]
    points[0] = 0.0
    points[-1] = 0.0
    return UnitBridge(points)


def rescale_translate(bridge: UnitBridge, beta: float, x: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    """Loop of proper time ``beta`` based at ``x``: ``x + sqrt(beta) * points``."""
    if not beta > 0:
        raise BridgeError(f"beta must be positive, got {beta}")
    return np.asarray(x, dtype=float) + math.sqrt(beta) * bridge.points


def rotated_duplicates(bridge: UnitBridge, k: int) -> List[UnitBridge]:
    """``k`` copies rotated by ``2*pi*j/(k+1)``, ``j = 1..k``."""
    if not 0 <= k <= MAX_ROTATIONS:
        raise BridgeError("rotations must be in [0,6]")
    return [bridge.rotated(2.0 * math.pi * j / (k + 1)) for j in range(1, k + 1)]


def loop_family(spec: EnsembleSpec, index: int) -> List[UnitBridge]:
    """Parent loop ``index`` followed by its rotated duplicates."""
    parent = generate_unit_bridge(loop_stream(spec.seed, index), spec.points_per_loop)
    return [parent] + rotated_duplicates(parent, spec.rotations)


def map_ensemble(
    spec: EnsembleSpec,
    fn: Callable[[int, List[UnitBridge]], T],
    threads: int = 1,
) -> List[T]:
    """Apply ``fn(index, family)`` to every parent loop; results are in index order.

    Args:
        spec: Ensemble size, seed and rotations.
        fn: Called with the parent index and the parent followed by its rotated copies.
        threads: Worker threads; results do not depend on it.

    Returns:
        One result per parent loop.
    """

    def task(index: int) -> T:
        return fn(index, loop_family(spec, index))

    indices = range(spec.loop_count)
    logger.info(
        "Evaluating ensemble: loops=%d, N=%d, rotations=%d, seed=%d, threads=%d",
        spec.loop_count, spec.points_per_loop, spec.rotations, spec.seed, threads,
    )
    if threads <= 1:
        return [task(i) for i in indices]
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(task, indices))
