"""Feynman-Kac estimators at fixed proper time ``beta``.

Objects are disks carrying a positive potential (or ``DIRICHLET`` for infinite
strength). A loop survives object ``k`` with probability ``exp(-V_k * occupation_k)``;
potentials add, so ``p_r`` for a subset ``r`` is the product of the per-object
survival probabilities. The irreducible spectral function of a set ``s`` is
``(-1)^|s|`` times the integrated probability that a loop is killed by every object.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .bridges import EnsembleSpec, UnitBridge, map_ensemble, loop_stream
from .errors import SpectralError
from .stats import jackknife

logger = logging.getLogger(__name__)

DIRICHLET = math.inf
MAX_SUBSET_SIZE = 16
BOX_INFLATION = 5.0
_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class PotentialObject:
    """Disk of constant potential ``strength``; ``DIRICHLET`` kills on contact."""
    center: Tuple[float, float]
    radius: float
    strength: float = DIRICHLET

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not self.radius > 0:
            raise SpectralError(f"disk radius must be positive, got {self.radius}")
        if not self.strength > 0:
            raise SpectralError("potentials must be positive")

    @property
    def is_dirichlet(self) -> bool:
        return math.isinf(self.strength)

    def translated(self, dx: float, dy: float = 0.0) -> "PotentialObject":
        return replace(self, center=(self.center[0] + dx, self.center[1] + dy))

    def bounds(self) -> Tuple[float, float, float, float]:
        cx, cy = self.center
        return cx - self.radius, cy - self.radius, cx + self.radius, cy + self.radius


@dataclass(frozen=True)
class SamplingBox:
    """Axis-aligned rectangle for uniform position sampling."""
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise SpectralError(f"empty sampling box {self}")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def place(self, unit: np.ndarray) -> np.ndarray:
        """Map points of the unit square into the box."""
        lo = np.array([self.x_min, self.y_min])
        size = np.array([self.x_max - self.x_min, self.y_max - self.y_min])
        return lo + unit * size


@dataclass(frozen=True)
class SpectralEstimate:
    """Irreducible spectral function at fixed ``beta`` with its statistical error."""
    value: float
    std_error: float
    beta: float
    samples: int = 0

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise SpectralError(f"std_error must be non-negative, got {self.std_error}")


def inclusion_exclusion_terms(s_size: int) -> List[Tuple[int, int]]:
    """All subsets ``r`` of ``s`` as bit masks with sign ``(-1)^|s| (-1)^|r|``."""
    if s_size > MAX_SUBSET_SIZE:
        raise SpectralError("subset explosion")
    if s_size < 1:
        raise SpectralError(f"need at least one object, got {s_size}")
    base = -1 if s_size % 2 else 1
    return [(mask, base * (-1 if bin(mask).count("1") % 2 else 1)) for mask in range(1 << s_size)]


def _subset_parity(size: int) -> np.ndarray:
    masks = np.arange(1 << size)
    parity = np.zeros(masks.shape, dtype=int)
    for bit in range(size):
        parity ^= (masks >> bit) & 1
    return 1 - 2 * parity


def subset_alternating_sum(values: np.ndarray, size: int) -> np.ndarray:
    """``sum_r (-1)^|r| values[r]`` over bit masks ``r``; leading axis indexes masks."""
    vals = np.asarray(values, dtype=float)
    if vals.shape[0] != 1 << size:
        raise SpectralError(f"expected {1 << size} subset values, got {vals.shape[0]}")
    signs = _subset_parity(size).reshape((-1,) + (1,) * (vals.ndim - 1))
    return np.sum(signs * vals, axis=0)


def _subset_products(survival: np.ndarray) -> np.ndarray:
    """``p_r = prod_{k in r} p_k`` for all masks; ``survival`` has shape ``(P, K)``."""
    n_paths, k = survival.shape
    products = np.empty((1 << k, n_paths))
    products[0] = 1.0
    for mask in range(1, 1 << k):
        low = (mask & -mask).bit_length() - 1
        products[mask] = products[mask & (mask - 1)] * survival[:, low]
    return products


def _segment_distances(paths: np.ndarray, center: np.ndarray) -> np.ndarray:
    a = paths[:, :-1, :] - center
    b = paths[:, 1:, :] - center
    ab = b - a
    denom = np.einsum("psi,psi->ps", ab, ab)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, -np.einsum("psi,psi->ps", a, ab) / denom, 0.0)
    s = np.clip(s, 0.0, 1.0)
    closest = a + s[..., None] * ab
    return np.sqrt(np.einsum("psi,psi->ps", closest, closest))


def _touches(paths: np.ndarray, obj: PotentialObject) -> np.ndarray:
    """Whether each path meets the closed disk at a vertex or along a segment."""
    dist = _segment_distances(paths, np.asarray(obj.center))
    return np.any(dist <= obj.radius, axis=1)


def _occupation_times(paths: np.ndarray, obj: PotentialObject, dt: float) -> np.ndarray:
    """Trapezoidal time spent inside the disk; straddling segments get one midpoint."""
    center = np.asarray(obj.center)
    r2 = obj.radius * obj.radius
    inside = (np.sum((paths - center) ** 2, axis=-1) <= r2).astype(float)
    left, right = inside[:, :-1], inside[:, 1:]
    mids = 0.5 * (paths[:, :-1, :] + paths[:, 1:, :])
    mid_inside = (np.sum((mids - center) ** 2, axis=-1) <= r2).astype(float)
    straddle = left != right
    segment = np.where(straddle, 0.25 * (left + 2.0 * mid_inside + right), 0.5 * (left + right))
    return dt * segment.sum(axis=1)


def _survival_matrix(paths: np.ndarray, dt: float, objects: Sequence[PotentialObject]) -> np.ndarray:
    """Per-object survival probabilities, shape ``(P, K)``."""
    out = np.empty((paths.shape[0], len(objects)))
    for k, obj in enumerate(objects):
        if obj.is_dirichlet:
            out[:, k] = np.where(_touches(paths, obj), 0.0, 1.0)
        else:
            out[:, k] = np.exp(-obj.strength * _occupation_times(paths, obj, dt))
    return out


def _as_paths(path: np.ndarray) -> np.ndarray:
    arr = np.asarray(path, dtype=float)
    if arr.size == 0:
        raise SpectralError("empty path")
    return arr.reshape(1, -1, 2)


def survival_probability(path: np.ndarray, dt: float, objects: Iterable[PotentialObject]) -> float:
    """``exp(-int V)`` for soft disks; 0 if the path meets any Dirichlet disk."""
    objs = list(objects)
    if not dt > 0:
        raise SpectralError(f"dt must be positive, got {dt}")
    paths = _as_paths(path)
    if not objs:
        return 1.0
    return float(np.prod(_survival_matrix(paths, dt, objs)[0]))


def _clamp_probabilities(values: np.ndarray) -> np.ndarray:
    if np.any(values < -_CLAMP_TOL) or np.any(values > 1.0 + _CLAMP_TOL):
        raise SpectralError("inclusion-exclusion inconsistency")
    return np.clip(values, 0.0, 1.0)


def _kill_all(paths: np.ndarray, dt: float, objects: Sequence[PotentialObject]) -> np.ndarray:
    products = _subset_products(_survival_matrix(paths, dt, objects))
    return _clamp_probabilities(subset_alternating_sum(products, len(objects)))


def kill_all_probability(path: np.ndarray, dt: float, objects: Sequence[PotentialObject]) -> float:
    """``sum_{r subset s} (-1)^|r| p_r``: probability of being killed by every object."""
    objs = list(objects)
    if not objs:
        raise SpectralError("need at least one object")
    if not dt > 0:
        raise SpectralError(f"dt must be positive, got {dt}")
    if len(objs) > MAX_SUBSET_SIZE:
        raise SpectralError("subset explosion")
    return float(_kill_all(_as_paths(path), dt, objs)[0])


def cancellation_check(
    objects: Sequence[PotentialObject], subset_mask: int, path: np.ndarray, dt: Optional[float] = None
) -> float:
    """Contribution of one path to the irreducible spectral function of all ``objects``.

    The path is expected to meet exactly the objects in ``subset_mask``, a proper
    subset; such a path contributes nothing.

    Args:
        objects: The full set of objects.
        subset_mask: Bit mask of the objects the path touches.
        path: Vertices of one loop, shape ``(N+1, 2)``.
        dt: Proper time per segment; ``None`` means a unit loop, ``1/N``.

    Returns:
        The inclusion-exclusion sum for this path, zero up to rounding.
    """
    objs = list(objects)
    size = len(objs)
    full = (1 << size) - 1
    if not 0 <= subset_mask < full:
        raise SpectralError(f"subset mask {subset_mask} is not a proper subset of {size} objects")
    paths = _as_paths(path)
    if dt is None:
        dt = 1.0 / (paths.shape[1] - 1)
    elif not dt > 0:
        raise SpectralError(f"dt must be positive, got {dt}")
    survival = _survival_matrix(paths, dt, objs)
    touched = sum(1 << k for k in range(size) if survival[0, k] < 1.0)
    if touched != subset_mask:
        logger.warning("cancellation_check: path touches mask %d, expected %d", touched, subset_mask)
    terms = inclusion_exclusion_terms(size)
    products = _subset_products(survival)[:, 0]
    return float(sum(sign * products[mask] for mask, sign in terms))


def pair_gap(obj1: PotentialObject, obj2: PotentialObject) -> float:
    """Edge-to-edge distance between two disks."""
    dist = math.hypot(obj2.center[0] - obj1.center[0], obj2.center[1] - obj1.center[1])
    return dist - obj1.radius - obj2.radius


def default_sampling_box(objects: Sequence[PotentialObject], beta: float) -> SamplingBox:
    """Objects' bounding box inflated by ``5 sqrt(beta)`` plus a 1% margin."""
    margin = 1.01 * BOX_INFLATION * math.sqrt(beta)
    bounds = np.array([obj.bounds() for obj in objects])
    return SamplingBox(
        float(bounds[:, 0].min() - margin), float(bounds[:, 1].min() - margin),
        float(bounds[:, 2].max() + margin), float(bounds[:, 3].max() + margin),
    )


def _check_box(objects: Sequence[PotentialObject], beta: float, box: SamplingBox) -> None:
    margin = BOX_INFLATION * math.sqrt(beta)
    for obj in objects:
        x0, y0, x1, y1 = obj.bounds()
        if (x0 - margin < box.x_min or y0 - margin < box.y_min
                or x1 + margin > box.x_max or y1 + margin > box.y_max):
            raise SpectralError("sampling box too small")


def _sampled_kill_fraction(
    objects: Sequence[PotentialObject], beta: float, spec: EnsembleSpec,
    box: SamplingBox, positions_per_loop: int, threads: int,
) -> Tuple[float, float]:
    scale = math.sqrt(beta)
    dt = beta / spec.points_per_loop

    def block(index: int, family: List[UnitBridge]) -> float:
        # positions come after the bridge on the loop's own substream
        stream = loop_stream(spec.seed, index)
        stream.standard_normal((spec.points_per_loop, 2))
        positions = box.place(stream.random((positions_per_loop, 2)))
        total = 0.0
        for bridge in family:
            paths = positions[:, None, :] + scale * bridge.points[None, :, :]
            total += float(_kill_all(paths, dt, objects).sum())
        return total / (len(family) * positions_per_loop)

    blocks = np.array(map_ensemble(spec, block, threads))
    mean, err = jackknife(blocks)
    return float(mean), float(err)


def estimate_irreducible_spectral_density(
    objects: Sequence[PotentialObject],
    beta: float,
    spec: EnsembleSpec,
    sampling_box: SamplingBox,
    positions_per_loop: int = 16,
    threads: int = 1,
) -> SpectralEstimate:
    """Monte Carlo ``(-1)^|s| int dx P[x; beta] / (2 pi beta)`` over the sampling box.

    Args:
        objects: Disks of the set ``s``.
        beta: Proper time.
        spec: Loop ensemble.
        sampling_box: Box of loop positions; must clear every object by ``5 sqrt(beta)``.
        positions_per_loop: Uniform positions drawn per parent loop.
        threads: Worker threads.

    Returns:
        The estimate with its jackknife error over parent loops.

    Raises:
        SpectralError: On an empty or oversized set, a bad ``beta`` or a small box.
    """
    objs = list(objects)
    if not beta > 0:
        raise SpectralError(f"beta must be positive, got {beta}")
    if not objs:
        raise SpectralError("need at least one object")
    if len(objs) > MAX_SUBSET_SIZE:
        raise SpectralError("subset explosion")
    if positions_per_loop < 1:
        raise SpectralError(f"positions_per_loop must be >= 1, got {positions_per_loop}")
    _check_box(objs, beta, sampling_box)
    mean, err = _sampled_kill_fraction(objs, beta, spec, sampling_box, positions_per_loop, threads)
    sign = -1.0 if len(objs) % 2 else 1.0
    norm = sampling_box.area / (2.0 * math.pi * beta)
    estimate = SpectralEstimate(
        value=sign * norm * mean,
        std_error=norm * err,
        beta=beta,
        samples=spec.loop_count * spec.family_size * positions_per_loop,
    )
    logger.info(
        "Spectral estimate: objects=%d, beta=%g, value=%.6g +/- %.2g",
        len(objs), beta, estimate.value, estimate.std_error,
    )
    return estimate


def place_at_gap(obj1: PotentialObject, obj2: PotentialObject, gap: float) -> PotentialObject:
    """Translate ``obj2`` along x so that the disks' x-extents are ``gap`` apart."""
    if not gap > 0:
        raise SpectralError("objects must be separable by a plane")
    target_x = obj1.center[0] + obj1.radius + gap + obj2.radius
    return obj2.translated(target_x - obj2.center[0])


def monotonicity_curve(
    obj1: PotentialObject,
    obj2: PotentialObject,
    separations: Sequence[float],
    beta: float,
    spec: EnsembleSpec,
    positions_per_loop: int = 16,
    threads: int = 1,
) -> List[SpectralEstimate]:
    """Two-body spectral function as ``obj2`` moves away along x.

    Every separation reuses the same loops and the same sampling box, so the
    estimates share their random numbers.
    """
    gaps = [float(g) for g in separations]
    if not gaps:
        raise SpectralError("need at least one separation")
    if any(b <= a for a, b in zip(gaps, gaps[1:])):
        raise SpectralError("separations must be strictly increasing")
    placed = [place_at_gap(obj1, obj2, gap) for gap in gaps]
    box = default_sampling_box([obj1, placed[0], placed[-1]], beta)
    curve = []
    for gap, moved in zip(gaps, placed):
        estimate = estimate_irreducible_spectral_density(
            [obj1, moved], beta, spec, box, positions_per_loop, threads
        )
        logger.info("monotonicity: gap=%g phi=%.6g +/- %.2g", gap, estimate.value, estimate.std_error)
        curve.append(estimate)
    return curve
