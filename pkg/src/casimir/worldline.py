"""Per-loop weights and Monte Carlo estimates of irreducible line energies.

The energy of ``N`` Dirichlet lines is ``-(-1)^N / (2 (2 pi)^{3/2})`` times the
ensemble mean of the per-loop weight

    w(loop) = int_{beta_0}^inf dbeta beta^{-5/2} A(sqrt(beta) * loop),

where ``A`` is the support area (see ``geometry.support_area``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Sequence, Tuple, Type, Union

import numpy as np
from scipy.integrate import simpson

from .bridges import EnsembleSpec, UnitBridge, map_ensemble
from .errors import BridgeError, DivergentWeightError, GeometryError
from .geometry import (
    Configuration,
    IsoTriangle,
    LineObject,
    TicTacToe,
    bridge_extents,
    crossing_region_from_extents,
    line_arrays,
    minimal_scale,
    minimal_scale_from_extents,
    shares_common_point,
)
from .spectral import SpectralEstimate
from .stats import jackknife

logger = logging.getLogger(__name__)

ENERGY_PREFACTOR = 1.0 / (2.0 * (2.0 * math.pi) ** 1.5)
QUADRATURE_PANELS = 512
FLAG_RATIO_MIN = 0.05
FLAG_RATIO_MAX = 50.0
COARSENING = 4

_AXES = np.array([[1.0, 0.0], [0.0, 1.0]])
_SUBSETS = np.array([[(mask >> i) & 1 for i in range(3)] for mask in range(8)], dtype=float)
_SUBSET_SIGNS = np.array([(-1.0) ** (bin(mask).count("1") + 1) for mask in range(8)])

METHODS = ("exact", "closed-form", "numeric")


@dataclass(frozen=True)
class EnergyEstimate:
    """Irreducible energy (units of hbar c / length) with its jackknife error."""
    value: float
    std_error: float
    loop_count: int
    epsilon: float
    flagged: bool = False

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise GeometryError(f"std_error must be non-negative, got {self.std_error}")
        if self.loop_count < 1:
            raise GeometryError(f"loop_count must be >= 1, got {self.loop_count}")


def _cross(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _tictactoe_weights(dx: float, dy: float, w: np.ndarray, h: np.ndarray) -> np.ndarray:
    root = np.sqrt(w * h)
    s1 = dx * np.sqrt(h / w)
    s2 = dy * np.sqrt(w / h)
    s_min = np.minimum(s1, s2)
    s_max = np.maximum(s1, s2)
    return s_min * s_min * (s_max - s_min / 3.0) / root


def _axis_spans(bridge: UnitBridge) -> Tuple[float, float]:
    mins, maxs = bridge.extents(_AXES)
    spans = maxs - mins
    if np.any(spans <= 0.0):
        raise GeometryError("degenerate loop")
    return float(spans[0]), float(spans[1])


def weight_tictactoe(bridge: UnitBridge, w: float, h: float) -> float:
    """``s_min^2 (s_max - s_min/3) / sqrt(w h)`` with ``s = {dx sqrt(h/w), dy sqrt(w/h)}``."""
    if not (w > 0 and h > 0):
        raise GeometryError(f"tic-tac-toe needs w > 0 and h > 0, got w={w}, h={h}")
    dx, dy = _axis_spans(bridge)
    return float(_tictactoe_weights(dx, dy, np.asarray(w, dtype=float), np.asarray(h, dtype=float)))


def weight_triangle(bridge: UnitBridge, tri: IsoTriangle) -> float:
    """Minimal-scale closed form ``2 A / (3 beta_0^{3/2})``.

    Exact when the loop's hull is a scaled copy of the triangle and an upper
    bound otherwise; ``weight_three_lines`` gives the exact value.
    """
    beta0 = minimal_scale(tri.configuration(), bridge)
    return 2.0 * tri.area / (3.0 * beta0 ** 1.5)


@dataclass(frozen=True)
class _ThreeLineFrame:
    """Orientation data of three lines, fixed once per geometry.

    Lines are oriented so that ``sum alpha_i n_i = 0`` with ``alpha_i > 0`` and
    ``C = -sum alpha_i o_i > 0``.
    """
    normals: np.ndarray
    signs: np.ndarray
    alpha: np.ndarray
    c: float
    jacobian: float

    @classmethod
    def from_lines(cls, lines: Sequence[LineObject]) -> "_ThreeLineFrame":
        if len(lines) != 3:
            raise GeometryError(f"three-line weight needs exactly 3 lines, got {len(lines)}")
        normals, offsets = line_arrays(lines)
        alpha = np.array([_cross(normals[i - 2], normals[i - 1]) for i in range(3)])
        if np.any(np.abs(alpha) <= 1e-12):
            raise GeometryError("three-line weight needs pairwise non-parallel lines")
        signs = np.sign(alpha)
        alpha = np.abs(alpha)
        c = -float(alpha @ (signs * offsets))
        if abs(c) <= 1e-12 * float(alpha @ np.abs(offsets)):
            raise DivergentWeightError()
        if c < 0:
            signs, c = -signs, -c
        return cls(normals, signs, alpha, c, float(alpha.prod()))

    def weight(self, mins: np.ndarray, maxs: np.ndarray) -> float:
        """Exact weight from the loop's extents along the original normals."""
        lo = np.where(self.signs > 0, mins, -maxs)
        hi = np.where(self.signs > 0, maxs, -mins)
        if np.any(hi - lo <= 0.0):
            raise GeometryError("degenerate loop")
        # d_S = sum_{i in S} alpha_i m_i + sum_{i not in S} alpha_i M_i
        d = _SUBSETS @ (self.alpha * lo) + (1.0 - _SUBSETS) @ (self.alpha * hi)
        active = d < 0.0
        total = float(np.sum(_SUBSET_SIGNS[active] * (-d[active]) ** 3))
        return total / (3.0 * self.c * self.jacobian)


def _pairwise_transversal(lines: Sequence[LineObject]) -> bool:
    normals, _ = line_arrays(lines)
    return all(abs(_cross(normals[i - 2], normals[i - 1])) > 1e-12 for i in range(len(normals)))


def weight_three_lines(bridge: UnitBridge, config: Configuration) -> float:
    """Exact weight for three pairwise non-parallel lines with no common point."""
    frame = _ThreeLineFrame.from_lines(config.lines("weight_three_lines"))
    mins, maxs = bridge.extents(frame.normals)
    return frame.weight(mins, maxs)


def weight_numeric(bridge: UnitBridge, config: Configuration, panels: int = QUADRATURE_PANELS) -> float:
    """Quadrature of ``beta^{-5/2} A(sqrt(beta) loop)`` over ``[beta_0, inf)``.

    With ``u = t_0 / t`` the weight is ``(2 / t_0^3) int_0^1 u^2 A(t_0/u) du``. The
    integrand is piecewise quadratic and tends to ``t_0^2`` times the asymptotic
    area coefficient, so composite Simpson on ``[0, 1]`` includes the tail.
    """
    lines = config.lines("weight_numeric")
    if panels < 2 or panels % 2:
        raise GeometryError(f"panels must be a positive even number, got {panels}")
    if len(lines) < 2 or shares_common_point(lines):
        raise DivergentWeightError()
    normals, offsets = line_arrays(lines)
    mins, maxs = bridge_extents(bridge, normals)
    if np.any(maxs - mins <= 0.0):
        raise GeometryError("degenerate loop")
    beta0 = minimal_scale_from_extents(normals, offsets, mins, maxs)
    t0 = math.sqrt(beta0)

    u = np.linspace(0.0, 1.0, panels + 1)
    values = np.empty_like(u)
    asymptotic = crossing_region_from_extents(normals, np.zeros_like(offsets), mins, maxs, 1.0)
    values[0] = t0 * t0 * asymptotic.area()
    for k in range(1, panels + 1):
        region = crossing_region_from_extents(normals, offsets, mins, maxs, t0 / u[k])
        values[k] = u[k] * u[k] * region.area()
    integral = float(simpson(values, x=u))
    logger.debug("weight_numeric: beta0=%.12g, integral=%.12g", beta0, integral)
    return 2.0 * integral / t0 ** 3


def select_weight(config: Configuration, method: str = "exact") -> Callable[[UnitBridge], float]:
    """Per-loop weight function for ``config``.

    ``exact`` uses the tic-tac-toe closed form, the three-line formula or
    quadrature; ``closed-form`` uses the minimal-scale triangle formula where it
    differs; ``numeric`` always integrates.
    """
    if method not in METHODS:
        raise GeometryError(f"unknown weight method {method!r}; expected one of {METHODS}")
    lines = config.lines("estimate_energy")
    shape = config.shape
    if method == "numeric":
        return lambda bridge: weight_numeric(bridge, config)
    if isinstance(shape, TicTacToe):
        return lambda bridge: weight_tictactoe(bridge, shape.w, shape.h)
    if method == "closed-form":
        if not isinstance(shape, IsoTriangle):
            raise GeometryError("closed-form weight needs a tic-tac-toe or an isosceles triangle")
        return lambda bridge: weight_triangle(bridge, shape)
    if len(lines) == 3 and _pairwise_transversal(lines):
        frame = _ThreeLineFrame.from_lines(lines)
        return lambda bridge: frame.weight(*bridge.extents(frame.normals))
    return lambda bridge: weight_numeric(bridge, config)


def extrapolated(per_loop: Callable[[UnitBridge], Any]) -> Callable[[UnitBridge], Any]:
    """Per-loop quantity with its leading ``1/sqrt(N)`` discretization bias removed.

    Extents seen at the vertices fall short of the continuous loop's by a term
    proportional to ``1/sqrt(N)``. Every fourth vertex of the same loop is itself a
    bridge with ``N/4`` segments, so ``2 f(N) - f(N/4)`` cancels that term.
    """

    def combined(bridge: UnitBridge) -> Any:
        return 2.0 * per_loop(bridge) - per_loop(bridge.coarsened(COARSENING))

    return combined


def _per_loop(
    per_loop: Callable[[UnitBridge], Any], spec: EnsembleSpec, extrapolate: bool
) -> Callable[[UnitBridge], Any]:
    if not extrapolate:
        return per_loop
    if spec.points_per_loop < 2 * COARSENING:
        raise BridgeError(f"extrapolation needs at least {2 * COARSENING} points per loop")
    return extrapolated(per_loop)


def _check_sign(estimate: EnergyEstimate, n_objects: int, label: str) -> None:
    expected = -((-1.0) ** n_objects)
    if abs(estimate.value) > 3.0 * estimate.std_error and estimate.value * expected < 0:
        logger.warning(
            "%s: energy %.6g +/- %.2g has the wrong sign for %d objects",
            label, estimate.value, estimate.std_error, n_objects,
        )


def _energy(mean: float, err: float, n_objects: int, area: float, loop_count: int,
            flagged: bool = False) -> EnergyEstimate:
    prefactor = -((-1.0) ** n_objects) * ENERGY_PREFACTOR
    value = prefactor * mean
    return EnergyEstimate(
        value=value,
        std_error=abs(prefactor) * err,
        loop_count=loop_count,
        epsilon=value * math.sqrt(area),
        flagged=flagged,
    )


def estimate_energy(
    config: Configuration,
    spec: EnsembleSpec,
    threads: int = 1,
    method: str = "exact",
    extrapolate: bool = True,
) -> EnergyEstimate:
    """Monte Carlo irreducible energy of a line configuration.

    Rotated duplicates are averaged into their parent loop's block before the
    jackknife, so the error counts parents as the independent samples. With
    ``extrapolate`` each loop's weight is corrected for vertex-only crossing
    detection (see ``extrapolated``).

    Args:
        config: Dirichlet lines with no common point.
        spec: Loop ensemble.
        threads: Worker threads; results do not depend on it.
        method: ``exact``, ``closed-form`` or ``numeric``.
        extrapolate: Apply the per-loop discretization correction.

    Returns:
        The energy, its jackknife error and the area-scaled epsilon.

    Raises:
        DivergentWeightError: If the lines share a common point.
    """
    lines = config.lines("estimate_energy")
    if len(lines) < 2 or shares_common_point(lines):
        raise DivergentWeightError()
    weight = _per_loop(select_weight(config, method), spec, extrapolate)

    def block(index: int, family: List[UnitBridge]) -> float:
        return float(np.mean([weight(bridge) for bridge in family]))

    blocks = np.array(map_ensemble(spec, block, threads))
    mean, err = jackknife(blocks)
    estimate = _energy(float(mean), float(err), len(lines), config.area, spec.loop_count)
    _check_sign(estimate, len(lines), config.name)
    logger.info(
        "Energy of %s (%s): value=%.8g +/- %.2g, epsilon=%.8g",
        config.name, method, estimate.value, estimate.std_error, estimate.epsilon,
    )
    return estimate


Family = Union[Type[TicTacToe], Type[IsoTriangle]]


def _is_degenerate_ratio(family: Family, ratio: float) -> bool:
    return family is IsoTriangle and not FLAG_RATIO_MIN <= ratio <= FLAG_RATIO_MAX


def _sweep_weights(
    family: Family, ratios: Sequence[float], area: float
) -> Tuple[Callable[[UnitBridge], np.ndarray], int]:
    """Per-loop weights at every ratio at once, and the number of lines."""
    if family is TicTacToe:
        rects = [TicTacToe.from_ratio(r, area) for r in ratios]
        w = np.array([rect.w for rect in rects])
        h = np.array([rect.h for rect in rects])
        return lambda bridge: _tictactoe_weights(*_axis_spans(bridge), w, h), 4

    if family is IsoTriangle:
        frames = [_ThreeLineFrame.from_lines(IsoTriangle.from_ratio(r, area).lines()) for r in ratios]
        all_normals = np.vstack([frame.normals for frame in frames])

        def weights(bridge: UnitBridge) -> np.ndarray:
            mins, maxs = bridge.extents(all_normals)
            return np.array([
                frame.weight(mins[3 * k:3 * k + 3], maxs[3 * k:3 * k + 3])
                for k, frame in enumerate(frames)
            ])

        return weights, 3

    raise GeometryError(f"sweeps support TicTacToe and IsoTriangle, got {family!r}")


def sweep(
    family: Family,
    ratios: Sequence[float],
    spec: EnsembleSpec,
    area: float = 1.0,
    threads: int = 1,
    extrapolate: bool = True,
) -> List[Tuple[float, EnergyEstimate]]:
    """Energies over aspect ratios at fixed enclosed ``area``.

    Every ratio is evaluated on the same loops, so neighbouring points share
    their statistical fluctuations and the curve is smooth.
    """
    values = [float(r) for r in ratios]
    if not values:
        raise GeometryError("sweep needs at least one ratio")
    if any(not r > 0 for r in values):
        raise GeometryError(f"ratios must be positive, got {values}")
    if not area > 0:
        raise GeometryError(f"enclosed area must be positive, got {area}")
    per_loop, n_objects = _sweep_weights(family, values, area)
    weights = _per_loop(per_loop, spec, extrapolate)

    def block(index: int, loops: List[UnitBridge]) -> np.ndarray:
        return np.mean([weights(bridge) for bridge in loops], axis=0)

    logger.info("Sweep over %d ratios of %s at area %g", len(values), family.__name__, area)
    blocks = np.array(map_ensemble(spec, block, threads))
    means, errs = jackknife(blocks)
    results = []
    for k, ratio in enumerate(values):
        flagged = _is_degenerate_ratio(family, ratio)
        if flagged:
            logger.warning("ratio %g is near the collapse limit; epsilon grows without bound", ratio)
        estimate = _energy(float(means[k]), float(errs[k]), n_objects, area, spec.loop_count, flagged)
        _check_sign(estimate, n_objects, f"{family.__name__}(ratio={ratio:g})")
        results.append((ratio, estimate))
    return results


def estimate_line_spectral(
    config: Configuration,
    beta: float,
    spec: EnsembleSpec,
    threads: int = 1,
    extrapolate: bool = True,
) -> SpectralEstimate:
    """World-line irreducible spectral function ``(-1)^N E[A(sqrt(beta) loop)] / (2 pi beta)``."""
    lines = config.lines("estimate_line_spectral")
    if not beta > 0:
        raise GeometryError(f"beta must be positive, got {beta}")
    if len(lines) < 2 or shares_common_point(lines):
        raise DivergentWeightError()
    normals, offsets = line_arrays(lines)
    t = math.sqrt(beta)

    def area(bridge: UnitBridge) -> float:
        mins, maxs = bridge.extents(normals)
        return crossing_region_from_extents(normals, offsets, mins, maxs, t).area()

    per_loop = _per_loop(area, spec, extrapolate)

    def block(index: int, family: List[UnitBridge]) -> float:
        return float(np.mean([per_loop(bridge) for bridge in family]))

    blocks = np.array(map_ensemble(spec, block, threads))
    mean, err = jackknife(blocks)
    sign = -1.0 if len(lines) % 2 else 1.0
    norm = 1.0 / (2.0 * math.pi * beta)
    return SpectralEstimate(
        value=sign * norm * float(mean),
        std_error=norm * float(err),
        beta=beta,
        samples=spec.loop_count * spec.family_size,
    )
