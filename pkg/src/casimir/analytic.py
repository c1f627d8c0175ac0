"""Exact reference values for Dirichlet lines.

Spectral functions use the convention ``phi(beta) = sum_n exp(-beta lambda_n / 2)``
throughout, so an interval of length ``a`` has eigenvalues ``(n pi / a)^2`` and the
Weyl asymptote ``a / sqrt(2 pi beta) - 1/2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.integrate import simpson
from scipy.special import zeta

from .errors import GeometryError
from .spectral import subset_alternating_sum

logger = logging.getLogger(__name__)

WEYL_SWITCH = 0.01
ASYMPTOTIC_RATIO = 16.0
PROPER_TIME_POINTS = 2049
_SERIES_RTOL = 1e-16
_MAX_DOUBLINGS = 12


def _validate_lengths(**lengths: float) -> None:
    for name, value in lengths.items():
        if not value > 0:
            raise GeometryError(f"{name} must be positive, got {value}")


def _row_sums(a: float, c: np.ndarray, k1: int) -> np.ndarray:
    """``sum_{n >= 1} (n^2 a^2 + c^2)^{-3/2}`` per row, with an Euler-Maclaurin tail."""
    n = np.arange(1, k1 + 1, dtype=float)
    explicit = np.sum((np.outer(c * c, np.ones(k1)) + (n * a) ** 2) ** -1.5, axis=1)
    x = float(k1)
    root = np.sqrt((x * a) ** 2 + c * c)
    integral = 1.0 / (a * root * (root + x * a))
    g = root ** -3
    dg = -3.0 * a * a * x * root ** -5
    return explicit + integral - 0.5 * g - dg / 12.0


def _lattice_sum_at(a: float, b: float, k2: int) -> float:
    """``sum_{n1,n2 >= 1} (n1^2 a^2 + n2^2 b^2)^{-3/2}`` for ``a >= b`` with ``k2`` explicit rows."""
    k1 = max(256, math.ceil(16.0 * k2 * b / a))
    c = b * np.arange(1, k2 + 1, dtype=float)
    rows = float(np.sum(_row_sums(a, c, k1)))
    # rows beyond k2 have c >> a, where the row sum is 1/(a c^2) - 1/(2 c^3) up to e^{-2 pi c/a}
    tail = float(zeta(2.0, k2 + 1)) / (a * b * b) - float(zeta(3.0, k2 + 1)) / (2.0 * b ** 3)
    return rows + tail


def lattice_sum(w: float, h: float, tol: float = 1e-10) -> Tuple[float, int]:
    """Converged double sum and the number of explicit rows used.

    Rows are doubled until the change falls below ``tol`` times the sum.
    """
    _validate_lengths(w=w, h=h, tol=tol)
    a, b = max(w, h), min(w, h)
    k2 = max(64, math.ceil(8.0 * a / b))
    value = _lattice_sum_at(a, b, k2)
    for _ in range(_MAX_DOUBLINGS):
        refined = _lattice_sum_at(a, b, 2 * k2)
        k2 *= 2
        if abs(refined - value) <= tol * abs(refined):
            value = refined
            break
        value = refined
    else:
        logger.warning("lattice_sum(w=%g, h=%g) did not reach tol=%g", w, h, tol)
    logger.debug("lattice_sum(w=%g, h=%g) = %.15g with %d rows", w, h, value, k2)
    return value, k2


def tictactoe_asymptotic(w: float, h: float) -> float:
    """Elongated-rectangle form ``-(1/8 pi) [zeta(2)/a - zeta(3) b / (2 a^2)]``, ``a >= b``.

    The neglected terms are of order ``exp(-2 pi a / b)``.
    """
    _validate_lengths(w=w, h=h)
    a, b = max(w, h), min(w, h)
    return -(math.pi ** 2 / 6.0 / a - float(zeta(3.0)) * b / (2.0 * a * a)) / (8.0 * math.pi)


def tictactoe_exact(w: float, h: float, tol: float = 1e-10) -> float:
    """``-(w h / 8 pi) sum_{n1,n2 >= 1} [(n1 w)^2 + (n2 h)^2]^{-3/2}``."""
    _validate_lengths(w=w, h=h, tol=tol)
    a, b = max(w, h), min(w, h)
    if a / b >= ASYMPTOTIC_RATIO:
        return tictactoe_asymptotic(a, b)
    total, _ = lattice_sum(a, b, tol)
    return -a * b * total / (8.0 * math.pi)


def _gaussian_series(ratio: float) -> float:
    """``sum_{n >= 1} exp(-ratio n^2)`` until terms drop below the running sum's precision."""
    total = 0.0
    n = 1
    while True:
        term = math.exp(-ratio * n * n)
        total += term
        if term == 0.0 or term < _SERIES_RTOL * total:
            return total
        n += 1


def interval_spectral(a: float, beta: float) -> float:
    """Dirichlet interval spectral function ``sum_{n >= 1} exp(-beta n^2 pi^2 / (2 a^2))``."""
    _validate_lengths(a=a, beta=beta)
    x = beta / (a * a)
    if x < WEYL_SWITCH:
        return a / math.sqrt(2.0 * math.pi * beta) - 0.5 + interval_oscillating(a, beta)
    return _gaussian_series(x * math.pi ** 2 / 2.0)


def interval_oscillating(a: float, beta: float) -> float:
    """``interval_spectral`` minus its Weyl terms ``a / sqrt(2 pi beta) - 1/2``."""
    _validate_lengths(a=a, beta=beta)
    x = beta / (a * a)
    weyl = a / math.sqrt(2.0 * math.pi * beta)
    if x < 1.0:
        return 2.0 * weyl * _gaussian_series(2.0 / x)
    return interval_spectral(a, beta) - weyl + 0.5


def tictactoe_spectral(w: float, h: float, beta: float) -> float:
    """Free-plane irreducible spectral function ``(4 w h / 2 pi beta) g(w) g(h)``.

    ``g(a) = sum_{n >= 1} exp(-2 n^2 a^2 / beta)``; this equals the product of the
    two oscillating interval parts.
    """
    _validate_lengths(w=w, h=h, beta=beta)
    return interval_oscillating(w, beta) * interval_oscillating(h, beta)


@dataclass(frozen=True)
class BoxPartition:
    """Rectangular Dirichlet box cut by vertical lines ``x_cuts`` and horizontal ``y_cuts``."""
    width: float
    height: float
    x_cuts: Tuple[float, ...]
    y_cuts: Tuple[float, ...]

    def __post_init__(self) -> None:
        _validate_lengths(width=self.width, height=self.height)
        object.__setattr__(self, "x_cuts", tuple(float(x) for x in self.x_cuts))
        object.__setattr__(self, "y_cuts", tuple(float(y) for y in self.y_cuts))
        for name, cuts, size in (("x_cuts", self.x_cuts, self.width),
                                 ("y_cuts", self.y_cuts, self.height)):
            edges = (0.0,) + cuts + (size,)
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise GeometryError(f"{name} must increase strictly inside (0, {size:g}), got {cuts}")

    @classmethod
    def centered(cls, w: float, h: float, scale: float = 10.0) -> "BoxPartition":
        """Tic-tac-toe of cell ``w x h`` centred in a box ``scale`` times larger."""
        _validate_lengths(w=w, h=h)
        if not scale > 1:
            raise GeometryError(f"box scale must exceed 1, got {scale}")
        width, height = scale * w, scale * h
        x0, y0 = 0.5 * (width - w), 0.5 * (height - h)
        return cls(width, height, (x0, x0 + w), (y0, y0 + h))

    @property
    def cell(self) -> Tuple[float, float]:
        """Inner rectangle enclosed by the four cuts."""
        return self.x_cuts[1] - self.x_cuts[0], self.y_cuts[1] - self.y_cuts[0]

    def transposed(self) -> "BoxPartition":
        return BoxPartition(self.height, self.width, self.y_cuts, self.x_cuts)


def _cells(cuts: Sequence[float], size: float, mask: int) -> List[float]:
    chosen = [cut for k, cut in enumerate(cuts) if mask >> k & 1]
    edges = [0.0] + chosen + [size]
    return [b - a for a, b in zip(edges, edges[1:])]


def _require_tictactoe(box: BoxPartition) -> None:
    if len(box.x_cuts) != 2 or len(box.y_cuts) != 2:
        raise GeometryError(
            f"a tic-tac-toe box needs two x cuts and two y cuts, got {len(box.x_cuts)} and {len(box.y_cuts)}"
        )


def _split_mask(box: BoxPartition, mask: int) -> Tuple[int, int]:
    nx = len(box.x_cuts)
    return mask & ((1 << nx) - 1), mask >> nx


def box_subset_spectral(box: BoxPartition, mask: int, beta: float) -> float:
    """Spectral function of the box with the cuts in ``mask`` made Dirichlet.

    Bits ``0..len(x_cuts)-1`` select x cuts, the remaining bits select y cuts.
    """
    _validate_lengths(beta=beta)
    xmask, ymask = _split_mask(box, mask)
    x_sum = sum(interval_spectral(c, beta) for c in _cells(box.x_cuts, box.width, xmask))
    y_sum = sum(interval_spectral(c, beta) for c in _cells(box.y_cuts, box.height, ymask))
    return x_sum * y_sum


def box_irreducible_spectral(box: BoxPartition, beta: float) -> float:
    """Four-body irreducible spectral function of a tic-tac-toe inside a box.

    Weyl terms cancel identically in the alternating sum over cut subsets, so
    only the oscillating interval parts enter.
    """
    _require_tictactoe(box)
    _validate_lengths(beta=beta)
    x_parts = [sum(interval_oscillating(c, beta) for c in _cells(box.x_cuts, box.width, m))
               for m in range(4)]
    y_parts = [sum(interval_oscillating(c, beta) for c in _cells(box.y_cuts, box.height, m))
               for m in range(4)]
    products = np.array([x_parts[mask & 3] * y_parts[mask >> 2] for mask in range(16)])
    # (-1)^|s| = +1 for four objects
    return float(subset_alternating_sum(products, 4))


def proper_time_grid(box: BoxPartition, points: int = PROPER_TIME_POINTS) -> np.ndarray:
    """Log-spaced ``beta`` from ``1e-3 l_min^2`` to ``1e2 max(W, H)^2``; ``l_min = 2 sqrt(w^2 + h^2)``."""
    w, h = box.cell
    l_min_sq = 4.0 * (w * w + h * h)
    big = max(box.width, box.height) ** 2
    return np.logspace(math.log10(1e-3 * l_min_sq), math.log10(1e2 * big), points)


def box_energy(box: BoxPartition, points: int = PROPER_TIME_POINTS) -> float:
    """``-(1/sqrt(8 pi)) int phi(beta) beta^{-3/2} dbeta`` over the proper-time grid.

    Integrated in ``ln beta``; the Gaussian small-beta tail and the exponential
    large-beta tail are below double precision at the grid ends.
    """
    _require_tictactoe(box)
    betas = proper_time_grid(box, points)
    phi = np.array([box_irreducible_spectral(box, beta) for beta in betas])
    integral = float(simpson(phi / np.sqrt(betas), x=np.log(betas)))
    energy = -integral / math.sqrt(8.0 * math.pi)
    logger.debug("box_energy(%s) = %.12g", box, energy)
    return energy


def _signed_cells(cuts: Sequence[float], size: float) -> List[Tuple[float, float]]:
    out = []
    for mask in range(1 << len(cuts)):
        sign = -1.0 if bin(mask).count("1") % 2 else 1.0
        out.extend((width, sign) for width in _cells(cuts, size, mask))
    return out


def box_energy_lattice(box: BoxPartition, tol: float = 1e-10) -> float:
    """Box energy as a signed combination of free-plane tic-tac-toe lattice sums."""
    _require_tictactoe(box)
    total = 0.0
    for a, sa in _signed_cells(box.x_cuts, box.width):
        for b, sb in _signed_cells(box.y_cuts, box.height):
            total += sa * sb * tictactoe_exact(a, b, tol)
    return total


def extrapolated_box_energy(
    w: float,
    h: float,
    scales: Sequence[float] = (20.0, 40.0, 80.0),
    energy: Callable[[BoxPartition], float] = box_energy,
) -> float:
    """Richardson extrapolation of centred-box energies to an infinite box.

    Finite-box corrections fall off like ``1/W`` and ``1/W^2``; ``scales`` must
    double at each step.
    """
    if len(scales) != 3 or not all(math.isclose(b, 2.0 * a) for a, b in zip(scales, scales[1:])):
        raise GeometryError(f"scales must be three successive doublings, got {tuple(scales)}")
    e1, e2, e4 = (energy(BoxPartition.centered(w, h, s)) for s in scales)
    r1 = 2.0 * e2 - e1
    r2 = 2.0 * e4 - e2
    result = (4.0 * r2 - r1) / 3.0
    logger.info("extrapolated box energy (w=%g, h=%g): %.10g from %s", w, h, result, (e1, e2, e4))
    return result
