"""Tests for worldline module."""

import math

import numpy as np
import pytest

from casimir.analytic import tictactoe_exact, tictactoe_spectral
from casimir.bridges import EnsembleSpec, UnitBridge
from casimir.errors import BridgeError, DivergentWeightError, GeometryError
from casimir.geometry import Configuration, IsoTriangle, LineObject, TicTacToe
from casimir.spectral import PotentialObject
from casimir.worldline import (
    estimate_energy,
    estimate_line_spectral,
    extrapolated,
    select_weight,
    sweep,
    weight_numeric,
    weight_three_lines,
    weight_tictactoe,
    weight_triangle,
)


def _scaled(bridge, factor):
    return UnitBridge(factor * bridge.points)


def test_square_loop_tictactoe_weight(polygon_bridge):
    """Test a loop spanning s x s against a unit square gives s^3 * 2/3."""
    bridge = polygon_bridge([(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    assert weight_tictactoe(bridge, 1.0, 1.0) == pytest.approx(2.0 / 3.0)
    big = _scaled(bridge, 1.5)
    assert weight_tictactoe(big, 1.0, 1.0) == pytest.approx(1.5 ** 3 * 2.0 / 3.0)


def test_tictactoe_weight_matches_quadrature(random_bridges):
    """Test the closed form against numerical integration of the support area."""
    config = TicTacToe(1.3, 0.7).configuration()
    for bridge in random_bridges:
        assert weight_tictactoe(bridge, 1.3, 0.7) == pytest.approx(
            weight_numeric(bridge, config), rel=1e-6
        )


def test_three_line_weight_matches_quadrature(random_bridges):
    """Test the exact three-line weight against numerical integration."""
    config = IsoTriangle(1.2, 0.9).configuration()
    for bridge in random_bridges:
        assert weight_three_lines(bridge, config) == pytest.approx(
            weight_numeric(bridge, config), rel=1e-4
        )


def test_triangle_closed_form_bounds_exact(random_bridges):
    """Test the minimal-scale formula never falls below the exact weight."""
    tri = IsoTriangle(1.0, 1.5)
    config = tri.configuration()
    for bridge in random_bridges[:20]:
        exact = weight_three_lines(bridge, config)
        assert exact > 0.0
        assert weight_triangle(bridge, tri) >= exact * (1.0 - 1e-9)


def test_triangle_closed_form_exact_for_homothetic_loop(polygon_bridge):
    """Test equality when the loop's hull is a scaled copy of the triangle."""
    tri = IsoTriangle(1.0, 1.5)
    vertices = np.array(tri.vertices)
    centered = 0.3 * (vertices - vertices.mean(axis=0))
    bridge = polygon_bridge(centered)
    assert weight_triangle(bridge, tri) == pytest.approx(
        weight_three_lines(bridge, tri.configuration()), rel=1e-7
    )


def test_triangle_closed_form_ratio_for_round_loop(polygon_bridge):
    """Test a round loop in an equilateral triangle: exact is 8/9 of the closed form."""
    tri = IsoTriangle(1.0, math.sqrt(3.0) / 2.0)
    angles = np.radians(np.arange(0.0, 360.0, 15.0))
    bridge = polygon_bridge(0.25 * np.column_stack([np.cos(angles), np.sin(angles)]))
    ratio = weight_three_lines(bridge, tri.configuration()) / weight_triangle(bridge, tri)
    assert ratio == pytest.approx(8.0 / 9.0, rel=1e-6)


def test_weight_cubic_in_loop_size(random_bridges):
    """Test weights scale as the cube of the loop and inversely with the geometry."""
    bridge = random_bridges[3]
    tri = IsoTriangle(1.0, 1.0).configuration()
    doubled = IsoTriangle(2.0, 2.0).configuration()
    base = weight_three_lines(bridge, tri)
    assert weight_three_lines(_scaled(bridge, 2.0), tri) == pytest.approx(8.0 * base, rel=1e-12)
    assert weight_three_lines(bridge, doubled) == pytest.approx(0.5 * base, rel=1e-12)
    base = weight_tictactoe(bridge, 1.3, 0.7)
    assert weight_tictactoe(_scaled(bridge, 2.0), 1.3, 0.7) == pytest.approx(8.0 * base, rel=1e-12)
    assert weight_tictactoe(bridge, 2.6, 1.4) == pytest.approx(0.5 * base, rel=1e-12)


def test_common_point_diverges():
    """Test lines through one point are rejected."""
    lines = (LineObject((1.0, 0.0), 0.0), LineObject((0.0, 1.0), 0.0), LineObject((0.6, 0.8), 0.0))
    spec = EnsembleSpec(seed=1, loop_count=2, points_per_loop=16)
    with pytest.raises(DivergentWeightError, match="common point"):
        estimate_energy(Configuration(lines), spec)
    with pytest.raises(DivergentWeightError):
        estimate_line_spectral(Configuration(lines), 1.0, spec)


def test_disks_rejected():
    """Test line estimators refuse potential objects."""
    config = Configuration((PotentialObject((0.0, 0.0), 1.0), PotentialObject((3.0, 0.0), 1.0)))
    with pytest.raises(GeometryError, match="requires Dirichlet lines"):
        estimate_energy(config, EnsembleSpec(seed=1, loop_count=2, points_per_loop=16))


def test_select_weight_methods(random_bridges):
    """Test method dispatch and its errors."""
    bridge = random_bridges[0]
    tri = IsoTriangle(1.0, 1.0)
    assert select_weight(tri.configuration())(bridge) == pytest.approx(
        weight_three_lines(bridge, tri.configuration())
    )
    assert select_weight(tri.configuration(), "closed-form")(bridge) == pytest.approx(
        weight_triangle(bridge, tri)
    )
    lines = Configuration(tri.lines())
    with pytest.raises(GeometryError, match="closed-form"):
        select_weight(lines, "closed-form")
    with pytest.raises(GeometryError, match="unknown weight method"):
        select_weight(lines, "magic")
    with pytest.raises(GeometryError, match="panels"):
        weight_numeric(bridge, lines, panels=7)


def test_extrapolation_raises_weight(random_bridges):
    """Test the corrected weight is at least the vertex-only weight."""
    weight = lambda bridge: weight_tictactoe(bridge, 1.0, 1.0)
    corrected = extrapolated(weight)
    for bridge in random_bridges[:20]:
        assert corrected(bridge) >= weight(bridge)


def test_extrapolation_needs_enough_points():
    """Test extrapolation refuses bridges too short to coarsen."""
    spec = EnsembleSpec(seed=1, loop_count=2, points_per_loop=4)
    config = TicTacToe(1.0, 1.0).configuration()
    with pytest.raises(BridgeError, match="points per loop"):
        estimate_energy(config, spec)
    assert estimate_energy(config, spec, extrapolate=False).value < 0.0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_energy_sign(seed):
    """Test four lines attract (negative) and three lines repel (positive)."""
    spec = EnsembleSpec(seed=seed, loop_count=200, points_per_loop=256)
    square = estimate_energy(TicTacToe(1.0, 1.0).configuration(), spec)
    assert square.value < 0.0
    assert square.epsilon == pytest.approx(square.value)
    triangle = estimate_energy(IsoTriangle(1.0, 2.0).configuration(), spec)
    assert triangle.value > 0.0
    assert triangle.epsilon == pytest.approx(triangle.value * 1.0)


def test_energy_independent_of_threads():
    """Test identical estimates for any worker count."""
    spec = EnsembleSpec(seed=17, loop_count=40, points_per_loop=64)
    config = IsoTriangle(1.0, 1.0).configuration()
    serial = estimate_energy(config, spec, threads=1)
    parallel = estimate_energy(config, spec, threads=3)
    assert serial == parallel


def test_collapsed_rectangle_stays_finite():
    """Test a nearly degenerate tic-tac-toe still gives a finite attractive energy."""
    spec = EnsembleSpec(seed=5, loop_count=50, points_per_loop=64)
    estimate = estimate_energy(TicTacToe(1.0, 1e-12).configuration(), spec)
    assert math.isfinite(estimate.value)
    assert estimate.value < 0.0


def test_error_shrinks_with_loops():
    """Test the jackknife error falls as one over the square root of the loop count."""
    config = TicTacToe(1.0, 1.0).configuration()
    small = estimate_energy(config, EnsembleSpec(seed=21, loop_count=200, points_per_loop=64, rotations=0))
    large = estimate_energy(config, EnsembleSpec(seed=21, loop_count=800, points_per_loop=64, rotations=0))
    assert large.std_error / small.std_error == pytest.approx(0.5, rel=0.25)


def test_tictactoe_sweep_symmetric_under_swap():
    """Test w/h and h/w agree exactly when quarter turns are in the ensemble."""
    spec = EnsembleSpec(seed=4, loop_count=30, points_per_loop=64, rotations=3)
    results = dict(sweep(TicTacToe, [0.5, 1.0, 2.0], spec))
    assert results[0.5].value == pytest.approx(results[2.0].value, rel=1e-9)


def test_tictactoe_sweep_strongest_for_square():
    """Test the energy weakens as the rectangle elongates."""
    spec = EnsembleSpec(seed=6, loop_count=300, points_per_loop=256)
    results = sweep(TicTacToe, [1.0, 3.0, 10.0], spec)
    magnitudes = [abs(est.epsilon) for _, est in results]
    assert magnitudes[0] > magnitudes[1] > magnitudes[2]
    assert all(est.epsilon < 0.0 for _, est in results)
    assert not any(est.flagged for _, est in results)


def test_triangle_sweep_grows_toward_collapse():
    """Test the energy rises as the triangle becomes needle-like, and extreme ratios are flagged."""
    spec = EnsembleSpec(seed=6, loop_count=200, points_per_loop=256)
    results = sweep(IsoTriangle, [0.04, 0.1, 0.5], spec)
    (_, needle), (_, thin), (_, wide) = results
    assert needle.flagged
    assert not thin.flagged and not wide.flagged
    assert thin.epsilon > wide.epsilon > 0.0


def test_sweep_rejects_bad_input():
    """Test sweep validation."""
    spec = EnsembleSpec(seed=1, loop_count=2, points_per_loop=16)
    with pytest.raises(GeometryError, match="at least one ratio"):
        sweep(TicTacToe, [], spec)
    with pytest.raises(GeometryError, match="ratios must be positive"):
        sweep(TicTacToe, [1.0, -2.0], spec)
    with pytest.raises(GeometryError, match="area"):
        sweep(TicTacToe, [1.0], spec, area=0.0)


def test_line_spectral_matches_exact():
    """Test the world-line spectral function of a unit square against the exact product."""
    spec = EnsembleSpec(seed=12, loop_count=500, points_per_loop=256)
    estimate = estimate_line_spectral(TicTacToe(1.0, 1.0).configuration(), 4.0, spec)
    exact = tictactoe_spectral(1.0, 1.0, 4.0)
    assert estimate.beta == 4.0
    assert estimate.samples == 500 * 7
    assert abs(estimate.value - exact) < max(0.1 * exact, 3.0 * estimate.std_error)


@pytest.mark.slow
def test_square_energy_matches_exact():
    """Test the unit-square energy against the lattice-sum result."""
    spec = EnsembleSpec(seed=2024, loop_count=1000, points_per_loop=1024)
    estimate = estimate_energy(TicTacToe(1.0, 1.0).configuration(), spec)
    exact = tictactoe_exact(1.0, 1.0)
    assert abs(estimate.value - exact) < max(0.01 * abs(exact), 3.0 * estimate.std_error)


def test_parallel_pair_with_transversal_uses_quadrature(random_bridges):
    """Test three lines with a parallel pair fall back to numerical integration."""
    lines = (LineObject((1.0, 0.0), 0.0), LineObject((1.0, 0.0), 1.0), LineObject((0.0, 1.0), 0.0))
    config = Configuration(lines)
    bridge = random_bridges[0]
    assert select_weight(config)(bridge) == weight_numeric(bridge, config)
    with pytest.raises(GeometryError, match="non-parallel"):
        weight_three_lines(bridge, config)

    estimate = estimate_energy(config, EnsembleSpec(seed=1, loop_count=5, points_per_loop=64))
    assert math.isfinite(estimate.value)
    assert estimate.value > 0.0


def test_tictactoe_sweep_minimal_for_square():
    """Test the 21-ratio sweep is symmetric in r and 1/r and deepest at r = 1."""
    ratios = np.geomspace(0.2, 5.0, 21)
    spec = EnsembleSpec(seed=8, loop_count=300, points_per_loop=256, rotations=3)
    results = sweep(TicTacToe, ratios, spec)
    values = np.array([est.epsilon for _, est in results])
    errors = np.array([est.std_error for _, est in results])
    for k in range(21):
        assert abs(values[k] - values[20 - k]) <= 3.0 * math.hypot(errors[k], errors[20 - k])
    assert np.all(values[10] <= values + 3.0 * errors)
    assert values[10] < values[0] - 3.0 * errors[0]
    assert values[10] < values[20] - 3.0 * errors[20]


def test_triangle_sweep_has_interior_minimum():
    """Test the triangle energy has a minimum between the two collapse limits."""
    ratios = np.geomspace(0.1, 10.0, 21)
    spec = EnsembleSpec(seed=9, loop_count=300, points_per_loop=256)
    results = sweep(IsoTriangle, ratios, spec)
    values = np.array([est.epsilon for _, est in results])
    errors = np.array([est.std_error for _, est in results])
    lowest = int(np.argmin(values))
    assert 0 < lowest < 20
    assert values[0] > values[lowest] + 3.0 * math.hypot(errors[0], errors[lowest])
    assert values[20] > values[lowest] + 3.0 * math.hypot(errors[20], errors[lowest])


@pytest.mark.slow
def test_refinement_drift_within_error():
    """Test epsilon at N = 256, 1024, 4096 moves by less than its statistical error."""
    config = TicTacToe(1.0, 1.0).configuration()
    exact = tictactoe_exact(1.0, 1.0)
    estimates = [
        estimate_energy(config, EnsembleSpec(seed=31, loop_count=1000, points_per_loop=n))
        for n in (256, 1024, 4096)
    ]
    for est in estimates:
        assert abs(est.epsilon - exact) < 3.0 * est.std_error + 0.01 * abs(exact)
    for coarse, fine in zip(estimates, estimates[1:]):
        assert abs(fine.epsilon - coarse.epsilon) < 2.0 * math.hypot(coarse.std_error, fine.std_error)
