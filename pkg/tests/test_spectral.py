"""Tests for spectral module."""

import math

import numpy as np
import pytest

from casimir.bridges import EnsembleSpec
from casimir.errors import SpectralError
from casimir.spectral import (
    DIRICHLET,
    PotentialObject,
    SamplingBox,
    cancellation_check,
    default_sampling_box,
    estimate_irreducible_spectral_density,
    inclusion_exclusion_terms,
    kill_all_probability,
    monotonicity_curve,
    pair_gap,
    place_at_gap,
    subset_alternating_sum,
    survival_probability,
)


def _row_of_disks(count, strengths=None):
    strengths = strengths or [DIRICHLET] * count
    return [PotentialObject((3.0 * k, 0.0), 0.5, strengths[k]) for k in range(count)]


def _spike_path(mask, count):
    """Path along y=5 that dips onto the centre of every disk in ``mask``."""
    points = [(-3.0, 5.0)]
    for k in range(count):
        if mask >> k & 1:
            points += [(3.0 * k, 5.0), (3.0 * k, 0.0), (3.0 * k, 5.0)]
    points.append((-3.0, 5.0))
    return np.array(points)


def test_potential_object_validation():
    """Test radius and strength must be positive."""
    with pytest.raises(SpectralError, match="potentials must be positive"):
        PotentialObject((0.0, 0.0), 1.0, 0.0)
    with pytest.raises(SpectralError, match="potentials must be positive"):
        PotentialObject((0.0, 0.0), 1.0, -2.0)
    with pytest.raises(SpectralError, match="radius"):
        PotentialObject((0.0, 0.0), 0.0)
    disk = PotentialObject((1, 2), 0.5)
    assert disk.is_dirichlet
    assert disk.center == (1.0, 2.0)
    assert disk.translated(1.0).center == (2.0, 2.0)
    assert not PotentialObject((0.0, 0.0), 1.0, 3.0).is_dirichlet


def test_inclusion_exclusion_terms():
    """Test masks and signs for two objects."""
    assert inclusion_exclusion_terms(2) == [(0, 1), (1, -1), (2, -1), (3, 1)]
    assert [sign for _, sign in inclusion_exclusion_terms(1)] == [-1, 1]
    assert len(inclusion_exclusion_terms(16)) == 1 << 16


def test_subset_explosion():
    """Test more than sixteen objects are refused."""
    with pytest.raises(SpectralError, match="subset explosion"):
        inclusion_exclusion_terms(17)
    with pytest.raises(SpectralError, match="subset explosion"):
        kill_all_probability(np.zeros((2, 2)), 0.5, _row_of_disks(17))


def test_subset_alternating_sum():
    """Test the alternating sum over masks."""
    values = np.array([1.0, 0.5, 0.25, 0.125])
    assert subset_alternating_sum(values, 2) == pytest.approx(1.0 - 0.5 - 0.25 + 0.125)
    with pytest.raises(SpectralError, match="expected 4"):
        subset_alternating_sum(values[:3], 2)


def test_survival_far_and_touching():
    """Test Dirichlet survival is 1 away from the disk and 0 on contact."""
    disk = PotentialObject((0.0, 0.0), 1.0)
    far = np.array([(5.0, 5.0), (6.0, 5.0), (5.0, 5.0)])
    assert survival_probability(far, 0.5, [disk]) == 1.0
    touching = np.array([(5.0, 0.0), (1.0, 0.0), (5.0, 0.0)])
    assert survival_probability(touching, 0.5, [disk]) == 0.0
    assert survival_probability(far, 0.5, []) == 1.0


def test_survival_segment_crossing():
    """Test a segment passing through the disk kills even when no vertex is inside."""
    disk = PotentialObject((0.0, 0.0), 0.5)
    path = np.array([(-2.0, 0.1), (2.0, 0.1), (-2.0, 0.1)])
    assert survival_probability(path, 0.5, [disk]) == 0.0


def test_survival_soft_disk():
    """Test soft disks suppress by exp(-V * occupation time)."""
    disk = PotentialObject((0.0, 0.0), 1.0, 2.0)
    inside = np.full((5, 2), 0.1)
    assert survival_probability(inside, 0.25, [disk]) == pytest.approx(math.exp(-2.0))
    assert kill_all_probability(inside, 0.25, [disk]) == pytest.approx(1.0 - math.exp(-2.0))
    straddling = np.array([(0.0, 0.0), (2.0, 0.0)])
    assert survival_probability(straddling, 1.0, [PotentialObject((0.0, 0.0), 1.0, 1.0)]) == pytest.approx(
        math.exp(-0.75)
    )


def test_survival_rejects_bad_input():
    """Test dt and empty paths."""
    disk = PotentialObject((0.0, 0.0), 1.0)
    with pytest.raises(SpectralError, match="dt"):
        survival_probability(np.zeros((3, 2)), 0.0, [disk])
    with pytest.raises(SpectralError, match="empty path"):
        survival_probability(np.zeros((0, 2)), 0.1, [disk])


def test_kill_all_two_disks():
    """Test the kill-all probability needs every object."""
    disks = _row_of_disks(2)
    assert kill_all_probability(_spike_path(0b11, 2), 0.1, disks) == 1.0
    assert kill_all_probability(_spike_path(0b01, 2), 0.1, disks) == 0.0
    assert kill_all_probability(_spike_path(0b00, 2), 0.1, disks) == 0.0


def test_cancellation_on_proper_subsets():
    """Test paths missing some object contribute nothing, for random proper subsets."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        count = int(rng.integers(2, 7))
        strengths = [DIRICHLET if rng.random() < 0.5 else float(rng.uniform(0.5, 5.0)) for _ in range(count)]
        disks = _row_of_disks(count, strengths)
        mask = int(rng.integers(0, (1 << count) - 1))
        assert cancellation_check(disks, mask, _spike_path(mask, count), 0.01) == pytest.approx(0.0, abs=1e-12)


def test_cancellation_requires_proper_subset():
    """Test the full set is not a proper subset."""
    disks = _row_of_disks(2)
    with pytest.raises(SpectralError, match="proper subset"):
        cancellation_check(disks, 0b11, _spike_path(0b11, 2))
    with pytest.raises(SpectralError, match="dt must be positive"):
        cancellation_check(disks, 0b01, _spike_path(0b01, 2), 0.0)
    assert cancellation_check(disks, 0b01, _spike_path(0b01, 2)) == 0.0


def test_pair_gap_and_place_at_gap():
    """Test edge-to-edge gaps and placement."""
    a = PotentialObject((0.0, 0.0), 0.5)
    b = PotentialObject((3.0, 4.0), 1.0)
    assert pair_gap(a, b) == pytest.approx(3.5)
    moved = place_at_gap(a, PotentialObject((7.0, 0.0), 1.0), 2.0)
    assert moved.center == pytest.approx((3.5, 0.0))
    assert pair_gap(a, moved) == pytest.approx(2.0)
    with pytest.raises(SpectralError, match="separable by a plane"):
        place_at_gap(a, b, 0.0)


def test_default_sampling_box():
    """Test the box covers the objects plus five loop radii."""
    box = default_sampling_box([PotentialObject((0.0, 0.0), 1.0)], 4.0)
    assert box.x_min == pytest.approx(-11.1)
    assert box.y_max == pytest.approx(11.1)
    assert box.area == pytest.approx(22.2 ** 2)
    with pytest.raises(SpectralError, match="empty sampling box"):
        SamplingBox(0.0, 0.0, 0.0, 1.0)


def test_sampling_box_too_small():
    """Test a box that clips the loops is refused."""
    spec = EnsembleSpec(seed=1, loop_count=2, points_per_loop=16)
    with pytest.raises(SpectralError, match="sampling box too small"):
        estimate_irreducible_spectral_density(
            [PotentialObject((0.0, 0.0), 0.5)], 1.0, spec, SamplingBox(-1.0, -1.0, 1.0, 1.0)
        )


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_two_disks_positive_three_disks_negative(seed):
    """Test the sign of the irreducible spectral function follows (-1)^|s|."""
    spec = EnsembleSpec(seed=seed, loop_count=200, points_per_loop=64)
    pair = [PotentialObject((0.0, 0.0), 0.5), PotentialObject((2.0, 0.0), 0.5)]
    two = estimate_irreducible_spectral_density(pair, 1.0, spec, default_sampling_box(pair, 1.0))
    assert two.value > 3.0 * two.std_error
    assert two.samples == 200 * 7 * 16

    trio = pair + [PotentialObject((1.0, 1.7), 0.5)]
    three = estimate_irreducible_spectral_density(trio, 4.0, spec, default_sampling_box(trio, 4.0))
    assert three.value < -3.0 * three.std_error


def test_soft_disks_weaker_than_dirichlet():
    """Test finite potentials kill less often than Dirichlet disks on the same loops."""
    spec = EnsembleSpec(seed=9, loop_count=60, points_per_loop=64)
    hard = [PotentialObject((0.0, 0.0), 0.5), PotentialObject((2.0, 0.0), 0.5)]
    soft = [PotentialObject(d.center, d.radius, 5.0) for d in hard]
    box = default_sampling_box(hard, 1.0)
    phi_hard = estimate_irreducible_spectral_density(hard, 1.0, spec, box)
    phi_soft = estimate_irreducible_spectral_density(soft, 1.0, spec, box)
    assert 0.0 <= phi_soft.value < phi_hard.value


def test_spectral_estimate_independent_of_threads():
    """Test identical estimates for any worker count."""
    spec = EnsembleSpec(seed=5, loop_count=20, points_per_loop=32)
    pair = [PotentialObject((0.0, 0.0), 0.5), PotentialObject((1.5, 0.0), 0.5)]
    box = default_sampling_box(pair, 1.0)
    serial = estimate_irreducible_spectral_density(pair, 1.0, spec, box, threads=1)
    parallel = estimate_irreducible_spectral_density(pair, 1.0, spec, box, threads=4)
    assert serial == parallel


def test_monotonicity_curve_decreases():
    """Test the two-disk spectral function falls as the disks separate."""
    spec = EnsembleSpec(seed=11, loop_count=200, points_per_loop=64)
    disk = PotentialObject((0.0, 0.0), 0.5)
    curve = monotonicity_curve(disk, disk, [0.5, 1.0, 2.0], 1.0, spec)
    values = [est.value for est in curve]
    assert values[0] > values[1] > values[2] >= 0.0


def test_monotonicity_curve_validation():
    """Test separations must increase strictly."""
    spec = EnsembleSpec(seed=1, loop_count=2, points_per_loop=16)
    disk = PotentialObject((0.0, 0.0), 0.5)
    with pytest.raises(SpectralError, match="strictly increasing"):
        monotonicity_curve(disk, disk, [1.0, 1.0], 1.0, spec)
    with pytest.raises(SpectralError, match="separable by a plane"):
        monotonicity_curve(disk, disk, [-1.0, 1.0], 1.0, spec)


def test_disjoint_soft_disks_factorize():
    """Test survival of a path through two disjoint soft disks is the product of single survivals."""
    disks = [PotentialObject((0.0, 0.0), 0.5, 1.5), PotentialObject((3.0, 0.0), 0.5, 4.0)]
    path = np.linspace((-1.0, 0.1), (4.0, -0.1), 81)
    path = np.vstack([path, path[::-1][1:]])
    dt = 1.0 / (len(path) - 1)
    p1 = survival_probability(path, dt, disks[:1])
    p2 = survival_probability(path, dt, disks[1:])
    assert 0.0 < p1 < 1.0 and 0.0 < p2 < 1.0
    assert survival_probability(path, dt, disks) == pytest.approx(p1 * p2, rel=1e-12)
    assert kill_all_probability(path, dt, disks) == pytest.approx((1.0 - p1) * (1.0 - p2), rel=1e-12)


def test_survival_falls_to_zero_with_strength():
    """Test a disk-crossing path survives less as the potential grows, reaching the Dirichlet limit."""
    path = np.array([(-2.0, 0.0), (-0.5, 0.0), (0.0, 0.0), (0.5, 0.0), (2.0, 0.0), (-2.0, 0.0)])
    strengths = [0.5, 2.0, 8.0, 32.0, 128.0]
    values = [survival_probability(path, 0.2, [PotentialObject((0.0, 0.0), 1.0, v)]) for v in strengths]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-20
    assert survival_probability(path, 0.2, [PotentialObject((0.0, 0.0), 1.0)]) == 0.0


def test_relabeling_leaves_estimate_unchanged():
    """Test the spectral function does not depend on the order of the objects."""
    spec = EnsembleSpec(seed=15, loop_count=30, points_per_loop=32)
    pair = [PotentialObject((0.0, 0.0), 0.4), PotentialObject((1.8, 0.3), 0.7, 3.0)]
    box = default_sampling_box(pair, 1.0)
    forward = estimate_irreducible_spectral_density(pair, 1.0, spec, box)
    backward = estimate_irreducible_spectral_density(pair[::-1], 1.0, spec, box)
    assert backward.value == pytest.approx(forward.value, rel=1e-12)


def test_monotonicity_curve_symmetric_in_objects():
    """Test swapping the moving and fixed disks gives the same curve within errors."""
    spec = EnsembleSpec(seed=19, loop_count=200, points_per_loop=64)
    small = PotentialObject((0.0, 0.0), 0.3)
    large = PotentialObject((0.0, 0.0), 0.7)
    forward = monotonicity_curve(small, large, [0.5, 1.0], 1.0, spec)
    backward = monotonicity_curve(large, small, [0.5, 1.0], 1.0, spec)
    for a, b in zip(forward, backward):
        assert abs(a.value - b.value) < 3.0 * math.hypot(a.std_error, b.std_error)


def test_spectral_function_bounded_by_gaussian_decay():
    """Test |phi| <= exp(-l_min^2 / (2 beta)) box_area / (2 pi beta) with l_min twice the gap."""
    spec = EnsembleSpec(seed=23, loop_count=100, points_per_loop=64)
    disk = PotentialObject((0.0, 0.0), 0.5)
    beta = 1.0
    for gap in (0.5, 1.0, 2.0):
        pair = [disk, place_at_gap(disk, disk, gap)]
        box = default_sampling_box(pair, beta)
        estimate = estimate_irreducible_spectral_density(pair, beta, spec, box)
        bound = math.exp(-(2.0 * gap) ** 2 / (2.0 * beta)) * box.area / (2.0 * math.pi * beta)
        assert abs(estimate.value) <= bound


def test_spectral_function_decays_faster_than_gaussian_in_gap():
    """Test phi(a) exp(a^2 / (2 beta)) still falls as the gap a grows."""
    spec = EnsembleSpec(seed=29, loop_count=200, points_per_loop=64)
    disk = PotentialObject((0.0, 0.0), 0.5)
    beta = 1.0
    gaps = [1.0, 2.0, 3.0]
    curve = monotonicity_curve(disk, disk, gaps, beta, spec)
    scaled = [est.value * math.exp(gap ** 2 / (2.0 * beta)) for gap, est in zip(gaps, curve)]
    assert scaled[0] > 0.0
    assert scaled[0] > scaled[1] >= scaled[2] >= 0.0
