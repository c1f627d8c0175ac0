"""Shared fixtures for casimir tests."""

import pytest

from casimir.bridges import UnitBridge, generate_unit_bridge, loop_stream


def _pad_to_bridge(vertices):
    points = [(0.0, 0.0)] + [tuple(map(float, v)) for v in vertices] + [(0.0, 0.0)]
    n = len(points) - 1
    target = 2
    while target < n:
        target *= 2
    points += [(0.0, 0.0)] * (target - n)
    return UnitBridge(points)


@pytest.fixture
def polygon_bridge():
    """Factory for a bridge that visits the given vertices from the origin and back."""
    return _pad_to_bridge


@pytest.fixture(scope="session")
def random_bridges():
    """100 reproducible random bridges with 256 segments."""
    return [generate_unit_bridge(loop_stream(2024, i), 256) for i in range(100)]
