"""Type definitions for casimir run configurations and outputs."""

from typing import List, TypedDict


class RunConfig(TypedDict, total=False):
    """Resolved run configuration (flat JSON object on disk)."""
    mode: str
    seed: int
    loops: int
    points: int
    rotations: int
    output: str
    geometry: str
    w: float
    h: float
    base: float
    height: float
    area: float
    ratios: List[float]
    ratio_min: float
    ratio_max: float
    ratio_count: int
    betas: List[float]
    beta: float
    lines: List[List[float]]
    disks: List[List[float]]
    gaps: List[float]
    radius: float
    strength: float
    points_list: List[int]
    positions_per_loop: int
    tol: float
    threads: int
    analytic: bool
    extrapolate: bool
    flagged: List[float]
