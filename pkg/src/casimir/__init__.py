"""World-line Monte Carlo for irreducible Casimir energies in two dimensions."""

from .analytic import (
    BoxPartition,
    box_energy,
    box_energy_lattice,
    box_irreducible_spectral,
    extrapolated_box_energy,
    interval_spectral,
    tictactoe_exact,
    tictactoe_spectral,
)
from .bridges import EnsembleSpec, UnitBridge, generate_unit_bridge, loop_family, rotated_duplicates
from .errors import (
    BridgeError,
    CasimirError,
    ConfigError,
    DivergentWeightError,
    GeometryError,
    SpectralError,
)
from .geometry import Configuration, IsoTriangle, LineObject, TicTacToe, minimal_scale, support_area
from .parser import parse_config
from .spectral import (
    DIRICHLET,
    PotentialObject,
    SamplingBox,
    SpectralEstimate,
    estimate_irreducible_spectral_density,
    kill_all_probability,
    monotonicity_curve,
    survival_probability,
)
from .worldline import (
    EnergyEstimate,
    estimate_energy,
    estimate_line_spectral,
    sweep,
    weight_numeric,
    weight_three_lines,
    weight_tictactoe,
    weight_triangle,
)

__version__ = "0.1.0"

__all__ = [
    "BoxPartition",
    "BridgeError",
    "CasimirError",
    "ConfigError",
    "Configuration",
    "DIRICHLET",
    "DivergentWeightError",
    "EnergyEstimate",
    "EnsembleSpec",
    "GeometryError",
    "IsoTriangle",
    "LineObject",
    "PotentialObject",
    "SamplingBox",
    "SpectralError",
    "SpectralEstimate",
    "TicTacToe",
    "UnitBridge",
    "box_energy",
    "box_energy_lattice",
    "box_irreducible_spectral",
    "estimate_energy",
    "estimate_irreducible_spectral_density",
    "estimate_line_spectral",
    "extrapolated_box_energy",
    "generate_unit_bridge",
    "interval_spectral",
    "kill_all_probability",
    "loop_family",
    "minimal_scale",
    "monotonicity_curve",
    "parse_config",
    "rotated_duplicates",
    "support_area",
    "survival_probability",
    "sweep",
    "tictactoe_exact",
    "tictactoe_spectral",
    "weight_numeric",
    "weight_three_lines",
    "weight_tictactoe",
    "weight_triangle",
]
