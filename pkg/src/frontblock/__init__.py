"""Bistable reaction-diffusion fronts in cylinder-like planar domains."""

__version__ = "0.1.0"

from .nonlinearity import Bistable, make_cubic, make_tabulated, validate  # noqa: E402
from .wave1d import ShiftFunction, solve_wave  # noqa: E402
from .radial import find_R0, find_R1, solve_ball  # noqa: E402
from .geometry import DomainSpec, preset  # noqa: E402
from .grid import Grid  # noqa: E402
from .evolve import init_entire, run  # noqa: E402
from .steady import extend_supersolution, minimize_blocking  # noqa: E402
from .lab import cauchy, classify, predict, threshold_scan  # noqa: E402

__all__ = [
    "Bistable", "make_cubic", "make_tabulated", "validate", "ShiftFunction", "solve_wave",
    "find_R0", "find_R1", "solve_ball", "DomainSpec", "preset", "Grid", "init_entire", "run",
    "extend_supersolution", "minimize_blocking", "cauchy", "classify", "predict", "threshold_scan",
]
