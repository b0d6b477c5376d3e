"""Split-step quantum walk simulator on the triangular lattice with a
marked defect: matrix-free evolution, dense defect spectroscopy,
momentum-space band analysis, and reproducible experiment drivers."""

from .io import PACKAGE_VERSION as __version__
from .lattice import LatticeConfig, uniform_state
from .evolution import AngleField, ProbabilitySeries, evolve_record, search_time, step

__all__ = [
    "AngleField",
    "LatticeConfig",
    "ProbabilitySeries",
    "evolve_record",
    "search_time",
    "step",
    "uniform_state",
    "__version__",
]
