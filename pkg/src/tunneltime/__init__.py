"""Multiple-reflection picture of wave-packet transmission through
rectangular wells and barriers.

Modules
-------
dispersion
    Wavenumbers inside and outside the region, group velocity, time scales.
scattering
    Closed-form and series transmission coefficients, phase unwrapping,
    group and amplitude delays.
synthesis
    Gaussian packets at the exit face, constituents and partial sums,
    peak tracking, envelope fidelity, first-order prediction.
experiments
    Figure datasets, Hartman thickness sweep, shape-preservation study.
cli
    ``tunneltime`` command-line entry point.
"""

from .dispersion import Kind, ScatterRegion, characteristic_scales, condition_ratio
from .scattering import (CoefficientTable, DelayReport, group_delay, series_partial_sum,
                         series_term, transmission_closed)
from .synthesis import FieldSamples, PacketSpec, synthesize

__version__ = "0.1.0"

__all__ = [
    "CoefficientTable",
    "DelayReport",
    "FieldSamples",
    "Kind",
    "PacketSpec",
    "ScatterRegion",
    "characteristic_scales",
    "condition_ratio",
    "group_delay",
    "series_partial_sum",
    "series_term",
    "synthesize",
    "transmission_closed",
]
