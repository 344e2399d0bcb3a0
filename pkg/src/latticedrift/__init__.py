"""Quantum and classical dynamics of a charged particle on a 2D lattice
in perpendicular magnetic and in-plane electric fields."""

from .core import (
    DerivedConstants,
    DisorderRealization,
    Field1D,
    Field2D,
    ModelParams,
    WindowTooSmallError,
    derive_constants,
    disorder,
    incoherent_packet,
    landau_packet_1d,
    staggered_transform,
)
from .observables import ObservableSeries
from .propagate import (
    PropagationConfig,
    StepFailureError,
    evolve_1d,
    evolve_2d_staticgauge,
    evolve_2d_timegauge,
)

# spectral / transport / classical / ensemble layers are imported as modules
# (latticedrift.spectral, .transport, .classical, .ensemble); the names above
# cover the state-construction and propagation core.

__version__ = "0.1.0"

__all__ = [
    "DerivedConstants",
    "DisorderRealization",
    "Field1D",
    "Field2D",
    "ModelParams",
    "ObservableSeries",
    "PropagationConfig",
    "StepFailureError",
    "WindowTooSmallError",
    "derive_constants",
    "disorder",
    "evolve_1d",
    "evolve_2d_staticgauge",
    "evolve_2d_timegauge",
    "incoherent_packet",
    "landau_packet_1d",
    "staggered_transform",
    "__version__",
]
