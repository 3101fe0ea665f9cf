"""Twisted spherical harmonic analysis on complex Grassmannians SU(p+q)/S(U(p)xU(q))."""
from .lattice import (
    GrassmannParams,
    ParameterError,
    RestrictedRoot,
    SphericalWeight,
    absolute_continuity_gate,
    casimir,
    dimension,
    dimension_bound,
    enumerate_weights,
    killing_inner,
    make_space,
    make_weight,
    positive_roots,
    rho,
    smoothness_threshold,
    sobolev_r_condition,
)
from .montecarlo import MCEstimate, OrbitalMeasureSpec, functional_equation_check, pairing_estimate
from .sobolev import DensityGrid, SeriesReport, density_synthesis, sobolev_partial_sums
from .spherical import SphericalEvalOptions, TorusPoint, spherical_value

__version__ = "0.1.0"
