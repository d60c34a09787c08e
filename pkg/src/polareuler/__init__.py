"""Spectral-in-angle tools for 2D incompressible vortex dynamics in polar
coordinates: per-mode Biot-Savart inversion, fractional Sobolev norms,
a compactly supported swirling initial construction, and a transport
solver with norm-growth diagnostics.
"""

__version__ = "0.1.0"

from .grid import RadialGrid
from .field import (
    PolarField,
    analyze,
    synthesize,
    lp_norm,
    save_field,
    load_field,
)
from .biot_savart import solve_velocity, VelocityModes
from .sobolev import SobolevSpec, norm
from .construction import ConstructionParams, assemble_initial
from .evolve import EvolveConfig, run, step
