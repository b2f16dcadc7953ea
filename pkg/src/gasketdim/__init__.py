"""Energy and box-counting dimension of functions on the Sierpinski gasket."""

from gasketdim.energy import VertexFunction, crude_energy, energy_series, renormalized_energy
from gasketdim.fif import AlphaSpec, build_fif
from gasketdim.gasket import GasketLevel, LatticeVertex, apply_map, enumerate_level
from gasketdim.harmonic import BoundaryValues, harmonic_extend, piecewise_harmonic_extend

__version__ = "0.1.0"
