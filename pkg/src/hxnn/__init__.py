"""hxnn: hypercomplex and parameterized-hypercomplex neural layers.

Algebra-bound layers share n weight blocks across a signed n x n block
grid; parameterized layers learn the grid itself as a Kronecker sum.
Everything runs on a small float64 numpy autodiff core.
"""

from . import algebra, experiments, geometry, layers, phlayers, tensor, training

__all__ = ["algebra", "tensor", "layers", "phlayers", "geometry", "training", "experiments"]
__version__ = "0.1.0"
