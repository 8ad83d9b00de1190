"""Correlation kernels for space-like paths in interlaced random matrix and particle models.

Submodules:

* :mod:`spacelike.specfun`: Hermite, Laguerre and modified Bessel functions.
* :mod:`spacelike.contour`: quadrature on circles and vertical lines.
* :mod:`spacelike.kernels`: the discrete, Hermitian (GUE) and Wishart (LUE) kernels.
* :mod:`spacelike.eynard`: finite weights on space-like chains and their kernel.
* :mod:`spacelike.rmt_sim`: matrix process samplers and the eigenvalue solver.
* :mod:`spacelike.particles`: interlaced particle dynamics with blocking and pushing.
* :mod:`spacelike.mc_verify`: identity runners and Monte Carlo comparisons.
* :mod:`spacelike.cli`: the ``spacelike`` command.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("spacelike")
except PackageNotFoundError:  # running from a source tree without metadata
    __version__ = "0.1.0"

from ._backend import BACKEND

__all__ = ["BACKEND", "__version__"]
