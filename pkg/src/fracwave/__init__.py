"""fracwave: spectral simulator and numerical-verification lab for the
semilinear wave equation with fractional damping on a Dirichlet box."""

from .grid import BoxDomain, SpectralField

__version__ = "0.1.0"

__all__ = ["BoxDomain", "SpectralField", "__version__"]
