"""Lattice analogue of strong-field QED on a staggered tight-binding chain."""

__version__ = "0.1.0"

from .errors import (ConfigurationError, DomainError, LatqedError, NumericalError,
                     RegimeError)
from .model import (ChainModel, DeltaSite, Linear, RampProfile, WoodsSaxon, Zero,
                    build_hamiltonian, sample_potential)

__all__ = ["ChainModel", "ConfigurationError", "DeltaSite", "DomainError", "LatqedError", "Linear",
           "NumericalError", "RampProfile", "RegimeError", "WoodsSaxon", "Zero", "build_hamiltonian",
           "sample_potential"]
