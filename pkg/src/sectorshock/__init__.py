"""Steady axisymmetric transonic shocks in divergent spherical-sector nozzles."""
from .gas import GasModel
from .background import (EntranceData, NozzleGeom, RadialProfile, profile_for_shock,
                         shock_from_exit_pressure)

__all__ = ["GasModel", "EntranceData", "NozzleGeom", "RadialProfile",
           "profile_for_shock", "shock_from_exit_pressure"]
__version__ = "0.1.0"
