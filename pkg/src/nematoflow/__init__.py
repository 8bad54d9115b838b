"""nematoflow: non-isothermal nematic liquid-crystal flow toolkit.

Library layout:

    material     free-energy catalog, parameter rules, thermodynamic relations
    consistency  inequality certification over sampled parameter boxes
    stress       point-wise constitutive tensors and production scalars
    symbolcheck  principal-symbol parabolicity, boundary condition, decay rates
    grid         staggered-grid layout and discrete operators
    solver       semi-implicit 2D integrator (director -> heat -> velocity)
    diagnostics  conserved totals, Lyapunov series, rate fits, defect audits
    storage      CSV / snapshot / summary formats
    config       sectioned key-value run configuration
    cli          simulate / check / analyze-symbol / report entry points
"""

__version__ = "0.1.0"

import os as _os

# Cap the numerical worker pools before numpy is first imported; results are
# bit-identical at any setting (fixed-order reductions), this only bounds CPU
# usage.  Opt-in through NEMATOFLOW_THREADS.
_threads = _os.environ.get("NEMATOFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
                 "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .grid import Grid
from .material import (FreeEnergy, MaterialModel, ParameterSet, ParamRule,
                       ThermoState)
from .solver import ScenarioConfig, StateField, StepConfig

__all__ = [
    "__version__",
    "FreeEnergy", "Grid", "MaterialModel", "ParamRule", "ParameterSet",
    "ScenarioConfig", "StateField", "StepConfig", "ThermoState",
]
