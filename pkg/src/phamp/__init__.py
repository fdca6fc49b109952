"""Phase-amplitude parameterization of hyperbolic limit cycles in 3D.

Computes the Fourier-Taylor parameterization K(theta, sigma) of the
attracting invariant manifold of a limit cycle, its accuracy domain,
globalized isochrons / isostables / slow manifold, phase and amplitude
response functions everywhere in the basin, and stroboscopic maps for
pulse-train perturbations.
"""

from .integrate import Flow, IntegrationError
from .limit_cycle import FloquetData, find_limit_cycle, floquet_data
from .models import MODEL_NAMES, ModelSpec, find_equilibrium, get_model
from .solver import AccuracyDomain, Parameterization, SolverConfig, solve

__all__ = [
    "Flow", "IntegrationError", "FloquetData", "find_limit_cycle",
    "floquet_data", "MODEL_NAMES", "ModelSpec", "find_equilibrium",
    "get_model", "AccuracyDomain", "Parameterization", "SolverConfig",
    "solve",
]

__version__ = "0.1.0"
