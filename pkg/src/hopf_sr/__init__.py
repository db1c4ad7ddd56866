"""Sub-Riemannian geodesics, Jacobi curves and conjugate points on Hopf spheres S^{2n+1}."""

from .flow import PhasePoint, charge, hamiltonian, phase_point, vertical_momentum
from .jacobi import ConjugateReport, curvature_maps

__all__ = [
    "PhasePoint",
    "ConjugateReport",
    "charge",
    "curvature_maps",
    "hamiltonian",
    "phase_point",
    "vertical_momentum",
]
__version__ = "0.1.0"
