"""Free-fermion analysis of a supersymmetric brick-wall quantum circuit.

Modules
-------
gate_core          the two-qubit gate, boundary gate and free-fermion exponent
graded_dense       small-L dense oracle: graded embeddings, U_F, supercharges, transfer matrix
hamiltonian_limit  the theta -> 0 Hamiltonians H_0 and H_gamma
topology           BDI symmetries and winding numbers of H_gamma
spectral_ubw       momentum-sector spectrum of U_F
quench_dynamics    exact quench dynamics (covariance and momentum-sector routes)
cli                command-line interface
"""
from .gate_core import GateParams, build_smatrix, exponent_coefficients

__version__ = "0.1.0"

__all__ = ["GateParams", "build_smatrix", "exponent_coefficients", "__version__"]
