"""Periodically driven SSH waveguide lattice: Floquet spectra, pi modes, replicas and propagation."""

__version__ = "0.1.0"

from .errors import FloquetSSHError, NumericalValidityError, SpecError
from .evolution import PropagatorPlan, StateTrace, evolve_state, final_state, injection_state, propagator
from .floquet import FloquetSpectrum, floquet_operator, g_pi, gap_report, quasienergy_spectrum
from .lattice import DisorderSpec, GeometryMap, LatticeSpec, bloch_hamiltonian, hamiltonian_at
from .replicas import ReplicaSpec, extended_hamiltonian, replica_bands

__all__ = [
    "DisorderSpec",
    "FloquetSSHError",
    "FloquetSpectrum",
    "GeometryMap",
    "LatticeSpec",
    "NumericalValidityError",
    "PropagatorPlan",
    "ReplicaSpec",
    "SpecError",
    "StateTrace",
    "__version__",
    "bloch_hamiltonian",
    "evolve_state",
    "extended_hamiltonian",
    "final_state",
    "floquet_operator",
    "g_pi",
    "gap_report",
    "hamiltonian_at",
    "injection_state",
    "propagator",
    "quasienergy_spectrum",
    "replica_bands",
]
