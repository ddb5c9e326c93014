"""Extended (Sambe) Floquet space truncated to replicas n = -n_max..n_max.

The block (m, n) of the extended Hamiltonian is H^(m-n) + m omega delta_mn,
with H^(0), H^(+1), H^(-1) the harmonics of H(z).  Its eigenvalues are the
quasienergies repeated every omega; truncation corrupts the outermost replicas,
so only eigenvectors whose dominant weight sits in |n| <= n_max - 1 are trusted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryMismatch, BranchAmbiguity, DriveError, SpecError
from .evolution import PropagatorPlan
from .floquet import floquet_operator
from .lattice import BLOCH, OPEN, LatticeSpec, fourier_components
from .numerics import eig_hermitian, log_unitary


@dataclass(frozen=True)
class ReplicaSpec:
    n_max: int = 2

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, (int, np.integer)) or self.n_max < 0:
            raise SpecError(f"must be a non-negative integer, got {self.n_max!r}", "n_max")

    @property
    def count(self) -> int:
        return 2 * self.n_max + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)


@dataclass(frozen=True)
class ReplicaBands:
    """Folded extended-space eigenvalues per k (rows ascending) with trust flags."""

    k_grid: np.ndarray
    bands: np.ndarray
    trusted: np.ndarray
    replica: np.ndarray
    omega: float

    def zone_edge_distance(self, trusted_only: bool = True) -> float:
        """Smallest distance of any band to the zone edge +-omega/2."""
        d = self.omega / 2 - np.abs(self.bands)
        if trusted_only:
            d = d[self.trusted]
        return float(d.min())

    def zero_distance(self, trusted_only: bool = True) -> float:
        d = np.abs(self.bands)
        if trusted_only:
            d = d[self.trusted]
        return float(d.min())


def fold(values, omega: float) -> np.ndarray:
    """Map quasienergies into the zone (-omega/2, omega/2]."""
    x = np.asarray(values, dtype=float)
    folded = x - omega * np.round(x / omega)
    folded = np.where(folded <= -omega / 2, folded + omega, folded)
    return np.where(folded > omega / 2, folded - omega, folded)


def circular_distance(a, b, omega: float):
    return np.abs(fold(np.asarray(a) - np.asarray(b), omega))


def _require_driven(spec: LatticeSpec) -> None:
    if not spec.driven:
        raise DriveError("replica construction needs omega > 0", "omega")


def extended_hamiltonian(spec: LatticeSpec, rspec: ReplicaSpec, k: float | None = None) -> np.ndarray:
    """Hermitian extended Hamiltonian of size (2 n_max + 1) * block.

    Open-chain blocks (N x N) when ``k`` is None, 2 x 2 Bloch blocks otherwise.
    """
    _require_driven(spec)
    if k is None and spec.boundary == BLOCH:
        raise BoundaryMismatch("a Bloch spec needs a momentum k", "k")
    harmonics = fourier_components(spec.replace(boundary=OPEN) if k is None else spec, k)
    h0, hplus, hminus = harmonics
    d = h0.shape[0]
    nrep = rspec.count
    out = np.zeros((nrep * d, nrep * d), dtype=complex)
    for a, m in enumerate(rspec.indices):
        rows = slice(a * d, (a + 1) * d)
        out[rows, rows] = h0 + m * spec.omega * np.eye(d)
        if a + 1 < nrep:
            cols = slice((a + 1) * d, (a + 2) * d)
            # block (m, m + 1) carries H^(m - (m + 1)) = H^(-1)
            out[rows, cols] = hminus
            out[cols, rows] = hplus
    return out


def _dominant_replica(vectors: np.ndarray, rspec: ReplicaSpec) -> np.ndarray:
    """For eigenvector columns (..., D, D) return the replica index carrying most weight."""
    d = vectors.shape[-2] // rspec.count
    w = np.abs(vectors) ** 2
    w = w.reshape(vectors.shape[:-2] + (rspec.count, d, vectors.shape[-1])).sum(axis=-2)
    return rspec.indices[np.argmax(w, axis=-2)]


def _trust(replica: np.ndarray, rspec: ReplicaSpec) -> np.ndarray:
    if rspec.n_max == 0:
        return np.ones(replica.shape, dtype=bool)
    return np.abs(replica) <= rspec.n_max - 1


def folded_spectrum(spec: LatticeSpec, rspec: ReplicaSpec, k: float | None = None):
    """(folded eigenvalues, trusted mask, dominant replica) for one extended Hamiltonian.

    Sorted by folded value.
    """
    es = eig_hermitian(extended_hamiltonian(spec, rspec, k))
    replica = _dominant_replica(es.eigenvectors, rspec)
    folded = fold(es.eigenvalues, spec.omega)
    order = np.argsort(folded, kind="stable")
    return folded[order], _trust(replica, rspec)[order], replica[order]


def replica_bands(spec: LatticeSpec, rspec: ReplicaSpec, k_grid) -> ReplicaBands:
    """Folded replica band structure on ``k_grid`` (rad)."""
    _require_driven(spec)
    ks = np.asarray(k_grid, dtype=float)
    mats = np.stack([extended_hamiltonian(spec, rspec, float(k)) for k in ks])
    es = eig_hermitian(mats)
    replica = _dominant_replica(es.eigenvectors, rspec)
    folded = fold(es.eigenvalues, spec.omega)
    order = np.argsort(folded, axis=-1, kind="stable")
    return ReplicaBands(
        k_grid=ks,
        bands=np.take_along_axis(folded, order, axis=-1),
        trusted=np.take_along_axis(_trust(replica, rspec), order, axis=-1),
        replica=np.take_along_axis(replica, order, axis=-1),
        omega=spec.omega,
    )


def floquet_quasienergies(u: np.ndarray, period: float) -> np.ndarray:
    """Quasienergies of ``u`` on any branch (only meaningful modulo omega)."""
    try:
        return log_unitary(u).eigenphases / period
    except BranchAmbiguity:
        shift = 0.5
        return (log_unitary(np.exp(-1j * shift) * u).eigenphases - shift) / period


def _hausdorff(a: np.ndarray, b: np.ndarray, omega: float) -> float:
    d = circular_distance(a[:, None], b[None, :], omega)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def replica_vs_floquet(spec: LatticeSpec, rspec: ReplicaSpec, k_grid, plan: PropagatorPlan | None = None) -> float:
    """Largest per-k Hausdorff distance (mod omega) between replica and Floquet quasienergies.

    Only eigenvectors centred on replica 0 enter: a ladder copy one cell from
    the truncation edge keeps an error of order J_2(2 delta_kappa / omega)**2
    omega however large n_max is, while the central copy converges with n_max.
    """
    _require_driven(spec)
    bspec = spec if spec.boundary == BLOCH else spec.as_bloch()
    ks = np.asarray(k_grid, dtype=float)
    bands = replica_bands(bspec, rspec, ks)
    u = floquet_operator(bspec, plan, k=ks)
    worst = 0.0
    for j in range(len(ks)):
        eps = floquet_quasienergies(u[j], bspec.period)
        worst = max(worst, _hausdorff(bands.bands[j][bands.replica[j] == 0], eps, bspec.omega))
    return worst
