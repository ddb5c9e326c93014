"""Floquet operator, quasienergies, gaps and the pi-gap winding invariant."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchAmbiguity, ChiralityViolation, DriveError, GapClosedError, ResolutionError
from .evolution import PropagatorPlan, propagator
from .lattice import BLOCH, LatticeSpec
from .numerics import eig_hermitian, log_unitary, dagger

CHIRAL_LEAKAGE_TOL = 1e-6
MIN_PI_GAP = 0.05  # rad; below this the pi-gap invariant is ill-defined
WINDING_TOL = 1e-3
MAX_PHASE_STEP = math.pi / 2
BRANCH_RETRY_DK = 1e-6 * 2 * math.pi


@dataclass(frozen=True)
class FloquetSpectrum:
    """Eigenphases phi in (-pi, pi] (ascending) of U(Lambda) = exp(-i H_eff Lambda)."""

    eigenphases: np.ndarray
    quasienergies: np.ndarray
    eigenvectors: np.ndarray
    period: float

    def near_pi(self, tol: float = 0.05) -> np.ndarray:
        """Indices of eigenphases with pi - |phi| < tol."""
        return np.flatnonzero(np.pi - np.abs(self.eigenphases) < tol)


@dataclass(frozen=True)
class GapReport:
    zero_gap: float
    pi_gap: float


@dataclass(frozen=True)
class InvariantResult:
    raw_winding: float
    g_pi: int
    k_points: int
    max_phase_step: float
    pi_gap: float


def floquet_operator(spec: LatticeSpec, plan: PropagatorPlan | None = None, disorder=None, k=None) -> np.ndarray:
    """One-period evolution operator U(Lambda) = U(Lambda, 0)."""
    if not spec.driven:
        raise DriveError("the Floquet operator needs omega > 0; use the static Hamiltonian instead", "omega")
    return propagator(spec, 0.0, spec.period, plan, disorder, k)


def quasienergy_spectrum(u, Lambda: float) -> FloquetSpectrum:
    res = log_unitary(u)
    return FloquetSpectrum(res.eigenphases, res.eigenphases / Lambda, res.eigenvectors, float(Lambda))


def gap_report(spectrum) -> GapReport:
    """Gap widths at quasienergy 0 and pi.

    ``spectrum`` is a :class:`FloquetSpectrum` or any array of eigenphases
    (for instance a whole Bloch sweep, k x bands).
    """
    phases = spectrum.eigenphases if isinstance(spectrum, FloquetSpectrum) else np.asarray(spectrum, dtype=float)
    phases = np.abs(np.ravel(phases))
    if phases.size == 0:
        raise ValueError("empty spectrum")
    return GapReport(zero_gap=float(2 * phases.min()), pi_gap=float(2 * (np.pi - phases).min()))


def bloch_eigenphases(spec: LatticeSpec, k, plan: PropagatorPlan | None = None) -> np.ndarray:
    """Branch-free |phi| for every k, from the eigenvalues cos(phi) of (U + U^dagger)/2.

    Returns shape (K, 2) of |phi| in [0, pi]; usable even where the (-pi, pi]
    branch is ambiguous.
    """
    bspec = spec if spec.boundary == BLOCH else spec.as_bloch()
    u = floquet_operator(bspec, plan, k=np.atleast_1d(np.asarray(k, dtype=float)))
    cosines = eig_hermitian(0.5 * (u + dagger(u))).eigenvalues
    return np.arccos(np.clip(cosines, -1.0, 1.0))


def _heff_exp(u_full: np.ndarray, fraction: float) -> np.ndarray:
    """exp(+i H_eff Lambda * fraction) from U(Lambda)."""
    res = log_unitary(u_full)
    q = res.eigenvectors
    return (q * np.exp(1j * res.eigenphases * fraction)) @ dagger(q)


def periodized_evolution(spec: LatticeSpec, k: float, z: float, plan: PropagatorPlan | None = None) -> np.ndarray:
    """V(z, k) = U(z, k) exp(i H_eff(k) z); identity at z = 0 and z = Lambda."""
    if spec.boundary != BLOCH:
        spec = spec.as_bloch()
    u_z = propagator(spec, 0.0, z, plan, k=k)
    u_full = floquet_operator(spec, plan, k=k)
    return u_z @ _heff_exp(u_full, z / spec.period)


def chiral_permutation(n: int) -> np.ndarray:
    """Site order with odd (1-based) sites first, so Gamma = diag(I, -I)."""
    return np.concatenate([np.arange(0, n, 2), np.arange(1, n, 2)])


def chiral_blocks(v_half, tol: float = CHIRAL_LEAKAGE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Split V(Lambda/2) into its sublattice-A and sublattice-B diagonal blocks.

    Raises ChiralityViolation if the off-diagonal blocks exceed ``tol``,
    which happens when the time frame is not chiral-symmetric.
    """
    v = np.asarray(v_half, dtype=complex)
    n = v.shape[-1]
    perm = chiral_permutation(n)
    v = v[..., perm, :][..., :, perm]
    na = (n + 1) // 2
    leakage = max(float(np.max(np.abs(v[..., :na, na:]), initial=0.0)), float(np.max(np.abs(v[..., na:, :na]), initial=0.0)))
    if leakage > tol:
        raise ChiralityViolation(f"off-diagonal block leakage {leakage:.3e} exceeds {tol:g}")
    return v[..., :na, :na], v[..., na:, na:]


def winding_of_phase(values) -> tuple[float, float]:
    """Winding of a closed loop of complex numbers.

    Returns (winding, max |phase step|); the first and last entries are the
    same point of the loop.
    """
    z = np.asarray(values, dtype=complex)
    steps = np.angle(z[1:] / z[:-1])
    return float(np.sum(steps) / (2 * np.pi)), float(np.max(np.abs(steps)))


def _half_period_blocks(bspec: LatticeSpec, ks: np.ndarray, plan) -> np.ndarray:
    u_half = propagator(bspec, 0.0, bspec.period / 2, plan, k=ks)
    u_full = propagator(bspec, bspec.period / 2, bspec.period, plan, k=ks) @ u_half
    dets = np.empty(len(ks), dtype=complex)
    for j in range(len(ks)):
        try:
            heff = _heff_exp(u_full[j], 0.5)
        except BranchAmbiguity:
            kk = np.array([ks[j] + BRANCH_RETRY_DK])
            uh = propagator(bspec, 0.0, bspec.period / 2, plan, k=kk)
            uf = propagator(bspec, bspec.period / 2, bspec.period, plan, k=kk) @ uh
            heff = _heff_exp(uf[0], 0.5)
            u_half[j] = uh[0]
        v_plus, _ = chiral_blocks(u_half[j] @ heff)
        dets[j] = np.linalg.det(v_plus)
    return dets


def g_pi(spec: LatticeSpec, k_points: int = 513, plan: PropagatorPlan | None = None) -> InvariantResult:
    """Pi-gap invariant: winding of det V_+(Lambda/2, k) across the Brillouin zone.

    Evaluated in the chiral-symmetric frame theta0 = 0 (shifting the origin
    of z maps any theta0 there without changing the quasienergies).

    Raises
    ------
    DriveError
        For an undriven spec.
    GapClosedError
        If the pi gap over the k-grid is narrower than ``MIN_PI_GAP``.
    ResolutionError
        If adjacent k points differ in phase by ``MAX_PHASE_STEP`` or more, or
        the raw winding is not within ``WINDING_TOL`` of an integer.
    """
    if not spec.driven:
        raise DriveError("g_pi needs a driven spec", "omega")
    bspec = spec.as_bloch() if spec.boundary != BLOCH else spec
    bspec = bspec.replace(theta0=0.0)
    ks = np.linspace(-np.pi, np.pi, k_points)

    abs_phases = bloch_eigenphases(bspec, ks, plan)
    pi_gap = gap_report(abs_phases).pi_gap
    if pi_gap < MIN_PI_GAP:
        raise GapClosedError(f"pi gap {pi_gap:.3e} rad is below {MIN_PI_GAP} rad at omega/Delta = {spec.omega_over_delta:.6g}")

    dets = _half_period_blocks(bspec, ks, plan)
    raw, max_step = winding_of_phase(dets)
    if max_step >= MAX_PHASE_STEP:
        raise ResolutionError(f"phase step {max_step:.3f} rad on a {k_points}-point grid; increase k_points")
    nearest = round(raw)
    if abs(raw - nearest) > WINDING_TOL:
        raise ResolutionError(f"raw winding {raw:.6f} is not within {WINDING_TOL} of an integer")
    return InvariantResult(raw, int(nearest), k_points, max_step, pi_gap)
