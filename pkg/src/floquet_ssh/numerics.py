"""Dense complex linear algebra: Hermitian eigensolver, exp(-iHt), unitary log.

Every routine accepts plain ``numpy`` arrays and stacks ``(..., n, n)``.  The
eigensolver is a row-cyclic complex Jacobi method compiled with numba.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numba
import numpy as np

from .errors import (
    BranchAmbiguity,
    ConvergenceFailure,
    HermiticityViolation,
    UnitarityViolation,
)

# Tolerances, all in one place.
HERMITIAN_TOL = 1e-12  # relative to max |H_ij|
EIG_RESIDUAL_TOL = 1e-10  # relative reconstruction residual and orthonormality
EXPM_UNITARY_TOL = 1e-10
LOG_UNITARY_TOL = 1e-8  # unitarity precondition and reconstruction of log_unitary
BRANCH_TOL = 1e-12  # eigenphases in (-pi, -pi + BRANCH_TOL) are ambiguous
CLUSTER_TOL = 1e-6  # eigenvalue separation below which A-eigenvectors are refined
JACOBI_OFF_TOL = 1e-14  # off-diagonal Frobenius norm relative to ||A||_F
JACOBI_MAX_SWEEPS = 60


@dataclass(frozen=True)
class HermitianEigenSystem:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


@dataclass(frozen=True)
class UnitaryLogResult:
    """``hermitian_log`` is the Hermitian H with U = exp(-iH).

    ``eigenphases`` lie in (-pi, pi], ascending, with matching
    ``eigenvectors`` columns.
    """

    hermitian_log: np.ndarray
    eigenphases: np.ndarray
    eigenvectors: np.ndarray


def as_complex_matrix(a, *, square: bool = True, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a complex array of shape (..., rows, cols) after validation."""
    m = np.asarray(a, dtype=complex)
    if m.ndim < 2:
        raise ValueError(f"{name} must be at least 2-D, got shape {m.shape}")
    if square and m.shape[-1] != m.shape[-2]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    asym = max_abs(h - dagger(h))
    if asym > tol * max_abs(h):
        raise HermiticityViolation(asym, tol)


def unitarity_defect(u: np.ndarray) -> float:
    n = u.shape[-1]
    return max_abs(dagger(u) @ u - np.eye(n))


@numba.njit(cache=True)
def _jacobi_kernel(a, v, tol, max_sweeps):
    """Row-cyclic complex Jacobi on each matrix of the stack ``a`` (in place).

    Returns the index of the first matrix that failed to converge, or -1.
    """
    nb, n, _ = a.shape
    for b in range(nb):
        scale = 0.0
        for i in range(n):
            for j in range(n):
                scale += a[b, i, j].real ** 2 + a[b, i, j].imag ** 2
        limit = (tol * math.sqrt(scale)) ** 2
        converged = False
        for _ in range(max_sweeps):
            off = 0.0
            for i in range(n):
                for j in range(n):
                    if i != j:
                        off += a[b, i, j].real ** 2 + a[b, i, j].imag ** 2
            if off <= limit:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = a[b, p, q]
                    mag = abs(apq)
                    if mag == 0.0:
                        continue
                    theta = 0.5 * math.atan2(2.0 * mag, a[b, p, p].real - a[b, q, q].real)
                    if theta > 0.25 * math.pi:
                        theta -= 0.5 * math.pi
                    c = math.cos(theta)
                    s = math.sin(theta)
                    e = apq / mag
                    # J on (p, q) is [[e c, -e s], [s, c]]; A <- J^dagger A J, V <- V J.
                    j00 = e * c
                    j01 = -e * s
                    for k in range(n):
                        x = a[b, k, p]
                        y = a[b, k, q]
                        a[b, k, p] = x * j00 + y * s
                        a[b, k, q] = x * j01 + y * c
                    for k in range(n):
                        x = a[b, p, k]
                        y = a[b, q, k]
                        a[b, p, k] = j00.conjugate() * x + s * y
                        a[b, q, k] = j01.conjugate() * x + c * y
                    a[b, p, q] = 0.0
                    a[b, q, p] = 0.0
                    for k in range(n):
                        x = v[b, k, p]
                        y = v[b, k, q]
                        v[b, k, p] = x * j00 + y * s
                        v[b, k, q] = x * j01 + y * c
        if not converged:
            return b
    return -1


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Diagonalize a stack (B, n, n) of Hermitian matrices in place."""
    a = np.ascontiguousarray(a, dtype=complex)
    v = np.broadcast_to(np.eye(a.shape[-1], dtype=complex), a.shape).copy()
    failed = _jacobi_kernel(a, v, JACOBI_OFF_TOL, JACOBI_MAX_SWEEPS)
    if failed >= 0:
        raise ConvergenceFailure(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (matrix {failed} of the stack)")
    return np.einsum("bii->bi", a).real.copy(), v


def eig_hermitian(h) -> HermitianEigenSystem:
    """Eigendecomposition of a Hermitian matrix or a stack of them.

    Parameters
    ----------
    h : array_like, shape (..., n, n)
        Hermitian to ``HERMITIAN_TOL`` relative tolerance.

    Returns
    -------
    HermitianEigenSystem
        Ascending eigenvalues, shape (..., n), and eigenvector columns.

    Raises
    ------
    HermiticityViolation
        If ``h`` is not Hermitian.
    ConvergenceFailure
        If the Jacobi sweeps hit the cap or the result fails its residual checks.
    """
    h = as_complex_matrix(h, name="H")
    check_hermitian(h)
    batch = h.shape[:-2]
    n = h.shape[-1]
    a = h.reshape(-1, n, n)
    a = 0.5 * (a + dagger(a))
    w, v = _jacobi(a.copy())
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    es = HermitianEigenSystem(w.reshape(batch + (n,)), v.reshape(batch + (n, n)))

    hmax = np.max(np.abs(a), axis=(-2, -1))
    resid = np.max(np.abs(a - es.reconstruct().reshape(-1, n, n)), axis=(-2, -1))
    ortho = np.max(np.abs(dagger(v) @ v - np.eye(n)), axis=(-2, -1)) if a.size else np.zeros(0)
    if np.any(resid > EIG_RESIDUAL_TOL * hmax) or np.any(ortho > EIG_RESIDUAL_TOL):
        raise ConvergenceFailure(
            f"eigendecomposition residual {float(np.max(resid)):.2e}, orthonormality {float(np.max(ortho)):.2e}"
        )
    return es


def expm_skew_hermitian(h, t=1.0) -> np.ndarray:
    """Return exp(-i H t) for Hermitian ``h``.

    ``t`` may be a scalar or an array broadcastable against the batch shape
    of ``h``.
    """
    es = eig_hermitian(h)
    t = np.asarray(t, dtype=float)
    phases = np.exp(-1j * es.eigenvalues * t[..., None])
    q = es.eigenvectors
    u = (q * phases[..., None, :]) @ dagger(q)
    defect = unitarity_defect(u)
    if defect > EXPM_UNITARY_TOL:
        raise UnitarityViolation(defect, EXPM_UNITARY_TOL)
    return u


def _clusters(values: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group sorted ``values`` into runs whose consecutive gaps are <= tol."""
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    return [c for c in np.split(np.arange(values.size), breaks) if c.size > 1]


def _refine(q: np.ndarray, first: np.ndarray, second: np.ndarray, vals: np.ndarray, depth: int) -> None:
    """Inside each degenerate cluster of ``first``, rotate ``q`` to diagonalize ``second``."""
    for idx in _clusters(vals, CLUSTER_TOL):
        qc = q[:, idx]
        sub = dagger(qc) @ second @ qc
        es = eig_hermitian(0.5 * (sub + dagger(sub)))
        rotated = qc @ es.eigenvectors
        if depth > 0:
            _refine(rotated, second, first, es.eigenvalues, depth - 1)
        q[:, idx] = rotated


def log_unitary(u) -> UnitaryLogResult:
    """Hermitian logarithm of a unitary with eigenphases on the (-pi, pi] branch.

    The commuting Hermitian pair A = (U + U^dagger)/2 and
    B = i(U - U^dagger)/2 (eigenvalues cos(phi) and sin(phi)) is diagonalized
    jointly; eigenphases then come from Rayleigh quotients.

    Raises
    ------
    UnitarityViolation
        If ``max |U^dagger U - I| > LOG_UNITARY_TOL``.
    BranchAmbiguity
        If an eigenphase falls within ``BRANCH_TOL`` of -pi (but not exactly on it).
    """
    u = as_complex_matrix(u, name="U")
    if u.ndim != 2:
        raise ValueError("log_unitary takes a single matrix")
    defect = unitarity_defect(u)
    if defect > LOG_UNITARY_TOL:
        raise UnitarityViolation(defect, LOG_UNITARY_TOL)

    a = 0.5 * (u + dagger(u))
    b = 0.5j * (u - dagger(u))
    es = eig_hermitian(a)
    q = es.eigenvectors.copy()
    _refine(q, a, b, es.eigenvalues, depth=1)

    rayleigh = np.einsum("ij,ik,kj->j", np.conj(q), u, q)
    phases = -np.angle(rayleigh)
    phases[phases == -np.pi] = np.pi
    near_cut = phases < -np.pi + BRANCH_TOL
    if np.any(near_cut):
        raise BranchAmbiguity(
            f"eigenphase {phases[near_cut][0]!r} lies within {BRANCH_TOL:g} of the -pi branch cut"
        )
    order = np.argsort(phases, kind="stable")
    phases = phases[order]
    q = q[:, order]
    log = (q * phases) @ dagger(q)
    log = 0.5 * (log + dagger(log))

    recon = (q * np.exp(-1j * phases)) @ dagger(q)
    err = max_abs(recon - u)
    if err > LOG_UNITARY_TOL:
        raise ConvergenceFailure(f"unitary log reconstruction error {err:.2e}")
    return UnitaryLogResult(log, phases, q)
