"""Time-ordered propagation along z with the midpoint exponential rule.

Substeps live on a grid anchored at z = 0 with spacing Lambda / steps_per_period.
An interval [z0, z1] is cut at every grid point inside it; each piece
contributes exp(-i H(z_mid) dz).  Because H is Lambda-periodic, a full grid cell
depends only on its index modulo steps_per_period, so the step exponentials of
one period are computed once and reused for every later period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryMismatch, PlanError, SpecError, StateError
from .lattice import BLOCH, OPEN, LatticeSpec, apply_disorder, bloch_hamiltonian, hamiltonian_at
from .numerics import expm_skew_hermitian

MIDPOINT = "midpoint-exponential"
DEFAULT_SAMPLES = 2048
NORM_TOL = 1e-12
_GRID_TOL = 1e-9  # fraction of a cell below which a point counts as on the grid


@dataclass(frozen=True)
class PropagatorPlan:
    steps_per_period: int = 256
    scheme: str = MIDPOINT

    def __post_init__(self):
        if isinstance(self.steps_per_period, bool) or not isinstance(self.steps_per_period, (int, np.integer)):
            raise PlanError("must be an integer", "steps_per_period")
        if self.steps_per_period < 16:
            raise PlanError(f"need at least 16 steps per period, got {self.steps_per_period}", "steps_per_period")
        if self.scheme != MIDPOINT:
            raise PlanError(f"unsupported scheme {self.scheme!r}", "scheme")


@dataclass(frozen=True)
class StateTrace:
    """Complex amplitudes (samples x sites) at ascending ``z_samples`` (mm)."""

    z_samples: np.ndarray
    amplitudes: np.ndarray

    @property
    def intensities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def boundary_fraction(self, sites=(0, 1), sample: int = -1) -> float:
        """Intensity fraction on ``sites`` (0-based) at one sample, default the last."""
        return float(np.sum(self.intensities[sample, list(sites)]))

    def mean_profile(self) -> np.ndarray:
        return self.intensities.mean(axis=0)


def _resolve_disorder(spec: LatticeSpec, disorder):
    if disorder is None or spec.boundary != OPEN:
        return None
    if hasattr(disorder, "seed"):
        return apply_disorder(spec, disorder)
    return disorder


def _cells(spec: LatticeSpec, z0: float, z1: float, plan: PropagatorPlan):
    """Cut [z0, z1] at grid points.  Returns (edges, residues): residue >= 0 marks a full cell."""
    if z1 < z0:
        raise SpecError(f"need z1 >= z0, got z0={z0}, z1={z1}", "z1")
    if z1 == z0:
        return np.array([z0]), np.zeros(0, dtype=int)
    if not spec.driven:
        return np.array([z0, z1]), np.array([-1])
    dz = spec.period / plan.steps_per_period
    a, b = z0 / dz, z1 / dz
    ia = round(a) if abs(a - round(a)) < _GRID_TOL else math.floor(a)
    ib = round(b) if abs(b - round(b)) < _GRID_TOL else math.ceil(b)
    inner = np.arange(ia + 1, ib)
    edges = np.concatenate([[z0], inner * dz, [z1]])
    left = np.concatenate([[ia], inner])
    widths = np.diff(edges)
    full = np.abs(widths - dz) < _GRID_TOL * dz
    residues = np.where(full, left % plan.steps_per_period, -1)
    return edges, residues


def _hamiltonians(spec: LatticeSpec, z, disorder, k):
    if spec.boundary == BLOCH:
        if k is None:
            raise BoundaryMismatch("Bloch propagation needs a momentum k", "k")
        k = np.asarray(k, dtype=float)
        return bloch_hamiltonian(spec, k[..., None], np.asarray(z)[(None,) * k.ndim])
    if k is not None:
        raise BoundaryMismatch("momentum k given for an open-boundary spec", "k")
    return hamiltonian_at(spec, z, disorder)


def _step_unitaries(spec, edges, residues, plan, disorder, k, extra=None):
    """Step exponentials for each cell, plus ``extra`` (start, width) partial steps.

    Returns arrays indexed along the second-to-last-but-one axis: cells first,
    then extras.  With array-valued ``k`` the leading axis is momentum.
    """
    mids, widths = [], []
    unique_res = np.unique(residues[residues >= 0])
    slot = {}
    if spec.driven:
        dz = spec.period / plan.steps_per_period
        for r in unique_res:
            slot[r] = len(mids)
            mids.append((r + 0.5) * dz)
            widths.append(dz)
    index = np.empty(len(residues), dtype=int)
    for j, r in enumerate(residues):
        if r >= 0:
            index[j] = slot[r]
        else:
            index[j] = len(mids)
            mids.append(0.5 * (edges[j] + edges[j + 1]))
            widths.append(edges[j + 1] - edges[j])
    extra_index = []
    for start, width in extra or ():
        extra_index.append(len(mids))
        mids.append(start + 0.5 * width)
        widths.append(width)
    if not mids:
        return None, index, np.array(extra_index, dtype=int)
    h = _hamiltonians(spec, np.array(mids), disorder, k)
    steps = expm_skew_hermitian(h, np.array(widths))
    return steps, index, np.array(extra_index, dtype=int)


def _dimension(spec: LatticeSpec) -> int:
    return 2 if spec.boundary == BLOCH else spec.N


def propagator(spec: LatticeSpec, z0: float, z1: float, plan: PropagatorPlan | None = None, disorder=None, k=None):
    """Time-ordered evolution operator U(z1, z0).

    Parameters
    ----------
    spec : LatticeSpec
        Open chain, or Bloch spec together with ``k``.
    z0, z1 : float
        Start and end (mm), ``z1 >= z0``.
    plan : PropagatorPlan, optional
    disorder : DisorderSpec, BondProfile or array, optional
        Static bond offsets (open chains only).
    k : float or array, optional
        Bloch momentum; an array of K momenta returns a (K, 2, 2) stack.
    """
    plan = plan or PropagatorPlan()
    disorder = _resolve_disorder(spec, disorder)
    edges, residues = _cells(spec, float(z0), float(z1), plan)
    n = _dimension(spec)
    batch = np.shape(k) if (k is not None and spec.boundary == BLOCH) else ()
    u = np.broadcast_to(np.eye(n, dtype=complex), batch + (n, n)).copy()
    if len(residues) == 0:
        return u
    steps, index, _ = _step_unitaries(spec, edges, residues, plan, disorder, k)
    for j in index:
        u = steps[..., j, :, :] @ u
    return u


def _check_state(spec: LatticeSpec, psi0) -> np.ndarray:
    if spec.boundary != OPEN:
        raise BoundaryMismatch("state propagation needs an open chain", "boundary")
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (spec.N,):
        raise StateError(f"expected a length-{spec.N} state, got shape {psi.shape}", "psi0")
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1) > NORM_TOL:
        raise StateError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL:g}", "psi0")
    return psi


def injection_state(n: int, site: int = 0) -> np.ndarray:
    """Single-waveguide excitation e_site (0-based)."""
    psi = np.zeros(n, dtype=complex)
    psi[site] = 1.0
    return psi


def evolve_state(
    spec: LatticeSpec,
    psi0,
    plan: PropagatorPlan | None = None,
    sample_count: int = DEFAULT_SAMPLES,
    disorder=None,
) -> StateTrace:
    """Evolve ``psi0`` over [0, L] and sample it at ``sample_count`` uniform z values."""
    plan = plan or PropagatorPlan()
    psi = _check_state(spec, psi0)
    if sample_count < 2:
        raise SpecError("need at least 2 samples", "sample_count")
    if spec.driven and spec.period > spec.L * (1 + 1e-12):
        raise SpecError(f"period {spec.period:.6g} mm exceeds L = {spec.L} mm", "omega")
    disorder = _resolve_disorder(spec, disorder)
    z = np.linspace(0.0, spec.L, sample_count)
    out = np.empty((sample_count, spec.N), dtype=complex)
    out[0] = psi

    if not spec.driven:
        step = expm_skew_hermitian(hamiltonian_at(spec, 0.0, disorder), z[1] - z[0])
        for j in range(1, sample_count):
            psi = step @ psi
            out[j] = psi
        return StateTrace(z, out)

    edges, residues = _cells(spec, 0.0, spec.L, plan)
    dz = spec.period / plan.steps_per_period
    cell = np.clip(np.searchsorted(edges, z, side="right") - 1, 0, len(edges) - 1)
    offset = z - edges[cell]
    on_grid = offset <= _GRID_TOL * dz
    extra = [(edges[c], off) for c, off, g in zip(cell, offset, on_grid) if not g]
    steps, index, extra_index = _step_unitaries(spec, edges, residues, plan, disorder, None, extra)

    pending = np.flatnonzero(~on_grid)
    extra_of = dict(zip(pending, extra_index))
    order = np.argsort(cell, kind="stable")
    current = 0
    for j in order:
        while current < cell[j]:
            psi = steps[index[current]] @ psi
            current += 1
        out[j] = psi if on_grid[j] else steps[extra_of[j]] @ psi
    return StateTrace(z, out)


def final_state(spec: LatticeSpec, psi0, plan: PropagatorPlan | None = None, disorder=None) -> np.ndarray:
    """Amplitudes at z = L."""
    psi = _check_state(spec, psi0)
    return propagator(spec, 0.0, spec.L, plan, disorder) @ psi


def stroboscopic_trace(spec: LatticeSpec, psi0, plan: PropagatorPlan | None = None, periods: int = 3, disorder=None) -> StateTrace:
    """Samples at z = m Lambda, m = 0..periods, by repeated Floquet-operator application."""
    psi = _check_state(spec, psi0)
    if not spec.driven:
        raise SpecError("stroboscopic sampling needs a driven spec", "omega")
    u = propagator(spec, 0.0, spec.period, plan, disorder)
    out = np.empty((periods + 1, spec.N), dtype=complex)
    out[0] = psi
    for m in range(1, periods + 1):
        psi = u @ psi
        out[m] = psi
    return StateTrace(np.arange(periods + 1) * spec.period, out)
