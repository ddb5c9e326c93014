"""Driven SSH waveguide lattice: run parameters, coupling calibration, Hamiltonians.

Bond ``i`` (1-based, joining sites ``i`` and ``i + 1``) carries

    kappa_i(z) = kappa0 + (-1)**i * delta_kappa * cos(omega * z + theta0) + offset_i

so at ``theta0 = 0, z = 0`` the boundary bond is the weak one
(``kappa0 - delta_kappa``) and the instantaneous chain is topological.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryMismatch, GeometryError, SpecError

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

OPEN = "open"
BLOCH = "bloch"

# Experimental operating point (mm and mm^-1).
KAPPA0 = 0.042
DELTA_KAPPA = 0.02
LENGTH = 400.0
G0 = 2.6
A0 = 0.8
DEFAULT_DISORDER = 0.022


@dataclass(frozen=True)
class LatticeSpec:
    """Physical and drive parameters of one run.

    ``omega`` is in rad/mm; ``omega == 0`` means an undriven (static) chain
    whose bonds are frozen at their ``z = 0`` values, so a static dimerized
    array is ``omega=0, delta_kappa>0``.
    """

    N: int
    L: float = LENGTH
    kappa0: float = KAPPA0
    delta_kappa: float = DELTA_KAPPA
    omega: float = 0.0
    theta0: float = 0.0
    beta0: float = 0.0
    boundary: str = OPEN

    def __post_init__(self):
        if isinstance(self.N, bool) or not isinstance(self.N, (int, np.integer)):
            raise SpecError(f"must be an integer, got {self.N!r}", "N")
        object.__setattr__(self, "N", int(self.N))
        for name in ("L", "kappa0", "delta_kappa", "omega", "theta0", "beta0"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
                raise SpecError(f"must be a real number, got {value!r}", name)
            if not math.isfinite(value):
                raise SpecError("must be finite", name)
            object.__setattr__(self, name, float(value))
        if self.boundary not in (OPEN, BLOCH):
            raise SpecError(f"must be 'open' or 'bloch', got {self.boundary!r}", "boundary")
        if self.boundary == OPEN and self.N < 2:
            raise SpecError("open chains need N >= 2", "N")
        if self.boundary == BLOCH and (self.N < 2 or self.N % 2):
            raise SpecError("Bloch interpretation needs an even N >= 2", "N")
        if self.L <= 0:
            raise SpecError("must be positive", "L")
        if self.kappa0 <= 0:
            raise SpecError("must be positive", "kappa0")
        if not 0 <= self.delta_kappa < self.kappa0:
            raise SpecError("need 0 <= delta_kappa < kappa0 so every coupling stays positive", "delta_kappa")
        if self.omega < 0:
            raise SpecError("must be >= 0", "omega")

    @classmethod
    def from_reduced_frequency(cls, n_Lambda: float, **kwargs) -> "LatticeSpec":
        """Build a spec with ``omega = n_Lambda * 2 pi / L``."""
        L = float(kwargs.get("L", LENGTH))
        return cls(omega=n_Lambda * 2 * math.pi / L, **kwargs)

    @classmethod
    def from_omega_over_delta(cls, ratio: float, **kwargs) -> "LatticeSpec":
        """Build a spec with ``omega = ratio * 4 kappa0``."""
        kappa0 = float(kwargs.get("kappa0", KAPPA0))
        return cls(omega=ratio * 4 * kappa0, **kwargs)

    @property
    def driven(self) -> bool:
        return self.omega > 0

    @property
    def period(self) -> float:
        """Drive period Lambda = 2 pi / omega (mm); ``inf`` when undriven."""
        return 2 * math.pi / self.omega if self.driven else math.inf

    @property
    def bandwidth(self) -> float:
        """Bandwidth of the undriven chain, Delta = 4 kappa0."""
        return 4 * self.kappa0

    @property
    def omega_over_delta(self) -> float:
        return self.omega / self.bandwidth

    @property
    def n_Lambda(self) -> float:
        return self.omega * self.L / (2 * math.pi)

    def replace(self, **changes) -> "LatticeSpec":
        return dataclasses.replace(self, **changes)

    def as_bloch(self) -> "LatticeSpec":
        n = self.N + (self.N % 2)
        return self.replace(boundary=BLOCH, N=n)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class GeometryMap:
    """Exponential coupling law kappa(G) = prefactor * exp(-G / decay_length)."""

    g0: float = G0
    A0: float = A0
    Lambda: float = math.inf
    decay_length: float = 2 * A0 * KAPPA0 / DELTA_KAPPA
    prefactor: float = KAPPA0 * math.exp(G0 / (2 * A0 * KAPPA0 / DELTA_KAPPA))

    def __post_init__(self):
        if self.g0 - 2 * self.A0 <= 0:
            raise GeometryError("g0 - 2 A0 must be positive (waveguides would touch)", "A0")
        if self.decay_length <= 0 or self.prefactor <= 0:
            raise GeometryError("decay_length and prefactor must be positive", "decay_length")
        if self.Lambda <= 0:
            raise GeometryError("must be positive", "Lambda")

    @classmethod
    def calibrated(
        cls,
        kappa0: float = KAPPA0,
        delta_kappa: float = DELTA_KAPPA,
        g0: float = G0,
        A0: float = A0,
        Lambda: float = math.inf,
    ) -> "GeometryMap":
        """Fix (prefactor, decay_length) so kappa(g0) = kappa0 and |kappa'(g0)| 2 A0 = delta_kappa."""
        if delta_kappa <= 0:
            raise GeometryError("calibration needs delta_kappa > 0", "delta_kappa")
        d = 2 * A0 * kappa0 / delta_kappa
        return cls(g0=g0, A0=A0, Lambda=Lambda, decay_length=d, prefactor=kappa0 * math.exp(g0 / d))

    def spacing(self, z, sign: int = 1, theta0: float = 0.0):
        """G(z) = g0 + sign * 2 A0 cos(2 pi z / Lambda + theta0)."""
        return self.g0 + sign * 2 * self.A0 * np.cos(2 * np.pi * np.asarray(z) / self.Lambda + theta0)

    def coupling(self, G):
        return geometry_to_coupling(self, G)


def geometry_to_coupling(gmap: GeometryMap, G):
    """Coupling constant (mm^-1) between waveguides at spacing ``G`` (mm)."""
    G = np.asarray(G, dtype=float)
    if np.any(G <= 0):
        raise GeometryError("spacing must be positive", "G")
    kappa = gmap.prefactor * np.exp(-G / gmap.decay_length)
    return float(kappa) if kappa.ndim == 0 else kappa


@dataclass(frozen=True)
class DisorderSpec:
    """Static, purely off-diagonal bond disorder: offsets uniform on [-amplitude, amplitude]."""

    amplitude: float = DEFAULT_DISORDER
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise SpecError("must be >= 0", "amplitude")
        if not 0 <= int(self.seed) < 2**64:
            raise SpecError("must be a 64-bit unsigned integer", "seed")


@dataclass(frozen=True)
class BondProfile:
    """Per-bond values (mm^-1), bond i = 1..N-1 stored at index i - 1."""

    bonds: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.bonds)


def _rng(seed: int) -> np.random.Generator:
    # Philox4x64-10: counter-based, constants fixed by Salmon et al. (SC'11).
    return np.random.Generator(np.random.Philox(int(seed)))


def apply_disorder(spec: LatticeSpec, dis: DisorderSpec) -> BondProfile:
    """Draw the N-1 static bond offsets for ``dis``.

    The offsets are i.i.d. uniform on [-amplitude, amplitude) from a Philox
    generator keyed by ``dis.seed``; identical seeds give bitwise identical
    offsets.
    """
    limit = spec.kappa0 - spec.delta_kappa
    if dis.amplitude > limit:
        raise SpecError(
            f"amplitude {dis.amplitude} exceeds kappa0 - delta_kappa = {limit:.6g}; couplings could turn negative",
            "amplitude",
        )
    if dis.amplitude == 0:
        return BondProfile(np.zeros(spec.N - 1))
    return BondProfile(_rng(dis.seed).uniform(-dis.amplitude, dis.amplitude, spec.N - 1))


def _offsets(spec: LatticeSpec, disorder) -> np.ndarray:
    if disorder is None:
        return np.zeros(spec.N - 1)
    if isinstance(disorder, DisorderSpec):
        disorder = apply_disorder(spec, disorder)
    offsets = np.asarray(disorder.bonds if isinstance(disorder, BondProfile) else disorder, dtype=float)
    if offsets.shape != (spec.N - 1,):
        raise SpecError(f"expected {spec.N - 1} bond offsets, got shape {offsets.shape}", "disorder")
    return offsets


def drive(spec: LatticeSpec, z) -> np.ndarray:
    """cos(omega z + theta0); the static case evaluates at z = 0."""
    return np.cos(spec.omega * np.asarray(z, dtype=float) + spec.theta0)


def stagger(n: int) -> np.ndarray:
    """(-1)**i for bonds i = 1..n-1."""
    return np.where(np.arange(1, n) % 2 == 0, 1.0, -1.0)


def bond_profile(spec: LatticeSpec, z, disorder=None) -> np.ndarray:
    """Bond values at ``z``; shape (..., N-1) for array-valued ``z``."""
    c = drive(spec, z)[..., None]
    return spec.kappa0 + stagger(spec.N) * spec.delta_kappa * c + _offsets(spec, disorder)


def chain_matrix(bonds, diagonal: float = 0.0) -> np.ndarray:
    """Real symmetric tridiagonal matrix (..., n, n) from bonds (..., n-1)."""
    bonds = np.asarray(bonds, dtype=float)
    n = bonds.shape[-1] + 1
    h = np.zeros(bonds.shape[:-1] + (n, n))
    i = np.arange(n - 1)
    h[..., i, i + 1] = bonds
    h[..., i + 1, i] = bonds
    if diagonal:
        h[..., np.arange(n), np.arange(n)] = diagonal
    return h


def hamiltonian_at(spec: LatticeSpec, z, disorder=None) -> np.ndarray:
    """Open-chain Hamiltonian H(z) of shape (N, N), or (..., N, N) for array ``z``.

    ``disorder`` may be a :class:`DisorderSpec`, a :class:`BondProfile` or an
    (N-1,) array of static bond offsets.
    """
    if spec.boundary != OPEN:
        raise BoundaryMismatch("hamiltonian_at needs an open-boundary spec", "boundary")
    return chain_matrix(bond_profile(spec, z, disorder), spec.beta0)


def bloch_hamiltonian(spec: LatticeSpec, k, z) -> np.ndarray:
    """Two-band Bloch Hamiltonian [[0, h], [h*, 0]], h = v + w exp(-ik).

    ``k`` and ``z`` broadcast against each other; output shape is
    ``broadcast(k, z).shape + (2, 2)``.
    """
    if spec.boundary != BLOCH:
        raise BoundaryMismatch("bloch_hamiltonian needs a Bloch spec", "boundary")
    k = np.asarray(k, dtype=float)
    c = drive(spec, z)
    v = spec.kappa0 - spec.delta_kappa * c
    w = spec.kappa0 + spec.delta_kappa * c
    h = v + w * np.exp(-1j * k)
    out = np.zeros(np.shape(h) + (2, 2), dtype=complex)
    out[..., 0, 1] = h
    out[..., 1, 0] = np.conj(h)
    return out


def fourier_components(spec: LatticeSpec, k=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Harmonics of H(z) = H0 + Hplus exp(i omega z) + Hminus exp(-i omega z).

    Open chains give N x N blocks; passing ``k`` gives the 2 x 2 Bloch blocks
    (the boundary field of ``spec`` is then ignored).
    """
    if k is None:
        if spec.boundary != OPEN:
            raise BoundaryMismatch("open-chain harmonics need an open spec; pass k for Bloch blocks", "boundary")
        h0 = chain_matrix(np.full(spec.N - 1, spec.kappa0), spec.beta0).astype(complex)
        hc = chain_matrix(stagger(spec.N) * spec.delta_kappa).astype(complex)
    else:
        e = np.exp(-1j * float(k))
        h0 = np.array([[0, spec.kappa0 * (1 + e)], [0, 0]], dtype=complex)
        h0[1, 0] = np.conj(h0[0, 1])
        hc = np.array([[0, spec.delta_kappa * (e - 1)], [0, 0]], dtype=complex)
        hc[1, 0] = np.conj(hc[0, 1])
    hplus = 0.5 * hc * np.exp(1j * spec.theta0)
    return h0, hplus, np.conj(hplus.T)


_SPEC_KEYS = {"N", "L", "kappa0", "delta_kappa", "omega", "n_Lambda", "theta0", "beta0", "boundary"}
_GEOMETRY_KEYS = {"g0", "A0", "Lambda", "decay_length", "prefactor"}
_DISORDER_KEYS = {"amplitude", "seed"}


@dataclass(frozen=True)
class RunConfig:
    spec: LatticeSpec
    geometry: GeometryMap | None = None
    disorder: DisorderSpec | None = None


def spec_from_mapping(data: dict) -> LatticeSpec:
    """Validate a flat mapping of LatticeSpec fields (``n_Lambda`` allowed instead of ``omega``)."""
    unknown = set(data) - _SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown key(s) {sorted(unknown)}", sorted(unknown)[0])
    if "N" not in data:
        raise SpecError("required", "N")
    fields = dict(data)
    if "omega" in fields and "n_Lambda" in fields:
        raise SpecError("give either omega or n_Lambda, not both", "n_Lambda")
    if "n_Lambda" in fields:
        n_lambda = fields.pop("n_Lambda")
        if isinstance(n_lambda, bool) or not isinstance(n_lambda, (int, float)):
            raise SpecError(f"must be a number, got {n_lambda!r}", "n_Lambda")
        return LatticeSpec.from_reduced_frequency(n_lambda, **fields)
    return LatticeSpec(**fields)


def _table(data: dict, name: str, keys: set) -> dict | None:
    table = data.get(name)
    if table is None:
        return None
    if not isinstance(table, dict):
        raise SpecError("must be a table", name)
    unknown = set(table) - keys
    if unknown:
        raise SpecError(f"unknown key(s) {sorted(unknown)} in [{name}]", name)
    return table


def parse_config(text: str) -> RunConfig:
    """Parse a TOML run document: LatticeSpec keys plus optional [geometry] / [disorder]."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SpecError(f"malformed config: {exc}") from exc
    geometry = _table(data, "geometry", _GEOMETRY_KEYS)
    disorder = _table(data, "disorder", _DISORDER_KEYS)
    flat = {k: v for k, v in data.items() if k not in ("geometry", "disorder")}
    spec = spec_from_mapping(flat)
    gmap = None
    if geometry is not None:
        if {"decay_length", "prefactor"} <= set(geometry):
            gmap = GeometryMap(**geometry)
        else:
            if {"decay_length", "prefactor"} & set(geometry):
                raise SpecError("give both decay_length and prefactor or neither", "geometry")
            kwargs = dict(geometry)
            if "Lambda" not in kwargs and spec.driven:
                kwargs["Lambda"] = spec.period
            gmap = GeometryMap.calibrated(spec.kappa0, spec.delta_kappa, **kwargs)
    dis = DisorderSpec(**disorder) if disorder is not None else None
    if dis is not None:
        apply_disorder(spec, dis)
    return RunConfig(spec, gmap, dis)


def parse_spec(text: str) -> LatticeSpec:
    return parse_config(text).spec
