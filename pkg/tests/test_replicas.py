import numpy as np
import pytest

from floquet_ssh.errors import DriveError, SpecError
from floquet_ssh.floquet import floquet_operator, quasienergy_spectrum
from floquet_ssh.lattice import LatticeSpec, fourier_components
from floquet_ssh.numerics import eig_hermitian, max_abs
from floquet_ssh.replicas import (
    ReplicaSpec,
    circular_distance,
    extended_hamiltonian,
    fold,
    folded_spectrum,
    replica_bands,
    replica_vs_floquet,
)

KS = np.linspace(-np.pi, np.pi, 101)


def bloch(ratio, **kw):
    return LatticeSpec.from_omega_over_delta(ratio, N=2, boundary="bloch", **kw)


def test_replica_spec():
    assert ReplicaSpec(2).count == 5
    np.testing.assert_array_equal(ReplicaSpec(1).indices, [-1, 0, 1])
    with pytest.raises(SpecError):
        ReplicaSpec(-1)


def test_fold_half_open_zone():
    w = 1.0
    np.testing.assert_allclose(fold([0.5, -0.5, 1.2, -1.7, 3.0], w), [0.5, 0.5, 0.2, 0.3, 0.0], atol=1e-15)
    assert circular_distance(0.49, -0.49, w) == pytest.approx(0.02)


def test_n_max_zero_is_time_average():
    spec = LatticeSpec.from_omega_over_delta(0.5, N=6)
    np.testing.assert_array_equal(extended_hamiltonian(spec, ReplicaSpec(0)), fourier_components(spec)[0])


def test_hermitian_and_dimension():
    spec = LatticeSpec.from_omega_over_delta(0.5, N=40, theta0=0.8)
    h = extended_hamiltonian(spec, ReplicaSpec(2))
    assert h.shape == (200, 200)
    assert max_abs(h - h.conj().T) <= 1e-14


def test_undriven_rejected():
    with pytest.raises(DriveError):
        extended_hamiltonian(LatticeSpec(N=4), ReplicaSpec(1))


@pytest.mark.parametrize("ratio,touching", [(1.0, True), (1 / 3, True), (0.5, False)])
def test_zone_edge_touchings(ratio, touching):
    spec = bloch(ratio)
    bands = replica_bands(spec, ReplicaSpec(5), KS)
    d = bands.zone_edge_distance() / spec.bandwidth
    assert d <= 0.02 if touching else d >= 0.05


def test_bands_inside_zone():
    spec = bloch(0.5)
    bands = replica_bands(spec, ReplicaSpec(3), KS)
    assert np.all(bands.bands > -spec.omega / 2) and np.all(bands.bands <= spec.omega / 2)
    assert bands.bands.shape == (101, 14)
    assert np.all(np.diff(bands.bands, axis=1) >= 0)


def test_bands_continuous_under_refinement():
    spec = bloch(0.5)
    coarse = replica_bands(spec, ReplicaSpec(3), np.linspace(-np.pi, np.pi, 51))
    fine = replica_bands(spec, ReplicaSpec(3), np.linspace(-np.pi, np.pi, 101))
    np.testing.assert_allclose(fine.bands[::2], coarse.bands, atol=1e-12)
    step = np.max(np.abs(np.diff(fine.bands[:, fine.bands.shape[1] // 2])))
    assert step < 0.05 * spec.bandwidth


def test_no_coupling_is_exact():
    assert replica_vs_floquet(bloch(0.5, delta_kappa=0.0), ReplicaSpec(2), KS) <= 1e-10


def test_oracle_equivalence():
    spec = bloch(0.5)
    assert replica_vs_floquet(spec, ReplicaSpec(5), KS) <= 1e-3 * spec.bandwidth


def test_truncation_convergence_monotone():
    spec = bloch(0.5)
    mismatch = [replica_vs_floquet(spec, ReplicaSpec(n), KS[::4]) for n in (1, 2, 3, 5)]
    assert all(a > b for a, b in zip(mismatch, mismatch[1:])), mismatch


@pytest.mark.parametrize("k", [None, 0.7])
def test_ladder_symmetry(k):
    spec = LatticeSpec.from_omega_over_delta(0.5, N=8) if k is None else bloch(0.5)
    rspec = ReplicaSpec(6)
    es = eig_hermitian(extended_hamiltonian(spec, rspec, k))
    d = es.eigenvectors.shape[0] // rspec.count
    weights = (np.abs(es.eigenvectors) ** 2).reshape(rspec.count, d, -1).sum(axis=1)
    centre = rspec.indices @ weights
    # both the eigenvalue and its +omega image must sit away from the truncation edges
    interior = (centre >= -(rspec.n_max - 3)) & (centre + 1 <= rspec.n_max - 3)
    vals = es.eigenvalues[interior]
    shifted = vals + spec.omega
    matched = np.abs(shifted[:, None] - es.eigenvalues[None, :]).min(axis=1)
    assert matched.max() <= 1e-6 * spec.bandwidth


def test_obc_pi_pair_matches_floquet():
    spec = LatticeSpec.from_omega_over_delta(0.5, N=40)
    folded, trusted, replica = folded_spectrum(spec, ReplicaSpec(2))
    near_edge = np.abs(np.abs(folded) - spec.omega / 2)
    pair = np.sort(folded[trusted & (replica == 0)][np.argsort(near_edge[trusted & (replica == 0)])[:2]])
    res = quasienergy_spectrum(floquet_operator(spec), spec.period)
    floquet_pair = res.quasienergies[res.near_pi(0.05)]
    for eps in floquet_pair:
        assert circular_distance(pair, eps, spec.omega).min() <= 1e-3 * spec.bandwidth
