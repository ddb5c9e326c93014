"""Acceptance gate: criteria 1-9, each reported as one PASS/FAIL line.

The lines are printed in pytest's terminal summary, or directly when the
module is run as a script (``python3 tests/test_acceptance.py``).
"""

import json
import math
import time
from pathlib import Path

import numpy as np

from floquet_ssh.evolution import PropagatorPlan, evolve_state, injection_state
from floquet_ssh.floquet import bloch_eigenphases, chiral_blocks, floquet_operator, gap_report, periodized_evolution, quasienergy_spectrum
from floquet_ssh.harness import disorder_ensemble, sweep_invariant, total_variation
from floquet_ssh.lattice import DisorderSpec, LatticeSpec, hamiltonian_at
from floquet_ssh.numerics import eig_hermitian, max_abs, unitarity_defect
from floquet_ssh.replicas import ReplicaSpec, replica_bands, replica_vs_floquet

EXPECTATIONS = json.loads((Path(__file__).parent / "data" / "expectations.json").read_text())
RESULTS: dict[int, str] = {}


def report(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[number] = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    print(RESULTS[number])
    assert ok, RESULTS[number]


def test_criterion_1_phase_diagram():
    t0 = time.perf_counter()
    rows = sweep_invariant([0.4, 0.5, 0.6, 0.8, 1.2, 2.0, 5.0], k_points=513)
    elapsed = time.perf_counter() - t0
    expected = [1, 1, 1, 1, 0, 0, 0]
    got = [r[2] for r in rows]
    raw_ok = all(r[1] is not None and abs(r[1] - r[2]) <= 1e-3 for r in rows)
    worst = max(abs(r[1] - r[2]) for r in rows if r[1] is not None)
    report(1, "G_pi phase diagram", got == expected and raw_ok and elapsed < 10, f"G_pi={got}, max |raw-int|={worst:.1e}, {elapsed:.1f} s")


def test_criterion_2_bulk_edge():
    counts, weights = {}, []
    for ratio in (0.5, 2.0):
        spec = LatticeSpec.from_omega_over_delta(ratio, N=40)
        res = quasienergy_spectrum(floquet_operator(spec), spec.period)
        idx = res.near_pi(0.05)
        counts[ratio] = len(idx)
        if ratio == 0.5:
            weights = [float((np.abs(res.eigenvectors[[0, 1, 38, 39], j]) ** 2).sum()) for j in idx]
    ok = counts[0.5] == 2 and counts[2.0] == 0 and min(weights) >= 0.5
    report(2, "OBC pi modes", ok, f"count(0.5)={counts[0.5]}, count(2)={counts[2.0]}, edge weights={np.round(weights, 3).tolist()}")


def test_criterion_3_zero_gap_closed():
    ks = np.linspace(-np.pi, np.pi, 513)
    gaps = {r: gap_report(bloch_eigenphases(LatticeSpec.from_omega_over_delta(r, N=2, boundary="bloch"), ks)).zero_gap for r in (0.4, 0.5, 0.8, 1.5, 3.0)}
    report(3, "zero gap always closed", max(gaps.values()) <= 0.05, f"max zero_gap={max(gaps.values()):.2e} rad")


def test_criterion_4_replica_touchings():
    ks = np.linspace(-np.pi, np.pi, 101)
    d = {}
    for ratio in (1.0, 1 / 3, 0.5):
        spec = LatticeSpec.from_omega_over_delta(ratio, N=2, boundary="bloch")
        d[ratio] = replica_bands(spec, ReplicaSpec(5), ks).zone_edge_distance() / spec.bandwidth
    ok = d[1.0] <= 0.02 and d[1 / 3] <= 0.02 and d[0.5] >= 0.05
    report(4, "replica touchings", ok, f"edge distance/Delta: 1 -> {d[1.0]:.1e}, 1/3 -> {d[1 / 3]:.1e}, 1/2 -> {d[0.5]:.3f}")


def test_criterion_5_pi_mode_propagation():
    frac = {}
    for theta0 in (0.0, math.pi):
        spec = LatticeSpec.from_reduced_frequency(3, N=10, theta0=theta0)
        frac[theta0] = evolve_state(spec, injection_state(10)).boundary_fraction()
    oracle_ok = abs(frac[0.0] - EXPECTATIONS["fig2c_boundary_fraction"]) <= 1e-4 and abs(frac[math.pi] - EXPECTATIONS["fig4a_boundary_fraction"]) <= 1e-4
    ok = frac[0.0] >= 0.6 and frac[math.pi] <= 0.4 and oracle_ok
    report(
        5,
        "pi-mode propagation",
        ok,
        f"boundary fraction theta0=0: {frac[0.0]:.4f} (need >= 0.6, oracle {EXPECTATIONS['fig2c_boundary_fraction']:.4f}); "
        f"theta0=pi: {frac[math.pi]:.4f} (need <= 0.4)",
    )


def test_criterion_6_high_frequency():
    profiles = [
        evolve_state(LatticeSpec.from_reduced_frequency(20, N=10, theta0=t), injection_state(10)).mean_profile() for t in (0.0, math.pi)
    ]
    tv = total_variation(*profiles)
    ok = tv <= 0.05 and abs(tv - EXPECTATIONS["high_frequency_tv"]) <= 1e-4
    report(6, "high-frequency theta0 insensitivity", ok, f"TV distance {tv:.4f} (oracle {EXPECTATIONS['high_frequency_tv']:.4f})")


def test_criterion_7_disorder():
    share = {}
    for n in (3, 4):
        res = disorder_ensemble(LatticeSpec.from_reduced_frequency(n, N=10), 0.022, 50)
        oracle = EXPECTATIONS["ensemble"][str(n)]
        assert np.allclose(res.fractions, oracle["fractions"], atol=1e-4)
        share[n] = res.fraction_at_least(0.5)
    ok = all(v >= 0.9 for v in share.values())
    report(7, "disorder robustness", ok, "seeds with boundary fraction >= 0.5: " + ", ".join(f"n_Lambda={n}: {v:.0%}" for n, v in share.items()) + " (need >= 90%)")


def _random_case(rng):
    n = int(rng.integers(2, 13))
    spec = LatticeSpec.from_omega_over_delta(
        float(rng.uniform(0.35, 3.0)),
        N=n,
        kappa0=float(rng.uniform(0.02, 0.08)),
        theta0=float(rng.uniform(-math.pi, math.pi)),
    )
    spec = spec.replace(delta_kappa=float(rng.uniform(0.1, 0.9)) * spec.kappa0)
    amp = float(rng.uniform(0, 1)) * (spec.kappa0 - spec.delta_kappa)
    return spec, DisorderSpec(amp, int(rng.integers(0, 2**63)))


def test_criterion_8_property_suite():
    rng = np.random.default_rng(8)
    ratios, worst = [], {"unitarity": 0.0, "norm": 0.0, "V(Lambda)": 0.0, "leakage": 0.0, "residual": 0.0, "orthonormality": 0.0}
    for _ in range(200):
        spec, dis = _random_case(rng)
        u = [floquet_operator(spec, PropagatorPlan(s), dis) for s in (32, 64, 128)]
        if spec.N > 2:
            # a two-site chain has [H(z), H(z')] = 0, so the midpoint rule is exact and the ratio is roundoff
            ratios.append(max_abs(u[0] - u[1]) / max_abs(u[1] - u[2]))
        worst["unitarity"] = max(worst["unitarity"], unitarity_defect(u[1]))
        tr = evolve_state(spec.replace(L=2 * spec.period), injection_state(spec.N, int(rng.integers(spec.N))), sample_count=33, disorder=dis)
        worst["norm"] = max(worst["norm"], float(np.max(np.abs(tr.intensities.sum(axis=1) - 1))))
        bspec = LatticeSpec(N=2, boundary="bloch", kappa0=spec.kappa0, delta_kappa=spec.delta_kappa, omega=spec.omega)
        k = float(rng.uniform(-math.pi, math.pi))
        worst["V(Lambda)"] = max(worst["V(Lambda)"], max_abs(periodized_evolution(bspec, k, bspec.period) - np.eye(2)))
        v_half = periodized_evolution(bspec, k, bspec.period / 2)
        perm_leak = max(abs(v_half[0, 1]), abs(v_half[1, 0]))
        chiral_blocks(v_half)
        worst["leakage"] = max(worst["leakage"], float(perm_leak))
        h = hamiltonian_at(spec, float(rng.uniform(0, spec.L)), dis)
        es = eig_hermitian(h)
        worst["residual"] = max(worst["residual"], max_abs(h - es.reconstruct()) / max_abs(h))
        worst["orthonormality"] = max(worst["orthonormality"], max_abs(es.eigenvectors.conj().T @ es.eigenvectors - np.eye(spec.N)))
    limits = {"unitarity": 1e-9, "norm": 1e-8, "V(Lambda)": 1e-8, "leakage": 1e-6, "residual": 1e-10, "orthonormality": 1e-10}
    ratio_ok = 3.5 <= min(ratios) and max(ratios) <= 4.5
    ok = ratio_ok and all(worst[key] <= limits[key] for key in limits)
    detail = f"convergence ratio in [{min(ratios):.3f}, {max(ratios):.3f}] over {len(ratios)} cases with N > 2; " + ", ".join(f"{key} {worst[key]:.1e}" for key in worst)
    report(8, "numerical property suite (200 cases)", ok, detail)


def test_criterion_9_oracle_equivalence():
    spec = LatticeSpec.from_omega_over_delta(0.5, N=2, boundary="bloch")
    mismatch = replica_vs_floquet(spec, ReplicaSpec(5), np.linspace(-np.pi, np.pi, 101)) / spec.bandwidth
    report(9, "replica vs Floquet quasienergies", mismatch <= 1e-3, f"max mismatch {mismatch:.2e} Delta (need <= 1e-3)")


if __name__ == "__main__":
    import sys

    status = 0
    for name, fn in sorted((n, f) for n, f in globals().items() if n.startswith("test_criterion_")):
        try:
            fn()
        except AssertionError:
            status = 1
    sys.exit(status)
