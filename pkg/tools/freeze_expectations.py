"""Regenerate tests/data/expectations.json from a standalone fine-step oracle.

The oracle shares no code with the package: it builds H(z) itself, takes
exponentials with numpy.linalg.eigh, and marches on uniform substeps of at
most Lambda / 4096 between consecutive samples.  Only the disorder draws are
taken from the same named generator (Philox, keyed by seed), since the
ensemble is defined by that stream.

Run once, from the repository root:

    python3 tools/freeze_expectations.py
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import numpy as np

KAPPA0, DELTA_KAPPA, L, N = 0.042, 0.02, 400.0, 10
STEPS = 4096
SAMPLES = 2048
AMPLITUDE = 0.022
SEEDS = range(50)

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "expectations.json"


def bonds(z, omega, theta0, dk=DELTA_KAPPA, offsets=None):
    i = np.arange(1, N)
    c = np.cos(omega * np.asarray(z)[..., None] + theta0)
    b = KAPPA0 + (-1.0) ** i * dk * c
    return b if offsets is None else b + offsets


def hamiltonians(b):
    h = np.zeros(b.shape[:-1] + (N, N))
    idx = np.arange(N - 1)
    h[..., idx, idx + 1] = b
    h[..., idx + 1, idx] = b
    return h


def expm(h, dt):
    w, v = np.linalg.eigh(h)
    return np.einsum("...ij,...j,...kj->...ik", v, np.exp(-1j * w * np.asarray(dt)[..., None]), v.conj())


def trace(omega, theta0, dk=DELTA_KAPPA, offsets=None, samples=SAMPLES):
    """|psi|^2 at `samples` uniform z on [0, L] for injection into site 1."""
    z = np.linspace(0.0, L, samples)
    if omega == 0:
        step = expm(hamiltonians(bonds(0.0, 0.0, theta0, dk, offsets)), z[1] - z[0])
        psi = np.zeros(N, complex)
        psi[0] = 1
        out = [np.abs(psi) ** 2]
        for _ in range(samples - 1):
            psi = step @ psi
            out.append(np.abs(psi) ** 2)
        return z, np.array(out)
    dz_max = 2 * math.pi / omega / STEPS
    n_sub = int(math.ceil((z[1] - z[0]) / dz_max - 1e-9))
    edges = np.linspace(0.0, L, (samples - 1) * n_sub + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    steps = expm(hamiltonians(bonds(mids, omega, theta0, dk, offsets)), np.diff(edges))
    psi = np.zeros(N, complex)
    psi[0] = 1
    out = [np.abs(psi) ** 2]
    for j in range(samples - 1):
        for s in steps[j * n_sub : (j + 1) * n_sub]:
            psi = s @ psi
        out.append(np.abs(psi) ** 2)
    return z, np.array(out)


def floquet(omega, theta0, offsets=None):
    lam = 2 * math.pi / omega
    edges = np.linspace(0.0, lam, STEPS + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    steps = expm(hamiltonians(bonds(mids, omega, theta0, offsets=offsets)), np.full(STEPS, lam / STEPS))
    u = np.eye(N, dtype=complex)
    for s in steps:
        u = s @ u
    return u


def end_fraction(n_lambda, offsets=None):
    omega = n_lambda * 2 * math.pi / L
    u = np.linalg.matrix_power(floquet(omega, 0.0, offsets), n_lambda)
    return float(np.sum(np.abs(u[:2, 0]) ** 2))


def tv(p, q):
    p, q = p / p.sum(), q / q.sum()
    return float(0.5 * np.abs(p - q).sum())


def main() -> int:
    w3 = 3 * 2 * math.pi / L
    w20 = 20 * 2 * math.pi / L
    expectations: dict = {"oracle": {"steps_per_period": STEPS, "samples": SAMPLES}}

    _, i2b = trace(0.0, 0.0, dk=0.0)
    _, i2d = trace(0.0, 0.0)
    z3, i2c = trace(w3, 0.0)
    _, i4a = trace(w3, math.pi)
    _, i2a = trace(w20, 0.0)
    _, i4b = trace(w20, math.pi)
    expectations["fig2b_site1_end"] = float(i2b[-1, 0])
    expectations["fig2d_boundary_fraction"] = float(i2d[-1, :2].sum())
    expectations["fig2c_boundary_fraction"] = float(i2c[-1, :2].sum())
    expectations["fig4a_boundary_fraction"] = float(i4a[-1, :2].sum())
    expectations["fig2a_boundary_fraction"] = float(i2a[-1, :2].sum())
    expectations["fig4b_boundary_fraction"] = float(i4b[-1, :2].sum())
    expectations["high_frequency_tv"] = tv(i2a.mean(axis=0), i4b.mean(axis=0))

    u3 = floquet(w3, 0.0)
    psi = np.zeros(N, complex)
    psi[0] = 1
    strobe = []
    for _ in range(3):
        psi = u3 @ psi
        strobe.append(abs(psi[0]) ** 2)
    expectations["fig3d_stroboscopic_variance"] = float(np.var(strobe))
    first = z3 <= 2 * math.pi / w3 * (1 + 1e-12)
    diff = i2c[first, 0] - i2c[first, 1]
    expectations["fig3d_exchange_peak_to_peak"] = float(diff.max() - diff.min())

    ensemble = {}
    for n_lambda in (3, 4):
        fractions = []
        for seed in SEEDS:
            offsets = np.random.Generator(np.random.Philox(seed)).uniform(-AMPLITUDE, AMPLITUDE, N - 1)
            fractions.append(end_fraction(n_lambda, offsets))
        f = np.array(fractions)
        ensemble[str(n_lambda)] = {
            "seeds": list(SEEDS),
            "fractions": fractions,
            "fraction_at_least_0.5": float(np.mean(f >= 0.5)),
            "q10": float(np.quantile(f, 0.1)),
            "clean": end_fraction(n_lambda),
        }
    expectations["ensemble"] = ensemble

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(expectations, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps({k: v for k, v in expectations.items() if k != "ensemble"}, indent=2))
    for key, item in ensemble.items():
        print(f"n_Lambda={key}: clean {item['clean']:.4f}, >=0.5 in {item['fraction_at_least_0.5']:.0%}, q10 {item['q10']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
