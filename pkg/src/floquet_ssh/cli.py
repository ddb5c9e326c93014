"""Command-line entry point: ``floquet-ssh <subcommand> [options]``.

Exit status is 0 on success, 2 for invalid input, 3 when a numerical
validity check (gap closure, chirality, convergence, ...) fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalValidityError, SpecError
from .evolution import PropagatorPlan, evolve_state, injection_state
from .floquet import floquet_operator, g_pi, quasienergy_spectrum
from .harness import (
    SCENARIOS,
    OutputManifest,
    ScenarioConfig,
    _Writer,
    disorder_ensemble,
    intensity_rows,
    run_scenario,
    sweep_invariant,
)
from .lattice import DEFAULT_DISORDER, DisorderSpec, RunConfig, parse_config
from .replicas import ReplicaSpec, folded_spectrum, replica_bands

EXIT_OK, EXIT_SPEC, EXIT_NUMERICAL = 0, 2, 3

DEFAULT_CONFIG = "N = 10\nn_Lambda = 3\n"

_GLOBAL_DEFAULTS = {
    "config": None,
    "out": ".",
    "seed": 0,
    "steps_per_period": 256,
    "k_points": 513,
    "format": "csv",
    "workers": 1,
    "verbose": False,
}


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand without
    # the subparser defaults clobbering values given earlier.
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS, help="TOML run document (LatticeSpec keys, [geometry], [disorder])")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base disorder seed, unsigned 64-bit (default: 0)")
    g.add_argument("--steps-per-period", type=int, default=argparse.SUPPRESS, help="midpoint steps per drive period (default: 256)")
    g.add_argument("--k-points", type=int, default=argparse.SUPPRESS, help="Brillouin-zone grid for the invariant (default: 513)")
    g.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="dataset format (default: csv)")
    g.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes for sweeps and ensembles (default: 1)")
    g.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def _parse_override(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise SpecError(f"override must look like key=value, got {text!r}", "set")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="floquet-ssh", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("spectrum", parents=[common], help="open-chain Floquet eigenphases and edge weights")
    sub.add_parser("invariant", parents=[common], help="pi-gap winding invariant G_pi of the Bloch chain")

    p = sub.add_parser("propagate", parents=[common], help="intensity map of a single-site injection over [0, L]")
    p.add_argument("--site", type=int, default=1, help="injected waveguide, 1-based (default: 1)")
    p.add_argument("--samples", type=int, default=2048, help="number of z samples (default: 2048)")

    p = sub.add_parser("replicas", parents=[common], help="folded extended-space spectrum")
    p.add_argument("--n-max", type=int, default=2, help="replicas kept: -n_max..n_max (default: 2)")
    p.add_argument("--bands", type=int, metavar="K", help="Bloch bands on K momenta instead of the open chain")

    p = sub.add_parser("scenario", parents=[common], help="reproduce one figure dataset (or 'all')")
    p.add_argument("scenario_id", choices=[*SCENARIOS, "all"])
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a spec or scenario field (JSON value)")

    p = sub.add_parser("sweep", parents=[common], help="G_pi versus omega/Delta")
    p.add_argument("omega_over_delta", type=float, nargs="+")

    p = sub.add_parser("ensemble", parents=[common], help="disorder ensemble of boundary fractions at z = L")
    p.add_argument("--amplitude", type=float, default=DEFAULT_DISORDER, help=f"disorder amplitude, 1/mm (default: {DEFAULT_DISORDER})")
    p.add_argument("--seeds", type=int, default=50, help="number of seeds (default: 50)")
    return parser


def _load_config(args) -> RunConfig:
    text = Path(args.config).read_text(encoding="utf-8") if args.config else DEFAULT_CONFIG
    return parse_config(text)


def _finish(writer: _Writer, args, echo: dict) -> None:
    manifest = OutputManifest(files=list(writer.files), spec_echo=echo)
    (writer.out_dir / f"{args.command}_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    for f in writer.files:
        print(writer.out_dir / f["path"])


def _echo(args, run: RunConfig | None, **extra) -> dict:
    d = {
        "command": args.command,
        "steps_per_period": args.steps_per_period,
        "k_points": args.k_points,
        "seed": args.seed,
        "format": args.format,
        **extra,
    }
    if run is not None:
        d["spec"] = run.spec.to_dict()
        if run.disorder is not None:
            d["disorder"] = {"amplitude": run.disorder.amplitude, "seed": run.disorder.seed}
    return d


def _disorder(run: RunConfig, args) -> DisorderSpec | None:
    if run.disorder is None:
        return None
    return DisorderSpec(run.disorder.amplitude, args.seed if args.seed_given else run.disorder.seed)


def _cmd_spectrum(args, plan):
    run = _load_config(args)
    spec = run.spec
    res = quasienergy_spectrum(floquet_operator(spec, plan, disorder=_disorder(run, args)), spec.period)
    edge = np.abs(res.eigenvectors[[0, 1, spec.N - 2, spec.N - 1], :]) ** 2 if spec.N >= 4 else np.abs(res.eigenvectors) ** 2
    rows = [(j, phi, eps, eps / spec.bandwidth, edge[:, j].sum()) for j, (phi, eps) in enumerate(zip(res.eigenphases, res.quasienergies))]
    w = _Writer(Path(args.out), args.format)
    w.table("spectrum", ["index", "eigenphase", "quasienergy", "quasienergy_over_delta", "edge_weight"], rows)
    _finish(w, args, _echo(args, run))


def _cmd_invariant(args, plan):
    run = _load_config(args)
    if run.spec.omega_over_delta < 1 / 3:
        logging.getLogger(__name__).warning(
            "omega/Delta = %.4g is below 1/3; the invariant is not expected to take meaningful integer values there",
            run.spec.omega_over_delta,
        )
    res = g_pi(run.spec, args.k_points, plan)
    w = _Writer(Path(args.out), args.format)
    w.table(
        "invariant",
        ["omega_over_delta", "raw_winding", "g_pi", "pi_gap", "max_phase_step"],
        [(run.spec.omega_over_delta, res.raw_winding, res.g_pi, res.pi_gap, res.max_phase_step)],
    )
    _finish(w, args, _echo(args, run))


def _cmd_propagate(args, plan):
    run = _load_config(args)
    spec = run.spec
    if not 1 <= args.site <= spec.N:
        raise SpecError(f"site must lie in 1..{spec.N}", "site")
    trace = evolve_state(spec, injection_state(spec.N, args.site - 1), plan, args.samples, _disorder(run, args))
    w = _Writer(Path(args.out), args.format)
    w.table("intensity", ["z_mm", "site", "intensity"], intensity_rows(trace))
    w.summary("propagate_summary", {"boundary_fraction_end": trace.boundary_fraction(), "mean_profile": list(map(float, trace.mean_profile()))})
    _finish(w, args, _echo(args, run, site=args.site, samples=args.samples))


def _cmd_replicas(args, plan):
    run = _load_config(args)
    spec = run.spec
    rspec = ReplicaSpec(args.n_max)
    w = _Writer(Path(args.out), args.format)
    if args.bands:
        ks = np.linspace(-np.pi, np.pi, args.bands)
        bands = replica_bands(spec.as_bloch(), rspec, ks)
        rows = [
            (k, j, bands.bands[i, j], bands.bands[i, j] / spec.bandwidth, bands.replica[i, j], bands.trusted[i, j])
            for i, k in enumerate(ks)
            for j in range(bands.bands.shape[1])
        ]
        w.table("replica_bands", ["k", "band", "quasienergy", "quasienergy_over_delta", "replica", "trusted"], rows)
    else:
        folded, trusted, replica = folded_spectrum(spec, rspec)
        rows = [(j, lam, lam / spec.bandwidth, n, t) for j, (lam, t, n) in enumerate(zip(folded, trusted, replica))]
        w.table("replica_spectrum", ["index", "quasienergy", "quasienergy_over_delta", "replica", "trusted"], rows)
    _finish(w, args, _echo(args, run, n_max=args.n_max, bands=args.bands))


def _cmd_scenario(args, plan):
    overrides = dict(_parse_override(s) for s in args.set)
    ids = list(SCENARIOS) if args.scenario_id == "all" else [args.scenario_id]
    for sid in ids:
        cfg = ScenarioConfig(
            sid,
            args.out,
            overrides,
            steps_per_period=args.steps_per_period,
            k_points=args.k_points,
            seed=args.seed,
            fmt=args.format,
        )
        manifest = run_scenario(cfg)
        for f in manifest.files:
            print(Path(args.out) / f["path"])


def _cmd_sweep(args, plan):
    run = _load_config(args) if args.config else None
    base = {"N": 2, "boundary": "bloch"}
    if run is not None:
        base.update({k: v for k, v in run.spec.to_dict().items() if k in ("L", "kappa0", "delta_kappa", "theta0", "beta0")})
    rows = sweep_invariant(args.omega_over_delta, args.k_points, plan, base, workers=args.workers)
    w = _Writer(Path(args.out), args.format)
    w.table("sweep", ["omega_over_delta", "raw_winding", "g_pi", "status"], rows)
    _finish(w, args, _echo(args, None, omega_over_delta=args.omega_over_delta, base=base))


def _cmd_ensemble(args, plan):
    run = _load_config(args)
    summary = disorder_ensemble(run.spec, args.amplitude, args.seeds, plan, base_seed=args.seed, workers=args.workers)
    w = _Writer(Path(args.out), args.format)
    w.table("ensemble", ["seed", "boundary_fraction"], zip(summary.seeds, summary.fractions))
    w.summary(
        "ensemble_summary",
        {"amplitude": summary.amplitude, "quantiles": summary.quantiles(), "fraction_at_least_0.5": summary.fraction_at_least(0.5)},
    )
    _finish(w, args, _echo(args, run, amplitude=args.amplitude, seeds=args.seeds))


COMMANDS = {
    "spectrum": _cmd_spectrum,
    "invariant": _cmd_invariant,
    "propagate": _cmd_propagate,
    "replicas": _cmd_replicas,
    "scenario": _cmd_scenario,
    "sweep": _cmd_sweep,
    "ensemble": _cmd_ensemble,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = hasattr(args, "seed")
    for key, value in _GLOBAL_DEFAULTS.items():
        if not hasattr(args, key):
            setattr(args, key, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if not 0 <= args.seed < 2**64:
            raise SpecError("must be an unsigned 64-bit integer", "seed")
        if args.workers < 1:
            raise SpecError("must be at least 1", "workers")
        plan = PropagatorPlan(args.steps_per_period)
        COMMANDS[args.command](args, plan)
    except SpecError as exc:
        print(f"floquet-ssh: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except NumericalValidityError as exc:
        print(f"floquet-ssh: numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"floquet-ssh: error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
