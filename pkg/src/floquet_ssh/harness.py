"""Figure scenarios, omega sweeps and disorder ensembles, written as CSV/JSON datasets.

Every run writes its datasets plus a ``<scenario>_manifest.json`` holding
checksums and a ``spec_echo`` that :func:`replay_manifest` feeds back into
:func:`run_scenario` to reproduce the files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import NumericalValidityError, ScenarioError, SpecError
from .evolution import PropagatorPlan, evolve_state, final_state, injection_state, stroboscopic_trace
from .floquet import floquet_operator, g_pi, quasienergy_spectrum
from .lattice import DEFAULT_DISORDER, DisorderSpec, LatticeSpec, apply_disorder, spec_from_mapping
from .replicas import ReplicaSpec, folded_spectrum, replica_bands

log = logging.getLogger(__name__)

BASE_SPEC = {"N": 10, "L": 400.0, "kappa0": 0.042, "delta_kappa": 0.02, "theta0": 0.0}

#: omega/Delta grids; the closure points 1/3 and 1 are left out on purpose.
FIG3A_GRID = tuple(round(x, 4) for x in np.arange(0.2, 2.0001, 0.05) if abs(x - 1) > 1e-9)
FIG3B_GRID = tuple(round(x, 4) for x in np.arange(0.35, 3.0001, 0.05) if abs(x - 1) > 1e-9)
FIG3C_GRID = tuple(round(x, 4) for x in np.arange(0.3, 1.2001, 0.1) if abs(x - 1) > 1e-9)

SCENARIOS: dict[str, dict] = {
    "fig2a": {"kind": "trace", "spec": {"n_Lambda": 20}},
    "fig2b": {"kind": "trace", "spec": {"delta_kappa": 0.0, "omega": 0.0}},
    "fig2c": {"kind": "trace", "spec": {"n_Lambda": 3}},
    "fig2d": {"kind": "trace", "spec": {"omega": 0.0}},
    "fig3a": {"kind": "obc_spectrum", "spec": {"N": 40}, "omega_over_delta": FIG3A_GRID},
    "fig3b": {"kind": "invariant_sweep", "spec": {"N": 2}, "omega_over_delta": FIG3B_GRID},
    "fig3c": {"kind": "replica_obc", "spec": {"N": 40}, "omega_over_delta": FIG3C_GRID, "n_max": 2},
    "fig3d": {"kind": "pi_mode", "spec": {"n_Lambda": 3}, "periods": 3},
    "fig3e": {"kind": "replica_bands", "spec": {"N": 2}, "omega_over_delta": (1 / 3,), "n_max": 2},
    "fig3f": {"kind": "replica_bands", "spec": {"N": 2}, "omega_over_delta": (0.5,), "n_max": 2},
    "fig3g": {"kind": "replica_bands", "spec": {"N": 2}, "omega_over_delta": (1.0,), "n_max": 2},
    "fig4a": {"kind": "trace", "spec": {"n_Lambda": 3, "theta0": math.pi}},
    "fig4b": {"kind": "trace", "spec": {"n_Lambda": 20, "theta0": math.pi}},
    "fig5a": {"kind": "ensemble", "spec": {"n_Lambda": 3}, "amplitude": DEFAULT_DISORDER, "seeds": 50},
    "fig5b": {"kind": "ensemble", "spec": {"n_Lambda": 4}, "amplitude": DEFAULT_DISORDER, "seeds": 50},
}

_SPEC_FIELDS = {"N", "L", "kappa0", "delta_kappa", "omega", "n_Lambda", "theta0", "beta0"}
_PARAM_FIELDS = {"omega_over_delta", "n_max", "periods", "amplitude", "seeds", "sample_count", "site"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario_id: str
    output_dir: str = "."
    overrides: dict = field(default_factory=dict)
    steps_per_period: int = 256
    k_points: int = 513
    seed: int = 0
    fmt: str = "csv"

    def __post_init__(self):
        if self.scenario_id not in SCENARIOS:
            raise ScenarioError(f"unknown scenario {self.scenario_id!r}; known: {', '.join(SCENARIOS)}", "scenario_id")
        unknown = set(self.overrides) - _SPEC_FIELDS - _PARAM_FIELDS
        if unknown:
            raise ScenarioError(f"unknown override(s) {sorted(unknown)}", sorted(unknown)[0])
        if self.fmt not in ("csv", "json"):
            raise ScenarioError(f"format must be csv or json, got {self.fmt!r}", "fmt")
        PropagatorPlan(self.steps_per_period)

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("output_dir")
        d["overrides"] = {k: list(v) if isinstance(v, tuple) else v for k, v in d["overrides"].items()}
        return d


@dataclass(frozen=True)
class OutputManifest:
    files: list
    spec_echo: dict
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return "" if x is None else str(x)


def _jsonable(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


class _Writer:
    """Collects datasets for one run and records (path, kind, checksum)."""

    def __init__(self, out_dir: Path, fmt: str):
        self.out_dir = out_dir
        self.fmt = fmt
        self.files: list[dict] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def _put(self, name: str, kind: str, text: str) -> None:
        path = self.out_dir / name
        path.write_text(text, encoding="utf-8", newline="")
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        self.files.append({"path": name, "kind": kind, "sha256": digest})

    def table(self, stem: str, header: list[str], rows) -> None:
        if self.fmt == "json":
            records = [{h: _jsonable(v) for h, v in zip(header, row)} for row in rows]
            self._put(f"{stem}.json", "json", json.dumps(records, sort_keys=True) + "\n")
            return
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        self._put(f"{stem}.csv", "csv", buf.getvalue())

    def summary(self, stem: str, data: dict) -> None:
        self._put(f"{stem}.json", "json", json.dumps(data, indent=2, sort_keys=True, default=_jsonable) + "\n")


def intensity_rows(trace):
    """Long-format (z_mm, site, intensity) rows; sites are 1-based."""
    inten = trace.intensities
    for z, row in zip(trace.z_samples, inten):
        for site, value in enumerate(row, start=1):
            yield (z, site, value)


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return 0.5 * float(np.sum(np.abs(p / p.sum() - q / q.sum())))


def exchange_peak_to_peak(intensities: np.ndarray, sites=(0, 1)) -> float:
    """Peak-to-peak of I_site1 - I_site2 along a trace: the intra-period boundary exchange."""
    diff = intensities[:, sites[0]] - intensities[:, sites[1]]
    return float(diff.max() - diff.min())


# --------------------------------------------------------------------------- sweeps


def _invariant_row(args):
    ratio, base, k_points, spp = args
    if ratio < 1 / 3:
        return (ratio, None, None, "below_third")
    spec = LatticeSpec.from_omega_over_delta(ratio, **base)
    try:
        res = g_pi(spec, k_points, PropagatorPlan(spp))
    except NumericalValidityError as exc:
        log.info("omega/Delta=%s undefined: %s", ratio, exc)
        return (ratio, None, None, type(exc).__name__)
    return (ratio, res.raw_winding, res.g_pi, "ok")


def _map(fn, items, workers: int):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def sweep_invariant(
    omega_over_delta,
    k_points: int = 513,
    plan: PropagatorPlan | None = None,
    base: dict | None = None,
    workers: int = 1,
) -> list[tuple]:
    """Rows (omega/Delta, raw_winding, G_pi, status).

    ``status`` is ``ok``, the name of the numerical error that made the row
    undefined (typically ``GapClosedError``), or ``below_third`` for the
    omega < Delta/3 regime, which is flagged and not computed.
    """
    plan = plan or PropagatorPlan()
    base = dict(base or {"N": 2, "boundary": "bloch"})
    base.setdefault("boundary", "bloch")
    items = [(float(r), base, k_points, plan.steps_per_period) for r in omega_over_delta]
    return _map(_invariant_row, items, workers)


@dataclass(frozen=True)
class EnsembleSummary:
    seeds: tuple
    fractions: tuple
    amplitude: float

    def quantiles(self) -> dict:
        f = np.asarray(self.fractions)
        q = np.quantile(f, [0.0, 0.1, 0.5, 0.9, 1.0])
        return dict(zip(("min", "q10", "median", "q90", "max"), map(float, q)))

    def fraction_at_least(self, threshold: float) -> float:
        return float(np.mean(np.asarray(self.fractions) >= threshold))


def _ensemble_member(args):
    spec, amplitude, seed, spp, sites = args
    psi = final_state(spec, injection_state(spec.N), PropagatorPlan(spp), DisorderSpec(amplitude, seed))
    return float(np.sum(np.abs(psi[list(sites)]) ** 2))


def disorder_ensemble(
    spec: LatticeSpec,
    dis_amplitude: float,
    seeds=50,
    plan: PropagatorPlan | None = None,
    base_seed: int = 0,
    sites=(0, 1),
    workers: int = 1,
) -> EnsembleSummary:
    """Boundary fraction at z = L for one disorder draw per seed.

    ``seeds`` is a count (seeds ``base_seed .. base_seed + count - 1``) or an
    explicit sequence.
    """
    plan = plan or PropagatorPlan()
    seed_list = tuple(range(base_seed, base_seed + seeds)) if isinstance(seeds, (int, np.integer)) else tuple(seeds)
    # validates the amplitude once, before any work
    apply_disorder(spec, DisorderSpec(dis_amplitude, seed_list[0] if seed_list else 0))
    items = [(spec, dis_amplitude, s, plan.steps_per_period, tuple(sites)) for s in seed_list]
    fractions = _map(_ensemble_member, items, workers)
    return EnsembleSummary(seed_list, tuple(fractions), float(dis_amplitude))


# --------------------------------------------------------------------------- scenarios


def resolve(cfg: ScenarioConfig) -> tuple[dict, dict]:
    """Merge the experimental operating point, scenario defaults and overrides into (spec fields, params)."""
    table = SCENARIOS[cfg.scenario_id]
    spec_fields = dict(BASE_SPEC)
    spec_fields.update(table["spec"])
    params = {k: v for k, v in table.items() if k not in ("kind", "spec")}
    params.setdefault("sample_count", 2048)
    params.setdefault("site", 1)
    for key, value in cfg.overrides.items():
        if key in _SPEC_FIELDS:
            if key == "n_Lambda":
                spec_fields.pop("omega", None)
            if key == "omega":
                spec_fields.pop("n_Lambda", None)
            spec_fields[key] = value
        else:
            params[key] = value
    return spec_fields, params


def _trace_summary(spec, trace, site):
    return {
        "boundary_fraction_end": trace.boundary_fraction(),
        "site1_intensity_end": float(trace.intensities[-1, 0]),
        "mean_profile": [float(x) for x in trace.mean_profile()],
        "max_norm_error": float(np.max(np.abs(trace.intensities.sum(axis=1) - 1))),
        "omega": spec.omega,
        "omega_over_delta": spec.omega_over_delta,
        "injected_site": site,
    }


def run_scenario(cfg: ScenarioConfig) -> OutputManifest:
    """Run one figure scenario and write its datasets and manifest into ``cfg.output_dir``."""
    kind = SCENARIOS[cfg.scenario_id]["kind"]
    spec_fields, params = resolve(cfg)
    plan = PropagatorPlan(cfg.steps_per_period)
    out = _Writer(Path(cfg.output_dir), cfg.fmt)
    sid = cfg.scenario_id
    resolved: dict = {"params": {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}}

    if kind in ("obc_spectrum", "invariant_sweep", "replica_obc", "replica_bands"):
        base = {k: v for k, v in spec_fields.items() if k not in ("omega", "n_Lambda")}
        ratios = [float(r) for r in params["omega_over_delta"]]
        resolved["base_spec"] = base
        if not ratios:
            raise ScenarioError("empty omega_over_delta grid", "omega_over_delta")
        LatticeSpec.from_omega_over_delta(ratios[0], **base)  # validates the overrides
    else:
        spec = spec_from_mapping(spec_fields)
        resolved["spec"] = spec.to_dict()

    if kind == "trace":
        site = int(params["site"])
        trace = evolve_state(spec, injection_state(spec.N, site - 1), plan, int(params["sample_count"]))
        out.table(f"{sid}_intensity", ["z_mm", "site", "intensity"], intensity_rows(trace))
        out.summary(f"{sid}_summary", _trace_summary(spec, trace, site))

    elif kind == "pi_mode":
        site = int(params["site"])
        psi0 = injection_state(spec.N, site - 1)
        strobe = stroboscopic_trace(spec, psi0, plan, int(params["periods"]))
        trace = evolve_state(spec, psi0, plan, int(params["sample_count"]))
        out.table(f"{sid}_stroboscopic", ["z_mm", "site", "intensity"], intensity_rows(strobe))
        out.table(f"{sid}_intensity", ["z_mm", "site", "intensity"], intensity_rows(trace))
        first_period = trace.z_samples <= spec.period * (1 + 1e-12)
        summary = _trace_summary(spec, trace, site)
        summary.update(
            {
                "stroboscopic_site1": [float(x) for x in strobe.intensities[:, 0]],
                "stroboscopic_site1_variance": float(np.var(strobe.intensities[1:, 0])),
                "exchange_peak_to_peak_first_period": exchange_peak_to_peak(trace.intensities[first_period]),
            }
        )
        out.summary(f"{sid}_summary", summary)

    elif kind == "obc_spectrum":
        rows = []
        for r in ratios:
            s = LatticeSpec.from_omega_over_delta(r, **base)
            spec_r = quasienergy_spectrum(floquet_operator(s, plan), s.period)
            edge = np.abs(spec_r.eigenvectors[[0, 1, s.N - 2, s.N - 1], :]) ** 2
            for j, (phi, eps) in enumerate(zip(spec_r.eigenphases, spec_r.quasienergies)):
                rows.append((r, j, phi, eps, eps / s.bandwidth, edge[:, j].sum()))
        out.table(f"{sid}_spectrum", ["omega_over_delta", "index", "eigenphase", "quasienergy", "quasienergy_over_delta", "edge_weight"], rows)

    elif kind == "invariant_sweep":
        rows = sweep_invariant(ratios, cfg.k_points, plan, {**base, "boundary": "bloch"})
        out.table(f"{sid}_invariant", ["omega_over_delta", "raw_winding", "g_pi", "status"], rows)

    elif kind == "replica_obc":
        rspec = ReplicaSpec(int(params["n_max"]))
        rows = []
        for r in ratios:
            s = LatticeSpec.from_omega_over_delta(r, **base)
            folded, trusted, replica = folded_spectrum(s, rspec)
            for j, (lam, t, n) in enumerate(zip(folded, trusted, replica)):
                rows.append((r, j, lam, lam / s.bandwidth, n, t))
        out.table(f"{sid}_replica_spectrum", ["omega_over_delta", "index", "quasienergy", "quasienergy_over_delta", "replica", "trusted"], rows)

    elif kind == "replica_bands":
        rspec = ReplicaSpec(int(params["n_max"]))
        ks = np.linspace(-np.pi, np.pi, 201)
        rows = []
        edge = {}
        for r in ratios:
            s = LatticeSpec.from_omega_over_delta(r, **{**base, "boundary": "bloch"})
            bands = replica_bands(s, rspec, ks)
            edge[repr(r)] = bands.zone_edge_distance() / s.bandwidth
            for i, k in enumerate(ks):
                for j in range(bands.bands.shape[1]):
                    lam = bands.bands[i, j]
                    rows.append((r, k, j, lam, lam / s.bandwidth, bands.replica[i, j], bands.trusted[i, j]))
        out.table(f"{sid}_bands", ["omega_over_delta", "k", "band", "quasienergy", "quasienergy_over_delta", "replica", "trusted"], rows)
        out.summary(f"{sid}_summary", {"zone_edge_distance_over_delta": edge, "n_max": rspec.n_max})

    elif kind == "ensemble":
        amplitude = float(params["amplitude"])
        summary = disorder_ensemble(spec, amplitude, int(params["seeds"]), plan, base_seed=cfg.seed)
        out.table(f"{sid}_ensemble", ["seed", "boundary_fraction"], zip(summary.seeds, summary.fractions))
        trace = evolve_state(
            spec, injection_state(spec.N), plan, int(params["sample_count"]), DisorderSpec(amplitude, summary.seeds[0])
        )
        out.table(f"{sid}_intensity", ["z_mm", "site", "intensity"], intensity_rows(trace))
        out.summary(
            f"{sid}_summary",
            {
                "amplitude": amplitude,
                "quantiles": summary.quantiles(),
                "fraction_at_least_0.5": summary.fraction_at_least(0.5),
                "intensity_map_seed": summary.seeds[0],
            },
        )

    manifest = OutputManifest(files=list(out.files), spec_echo={"config": cfg.echo(), "resolved": resolved})
    (Path(cfg.output_dir) / f"{sid}_manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return manifest


def replay_manifest(path, output_dir) -> OutputManifest:
    """Re-run the scenario recorded in a manifest file into ``output_dir``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = dict(data["spec_echo"]["config"])
    cfg["output_dir"] = str(output_dir)
    try:
        return run_scenario(ScenarioConfig(**cfg))
    except TypeError as exc:
        raise SpecError(f"manifest {path} has an unusable spec_echo: {exc}") from exc
