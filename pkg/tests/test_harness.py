import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from floquet_ssh.errors import ScenarioError, SpecError
from floquet_ssh.evolution import evolve_state, injection_state
from floquet_ssh.harness import (
    SCENARIOS,
    ScenarioConfig,
    disorder_ensemble,
    replay_manifest,
    run_scenario,
    sweep_invariant,
    total_variation,
)
from floquet_ssh.lattice import LatticeSpec


def summary(path: Path, sid: str) -> dict:
    return json.loads((path / f"{sid}_summary.json").read_text())


def test_inventory():
    expected = {f"fig2{c}" for c in "abcd"} | {f"fig3{c}" for c in "abcdefg"} | {"fig4a", "fig4b", "fig5a", "fig5b"}
    assert set(SCENARIOS) == expected


def test_unknown_scenario():
    with pytest.raises(ScenarioError):
        ScenarioConfig("fig9")


def test_unknown_override():
    with pytest.raises(ScenarioError):
        ScenarioConfig("fig2c", overrides={"colour": 1})


def test_invalid_override_value(tmp_path):
    with pytest.raises(SpecError):
        run_scenario(ScenarioConfig("fig2c", str(tmp_path), {"delta_kappa": 0.1}))
    with pytest.raises(SpecError):
        run_scenario(ScenarioConfig("fig3b", str(tmp_path), {"kappa0": -1.0}))


@pytest.mark.parametrize(
    "sid,overrides",
    [("fig2c", {"sample_count": 64}), ("fig3e", {}), ("fig5a", {"seeds": 3, "sample_count": 32}), ("fig3b", {"omega_over_delta": [0.5, 1.0]})],
)
def test_manifest_and_byte_identical_replay(tmp_path, sid, overrides):
    first = tmp_path / "a"
    manifest = run_scenario(ScenarioConfig(sid, str(first), overrides))
    assert (first / f"{sid}_manifest.json").exists()
    for f in manifest.files:
        data = (first / f["path"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == f["sha256"]
        assert f["kind"] in ("csv", "json")
    assert manifest.spec_echo["config"]["scenario_id"] == sid
    second = tmp_path / "b"
    replayed = replay_manifest(first / f"{sid}_manifest.json", second)
    assert replayed.files == manifest.files
    for f in manifest.files:
        assert (first / f["path"]).read_bytes() == (second / f["path"]).read_bytes()


def test_long_format_csv(tmp_path):
    run_scenario(ScenarioConfig("fig2c", str(tmp_path), {"sample_count": 16}))
    with open(tmp_path / "fig2c_intensity.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["z_mm", "site", "intensity"]
    assert len(rows) == 1 + 16 * 10
    assert rows[1][:2] == ["0.0", "1"] and float(rows[1][2]) == 1.0
    assert float(rows[-1][0]) == 400.0 and rows[-1][1] == "10"


def test_json_format(tmp_path):
    manifest = run_scenario(ScenarioConfig("fig3f", str(tmp_path), fmt="json"))
    bands = json.loads((tmp_path / "fig3f_bands.json").read_text())
    assert {"k", "band", "quasienergy", "replica", "trusted"} <= set(bands[0])
    assert all(f["kind"] == "json" for f in manifest.files)


def test_static_uniform_diffraction(tmp_path, expectations):
    run_scenario(ScenarioConfig("fig2b", str(tmp_path)))
    value = summary(tmp_path, "fig2b")["site1_intensity_end"]
    assert value < 0.2
    assert value == pytest.approx(expectations["fig2b_site1_end"], abs=1e-9)


def test_static_dimerized_zero_mode(tmp_path, expectations):
    run_scenario(ScenarioConfig("fig2d", str(tmp_path)))
    value = summary(tmp_path, "fig2d")["boundary_fraction_end"]
    assert value == pytest.approx(expectations["fig2d_boundary_fraction"], abs=1e-9)
    assert value > 0.8


def test_theta0_pi_spreads(tmp_path, expectations):
    run_scenario(ScenarioConfig("fig2c", str(tmp_path), {"sample_count": 8}))
    run_scenario(ScenarioConfig("fig4a", str(tmp_path), {"sample_count": 8}))
    clean, shifted = summary(tmp_path, "fig2c")["boundary_fraction_end"], summary(tmp_path, "fig4a")["boundary_fraction_end"]
    assert shifted == pytest.approx(expectations["fig4a_boundary_fraction"], abs=1e-4)
    assert shifted <= 0.4
    assert shifted < clean


def test_pi_mode_stroboscopic_and_micromotion(tmp_path, expectations):
    run_scenario(ScenarioConfig("fig3d", str(tmp_path)))
    s = summary(tmp_path, "fig3d")
    assert s["stroboscopic_site1_variance"] <= 0.05
    assert s["exchange_peak_to_peak_first_period"] >= 0.2
    assert s["stroboscopic_site1_variance"] == pytest.approx(expectations["fig3d_stroboscopic_variance"], abs=1e-4)
    assert s["exchange_peak_to_peak_first_period"] == pytest.approx(expectations["fig3d_exchange_peak_to_peak"], abs=1e-3)


def test_high_frequency_theta0_insensitive(tmp_path, expectations):
    run_scenario(ScenarioConfig("fig2a", str(tmp_path)))
    run_scenario(ScenarioConfig("fig4b", str(tmp_path)))
    tv = total_variation(summary(tmp_path, "fig2a")["mean_profile"], summary(tmp_path, "fig4b")["mean_profile"])
    assert tv <= 0.05
    assert tv == pytest.approx(expectations["high_frequency_tv"], abs=1e-4)


def test_replica_band_summaries(tmp_path):
    for sid in ("fig3e", "fig3f", "fig3g"):
        run_scenario(ScenarioConfig(sid, str(tmp_path)))
    edge = {sid: next(iter(summary(tmp_path, sid)["zone_edge_distance_over_delta"].values())) for sid in ("fig3e", "fig3f", "fig3g")}
    assert edge["fig3e"] <= 0.02 and edge["fig3g"] <= 0.02 and edge["fig3f"] >= 0.05


def test_obc_spectrum_scenario(tmp_path):
    run_scenario(ScenarioConfig("fig3a", str(tmp_path), {"omega_over_delta": [0.5, 2.0], "N": 20}))
    with open(tmp_path / "fig3a_spectrum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 40
    near_pi = [r for r in rows if np.pi - abs(float(r["eigenphase"])) < 0.05]
    assert {float(r["omega_over_delta"]) for r in near_pi} == {0.5}


def test_replica_obc_scenario(tmp_path):
    run_scenario(ScenarioConfig("fig3c", str(tmp_path), {"omega_over_delta": [0.5], "N": 10}))
    with open(tmp_path / "fig3c_replica_spectrum.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 50
    assert {r["trusted"] for r in rows} == {"true", "false"}


class TestSweep:
    def test_step_function(self):
        rows = sweep_invariant([0.4, 0.5, 0.8, 1.2, 2.0, 5.0])
        assert [r[2] for r in rows] == [1, 1, 1, 0, 0, 0]
        assert all(abs(r[1] - r[2]) <= 1e-3 for r in rows)
        assert all(r[3] == "ok" for r in rows)

    def test_undefined_and_flagged_rows(self):
        rows = sweep_invariant([1.0, 0.25])
        assert rows[0] == (1.0, None, None, "GapClosedError")
        assert rows[1] == (0.25, None, None, "below_third")

    def test_parallel_matches_serial(self):
        values = [0.45, 1.5]
        assert sweep_invariant(values, workers=2) == sweep_invariant(values)


class TestEnsemble:
    spec = LatticeSpec.from_reduced_frequency(3, N=10)

    def test_zero_amplitude_equals_clean(self):
        clean = evolve_state(self.spec, injection_state(10), sample_count=2).boundary_fraction()
        res = disorder_ensemble(self.spec, 0.0, 4)
        np.testing.assert_allclose(res.fractions, clean, atol=1e-12)

    def test_deterministic(self):
        a = disorder_ensemble(self.spec, 0.022, 5)
        b = disorder_ensemble(self.spec, 0.022, list(range(5)))
        assert a == b
        assert json.dumps(a.quantiles()) == json.dumps(b.quantiles())

    def test_parallel_matches_serial(self):
        assert disorder_ensemble(self.spec, 0.022, 3, workers=2) == disorder_ensemble(self.spec, 0.022, 3)

    def test_amplitude_checked(self):
        with pytest.raises(SpecError):
            disorder_ensemble(self.spec, 0.05, 3)

    def test_matches_oracle_per_seed(self, expectations):
        res = disorder_ensemble(self.spec, 0.022, 10)
        np.testing.assert_allclose(res.fractions, expectations["ensemble"]["3"]["fractions"][:10], atol=1e-4)
