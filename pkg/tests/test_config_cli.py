"""Spec parsing, validation, CLI verbs, and output determinism."""

import json
import os

import pytest
import yaml

from repdpos.cli import main
from repdpos.config import (
    ConfigError,
    ScenarioConfig,
    canonical_dict,
    config_hash,
    load_spec,
    scenario_from_dict,
    spec_from_dict,
)

SPEC_DIR = os.path.join(os.path.dirname(__file__), "..", "specs")

SMALL_SIM = {
    "name": "tiny",
    "kind": "simulation",
    "seed": 3,
    "outputs": ["reputation_timeseries", "event_dump"],
    "scenario": {
        "vehicles": 12,
        "candidates": 8,
        "rounds": 5,
        "k": 3,
        "y": 6,
        "attack": {
            "malicious_candidates": 2,
            "onset_round": 1,
            "colluders_per_candidate": 3,
            "compromised_vehicles": 4,
        },
        "mobility": {"home_range_m": 1200.0, "fire_probability": 0.8},
    },
}


class TestScenarioValidation:
    def test_even_k_rejected(self):
        with pytest.raises(ConfigError, match="odd"):
            ScenarioConfig(k=4, y=6).validate()

    def test_y_not_above_k_rejected(self):
        with pytest.raises(ConfigError, match="k < y"):
            ScenarioConfig(k=9, y=9).validate()

    def test_weights_invariant_via_dict(self):
        with pytest.raises(ValueError, match="recent_weight"):
            scenario_from_dict(
                {"weights": {"recent_weight": 0.4, "past_weight": 0.6}}
            )

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            scenario_from_dict({"vehicle_count": 10})

    def test_unknown_table_rejected(self):
        spec = dict(SMALL_SIM, outputs=["nope"])
        with pytest.raises(ConfigError, match="unknown table"):
            spec_from_dict(spec)

    def test_kind_table_mismatch_rejected(self):
        spec = dict(SMALL_SIM, outputs=["profit_vs_types"])
        with pytest.raises(ConfigError, match="not produced"):
            spec_from_dict(spec)

    def test_hash_stable_and_sensitive(self):
        a = spec_from_dict(SMALL_SIM)
        b = spec_from_dict(json.loads(json.dumps(SMALL_SIM)))
        assert config_hash(a) == config_hash(b)
        changed = json.loads(json.dumps(SMALL_SIM))
        changed["seed"] = 4
        assert config_hash(spec_from_dict(changed)) != config_hash(a)

    def test_canonical_dict_includes_defaults(self):
        spec = spec_from_dict(SMALL_SIM)
        tree = canonical_dict(spec)
        assert tree["scenario"]["weights"]["negative_weight"] == 0.6
        assert tree["scenario"]["contract"]["params"]["gain"] == 1.2


class TestShippedSpecs:
    @pytest.mark.parametrize(
        "name",
        [
            "fig3_reputation_timeseries.yaml",
            "fig4_detection_rate.yaml",
            "fig5_correct_block_probability.yaml",
            "fig6_verifier_utilities.yaml",
            "fig7_profit_vs_types.yaml",
            "table1_defaults.yaml",
        ],
    )
    def test_loads_and_validates(self, name):
        spec = load_spec(os.path.join(SPEC_DIR, name))
        assert spec.outputs

    def test_table1_defaults_echo(self, capsys):
        rc = main(["validate", os.path.join(SPEC_DIR, "table1_defaults.yaml")])
        out = capsys.readouterr().out
        assert rc == 0
        tree = json.loads(out[out.index("{"): out.rindex("}") + 1])
        params = tree["scenario"]["contract"]["params"]
        assert params == {
            "gain": 1.2, "scale_coeff": 15.0, "latency_coeff": 10.0,
            "scale_exp": 2.0, "latency_exp": 1.0, "reward_weight": 5.0,
            "unit_cost": 1.0, "max_latency": 300.0, "budget": 1000.0,
            "verifier_count": 21,
        }
        weights = tree["scenario"]["weights"]
        assert weights["positive_weight"] == 0.4
        assert weights["negative_weight"] == 0.6
        assert weights["recent_weight"] == 0.6
        assert weights["past_weight"] == 0.4
        assert weights["scale"] == 1.0


class TestCli:
    def write_spec(self, tmp_path, payload):
        path = tmp_path / "spec.yaml"
        path.write_text(yaml.safe_dump(payload))
        return str(path)

    def test_run_small_simulation(self, tmp_path):
        spec = self.write_spec(tmp_path, SMALL_SIM)
        out = str(tmp_path / "out")
        assert main(["run", spec, "--out", out]) == 0
        assert sorted(os.listdir(out)) == [
            "event_dump.csv", "manifest.json", "reputation_timeseries.csv",
        ]
        manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
        assert manifest["seed"] == 3
        first = (tmp_path / "out" / "event_dump.csv").read_text().splitlines()[0]
        assert first.startswith("# config_hash=")

    def test_run_byte_identical(self, tmp_path):
        spec = self.write_spec(tmp_path, SMALL_SIM)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["run", spec, "--out", out_a]) == 0
        assert main(["run", spec, "--out", out_b]) == 0
        for name in os.listdir(out_a):
            a = open(os.path.join(out_a, name), "rb").read()
            b = open(os.path.join(out_b, name), "rb").read()
            assert a == b, name

    def test_seed_override_changes_outputs(self, tmp_path):
        spec = self.write_spec(tmp_path, SMALL_SIM)
        out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
        assert main(["run", spec, "--out", out_a]) == 0
        assert main(["run", spec, "--out", out_b, "--seed", "9"]) == 0
        a = (tmp_path / "a" / "event_dump.csv").read_bytes()
        b = (tmp_path / "b" / "event_dump.csv").read_bytes()
        assert a != b

    def test_tables_subset(self, tmp_path):
        spec = self.write_spec(tmp_path, SMALL_SIM)
        out = str(tmp_path / "out")
        assert main(["run", spec, "--out", out, "--tables", "event_dump"]) == 0
        assert sorted(os.listdir(out)) == ["event_dump.csv", "manifest.json"]

    def test_malformed_spec_fails_without_outputs(self, tmp_path, capsys):
        bad = dict(SMALL_SIM)
        bad["scenario"] = dict(SMALL_SIM["scenario"], k=4)
        spec = self.write_spec(tmp_path, bad)
        out = str(tmp_path / "out")
        assert main(["run", spec, "--out", out]) == 1
        assert not os.path.exists(out)
        assert "error:" in capsys.readouterr().err

    def test_validate_reports_violation(self, tmp_path, capsys):
        bad = dict(SMALL_SIM)
        bad["outputs"] = ["correct_block_probability"]
        spec = self.write_spec(tmp_path, bad)
        assert main(["validate", spec]) == 2
        assert "invalid" in capsys.readouterr().out

    def test_contract_menu_from_simulation(self, tmp_path):
        payload = json.loads(json.dumps(SMALL_SIM))
        payload["outputs"] = ["contract_menu"]
        payload["scenario"]["standby_verification"] = True
        payload["scenario"]["contract"] = {"enabled": True, "types": 3}
        spec = self.write_spec(tmp_path, payload)
        out = str(tmp_path / "out")
        assert main(["run", spec, "--out", out]) == 0
        lines = (tmp_path / "out" / "contract_menu.csv").read_text().splitlines()
        assert lines[1] == "type,theta,prior,reward,inv_latency,utility,profit"
        assert len(lines) == 2 + 3  # manifest comment + header + one row per type

    def test_sweep_runs_directory(self, tmp_path):
        spec_dir = tmp_path / "specs"
        spec_dir.mkdir()
        (spec_dir / "one.yaml").write_text(yaml.safe_dump(SMALL_SIM))
        two = dict(SMALL_SIM, name="tiny2")
        (spec_dir / "two.yaml").write_text(yaml.safe_dump(two))
        out = str(tmp_path / "out")
        assert main(["sweep", str(spec_dir), "--out", out]) == 0
        assert sorted(os.listdir(out)) == ["tiny", "tiny2"]
