"""End-to-end checks for the command line runner.

Configs are resolved fail-fast from file + overrides + flags, every run
writes a manifest before any table, and a finished manifest can be fed
back in as --config to reproduce the run byte for byte.
"""

import json
import math
import os

import numpy as np
import pytest

from topowalk import serialize
from topowalk.cli import (
    EXPERIMENT_KINDS,
    OUTPUT_ROOT_ENV,
    describe,
    main,
    parse_config,
    run,
)
from topowalk.errors import ConfigError

PI = math.pi

WALK_MIN = {"length": 32, "theta1": 0.6, "theta2": -0.9, "steps": 10}


def overrides(mapping):
    return [f"{k}={json.dumps(v)}" for k, v in mapping.items()]


def read_files(out_dir):
    payload = {}
    for name in sorted(os.listdir(out_dir)):
        with open(os.path.join(out_dir, name), "rb") as fh:
            payload[name] = fh.read()
    return payload


def read_csv_rows(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


class TestParseConfig:
    def test_minimal_walk_fills_defaults(self):
        config = parse_config("walk", overrides=overrides(WALK_MIN))
        v = config.values
        assert config.kind == "walk"
        assert v["boundary"] == "periodic"
        assert v["protocol"] == "split_step"
        assert v["input_site"] == 16
        assert v["input_coin"] == "symmetric"
        assert (v["seed"], v["threads"], v["format"]) == (0, 1, "both")

    def test_unknown_key_is_named(self):
        with pytest.raises(ConfigError, match="thetaa1"):
            parse_config("walk", overrides=overrides({**WALK_MIN, "thetaa1": 1.0}))

    def test_missing_required_key_is_named(self):
        bad = {k: v for k, v in WALK_MIN.items() if k != "theta1"}
        with pytest.raises(ConfigError, match="theta1"):
            parse_config("walk", overrides=overrides(bad))

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config("bogus")

    def test_simple_protocol_forbids_theta2(self):
        with pytest.raises(ConfigError, match="theta2"):
            parse_config(
                "walk",
                overrides=overrides({**WALK_MIN, "protocol": "simple"}),
            )

    def test_split_step_requires_theta2(self):
        bad = {k: v for k, v in WALK_MIN.items() if k != "theta2"}
        with pytest.raises(ConfigError, match="theta2"):
            parse_config("walk", overrides=overrides(bad))

    def test_2d_protocol_needs_2d_extent(self):
        with pytest.raises(ConfigError, match="length"):
            parse_config(
                "walk",
                overrides=overrides({**WALK_MIN, "protocol": "split_step_2d"}),
            )

    def test_input_site_bounds(self):
        with pytest.raises(ConfigError, match="input_site"):
            parse_config(
                "walk", overrides=overrides({**WALK_MIN, "input_site": 32})
            )

    def test_flag_beats_override_beats_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({**WALK_MIN, "seed": 1, "format": "csv"}))
        config = parse_config(
            "walk", config_path=str(path), overrides=["seed=2"], seed=3
        )
        assert config.values["seed"] == 3
        assert config.values["format"] == "csv"
        config = parse_config("walk", config_path=str(path), overrides=["seed=2"])
        assert config.values["seed"] == 2

    def test_override_values_parse_as_json(self):
        config = parse_config(
            "walk",
            overrides=["length=32", "theta1=0.6", "theta2=-0.9", "steps=10",
                       "input_coin=up"],
        )
        assert config.values["input_coin"] == "up"
        assert config.values["theta1"] == 0.6

    def test_override_without_equals_rejected(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config("walk", overrides=["seed"])

    def test_out_defaults_under_env_root(self, monkeypatch):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, "/tmp/topowalk-root")
        config = parse_config("walk", overrides=overrides(WALK_MIN))
        assert config.values["out"] == os.path.join("/tmp/topowalk-root", "walk")
        monkeypatch.delenv(OUTPUT_ROOT_ENV)
        config = parse_config("walk", overrides=overrides(WALK_MIN))
        assert config.values["out"] == os.path.join(".", "walk")

    def test_out_flag_wins_over_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv(OUTPUT_ROOT_ENV, "/tmp/topowalk-root")
        config = parse_config(
            "walk", overrides=overrides(WALK_MIN), out=str(tmp_path)
        )
        assert config.values["out"] == str(tmp_path)

    @pytest.mark.parametrize(
        "extra",
        [{"modes": 4}, {"chi": 0.3}, {"kind": "passive"}],
    )
    def test_gaussian_walk_network_rejects_chain_keys(self, extra):
        base = {"network": "walk", "length": 16, "theta1": 0.5, "theta2": 0.2}
        with pytest.raises(ConfigError, match=next(iter(extra))):
            parse_config("gaussian", overrides=overrides({**base, **extra}))

    @pytest.mark.parametrize(
        "extra",
        [{"theta1": 0.5}, {"length": 16}, {"photon_number": 2.0}],
    )
    def test_gaussian_chain_rejects_walk_keys(self, extra):
        base = {"network": "su11_chain", "modes": 4, "chi": 0.3}
        with pytest.raises(ConfigError, match=next(iter(extra))):
            parse_config("gaussian", overrides=overrides({**base, **extra}))

    def test_gaussian_chain_needs_even_modes(self):
        with pytest.raises(ConfigError, match="modes"):
            parse_config(
                "gaussian",
                overrides=overrides(
                    {"network": "su11_chain", "modes": 3, "chi": 0.3}
                ),
            )

    def test_scaling_sweep_rejects_robustness_keys(self):
        base = {"sweep": "scaling", "theta1": 1.0, "n_values": [8, 16, 24, 32, 40]}
        with pytest.raises(ConfigError, match="levels"):
            parse_config(
                "noise-sweep", overrides=overrides({**base, "levels": [0.1]})
            )

    def test_robustness_sweep_rejects_scaling_keys(self):
        base = {
            "sweep": "robustness",
            "theta1": 1.5,
            "theta2_left": PI,
            "theta2_right": 0.0,
            "levels": [0.0, 0.1],
            "walk_steps": 32,
        }
        with pytest.raises(ConfigError, match="n_values"):
            parse_config(
                "noise-sweep",
                overrides=overrides({**base, "n_values": [8, 16, 24, 32, 40]}),
            )

    @pytest.mark.parametrize(
        "n_values, message",
        [
            ([10, 20, 30, 40, 40], "distinct"),
            ([10, 12, 14, 16, 20], "factor of 4"),
        ],
    )
    def test_scaling_n_values_guards(self, n_values, message):
        base = {"sweep": "scaling", "theta1": 1.0, "n_values": n_values}
        with pytest.raises(ConfigError, match=message):
            parse_config("noise-sweep", overrides=overrides(base))

    def test_phase_diagram_range_must_increase(self):
        base = {
            "theta1_min": 0.0, "theta1_max": -1.0,
            "theta2_min": 0.0, "theta2_max": 1.0,
        }
        with pytest.raises(ConfigError, match="increasing"):
            parse_config("phase-diagram", overrides=overrides(base))

    def test_config_file_missing(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config("walk", config_path=str(tmp_path / "nope.json"))

    def test_config_file_bad_json(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError, match="valid JSON"):
            parse_config("walk", config_path=str(path))

    def test_config_file_not_an_object(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigError, match="JSON object"):
            parse_config("walk", config_path=str(path))


class TestDescribe:
    def test_walk_schema_text(self):
        text = describe("walk")
        for key in ("length", "theta1", "steps", "input_coin", "seed", "format"):
            assert key in text
        assert "(required)" in text
        assert "[rad]" in text
        assert "common keys:" in text

    def test_all_kinds_describe(self):
        for kind in EXPERIMENT_KINDS:
            assert kind in describe(kind)

    def test_unknown_kind(self):
        with pytest.raises(ConfigError, match="bogus"):
            describe("bogus")

    def test_describe_exit_codes(self, capsys):
        assert main(["describe", "gain-scan"]) == 0
        assert "scale_min" in capsys.readouterr().out
        assert main(["describe", "bogus"]) == 2


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        code = main(["walk", "--set", "length=32", "--out", str(tmp_path)])
        assert code == 2
        assert "theta1" in capsys.readouterr().err

    def test_runtime_error_is_3_and_manifest_stays_incomplete(self, tmp_path):
        argv = [
            "walk", "--set", "length=16", "--set", "boundary=open",
            "--set", "theta1=0.5", "--set", "theta2=0.1", "--set", "steps=20",
            "--out", str(tmp_path),
        ]
        assert main(argv) == 3
        with open(tmp_path / "manifest.json") as fh:
            manifest = json.load(fh)
        assert manifest["complete"] is False
        assert manifest["outputs"] == []

    def test_dimension_cap_is_4(self, tmp_path, capsys):
        argv = [
            "edge", "--set", "length=8192", "--set", "theta1=1.5",
            "--set", "theta2_left=3.0", "--set", "theta2_right=0.0",
            "--out", str(tmp_path),
        ]
        assert main(argv) == 4
        assert "cap" in capsys.readouterr().err

    def test_success_is_0(self, tmp_path):
        argv = ["walk", "--out", str(tmp_path)]
        for k, v in WALK_MIN.items():
            argv += ["--set", f"{k}={json.dumps(v)}"]
        assert main(argv) == 0


class TestRunOutputs:
    def walk_config(self, out_dir, **extra):
        return parse_config(
            "walk", overrides=overrides({**WALK_MIN, **extra}), out=str(out_dir)
        )

    def test_walk_files_and_manifest(self, tmp_path):
        result = run(self.walk_config(tmp_path))
        with open(result.manifest_path) as fh:
            manifest = json.load(fh)
        assert manifest["artifact"] == "topowalk"
        assert manifest["kind"] == "walk"
        assert manifest["complete"] is True
        assert manifest["outputs"] == sorted(os.listdir(tmp_path))
        assert set(manifest["outputs"]) == {
            "manifest.json", "distribution.csv", "distribution.json",
            "summary.json",
        }

    def test_walk_distribution_table(self, tmp_path):
        run(self.walk_config(tmp_path))
        header, rows = read_csv_rows(tmp_path / "distribution.csv")
        assert header == list(serialize.DISTRIBUTION_HEADER)
        assert len(rows) == WALK_MIN["length"]
        total = sum(float(r[1]) for r in rows)
        assert abs(total - 1.0) < 1e-12
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert abs(summary["norm"] - 1.0) < 1e-12
        assert summary["launch_site"] == WALK_MIN["length"] // 2

    def test_format_selects_tables(self, tmp_path):
        run(self.walk_config(tmp_path / "csv", format="csv"))
        names = set(os.listdir(tmp_path / "csv"))
        assert "distribution.csv" in names and "distribution.json" not in names
        run(self.walk_config(tmp_path / "json", format="json"))
        names = set(os.listdir(tmp_path / "json"))
        assert "distribution.json" in names and "distribution.csv" not in names
        assert "summary.json" in names

    def test_manifest_rerun_is_bitwise_identical(self, tmp_path):
        out = tmp_path / "run"
        config = self.walk_config(out, seed=7)
        run(config)
        before = read_files(out)
        assert main(["walk", "--config", str(out / "manifest.json")]) == 0
        assert read_files(out) == before

    def test_manifest_rerun_with_variant_keys(self, tmp_path):
        # resolved manifests carry nulls and defaults for the unused
        # variant keys; reruns must not mistake them for user-set keys
        out = tmp_path / "chain"
        config = parse_config(
            "gaussian",
            overrides=overrides(
                {"network": "su11_chain", "modes": 2, "chi": 0.4, "steps": 2}
            ),
            out=str(out),
        )
        run(config)
        before = read_files(out)
        assert main(["gaussian", "--config", str(out / "manifest.json")]) == 0
        assert read_files(out) == before
        rerun = parse_config("gaussian", config_path=str(out / "manifest.json"))
        assert rerun.values == config.values

    def test_manifest_kind_mismatch(self, tmp_path):
        out = tmp_path / "run"
        run(self.walk_config(out))
        with pytest.raises(ConfigError, match="describes a 'walk' run"):
            parse_config("edge", config_path=str(out / "manifest.json"))

    def test_phase_diagram_grid(self, tmp_path):
        config = parse_config(
            "phase-diagram",
            overrides=overrides(
                {
                    "theta1_min": -2.8, "theta1_max": 2.8, "theta1_count": 8,
                    "theta2_min": -2.8, "theta2_max": 2.8, "theta2_count": 8,
                    "n_k": 64,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        header, rows = read_csv_rows(tmp_path / "phase_diagram.csv")
        assert header == list(serialize.PHASE_DIAGRAM_HEADER)
        assert len(rows) == 64
        windings = {r[2] for r in rows}
        assert windings <= {"-1", "0", "1", ""}
        assert {"-1", "1"} <= windings
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert summary["cells"] == 64

    def test_edge_certificate_outputs(self, tmp_path):
        config = parse_config(
            "edge",
            overrides=overrides(
                {
                    "length": 64, "theta1": PI / 2,
                    "theta2_left": PI, "theta2_right": 0.0,
                    "walk_steps": 32, "window": 6,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        with open(tmp_path / "certificate.json") as fh:
            cert = json.load(fh)
        assert cert["walls_sites"] == [-0.5, 31.5]
        assert all(c >= 1 for c in cert["counts"])
        header, rows = read_csv_rows(tmp_path / "edge_states.csv")
        assert header == list(serialize.EDGE_STATE_HEADER)
        assert len(rows) == len(cert["states"])
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert 0.0 < summary["boundary_walk"]["retained"] <= 1.0
        header, rows = read_csv_rows(tmp_path / "boundary_walk.csv")
        assert len(rows) == 64

    def test_gaussian_chain_outputs(self, tmp_path):
        config = parse_config(
            "gaussian",
            overrides=overrides(
                {"network": "su11_chain", "modes": 2, "chi": 1.0, "steps": 1}
            ),
            out=str(tmp_path),
        )
        run(config)
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert abs(summary["total_photons"] - 2 * math.sinh(1.0) ** 2) < 1e-9
        assert summary["pairs"] == [[0, 1]]
        assert summary["log_negativity"][0] > 1.9
        header, rows = read_csv_rows(tmp_path / "correlations.csv")
        assert header == list(serialize.CORRELATION_HEADER)
        header, rows = read_csv_rows(tmp_path / "photon_trace.csv")
        assert header == list(serialize.TRACE_HEADER)
        assert len(rows) == 2

    def test_gaussian_walk_network_conserves_photons(self, tmp_path):
        config = parse_config(
            "gaussian",
            overrides=overrides(
                {
                    "network": "walk", "length": 12, "theta1": 0.7,
                    "theta2": -0.4, "steps": 3, "photon_number": 2.5,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert abs(summary["total_photons"] - 2.5) < 1e-9

    def test_noise_scaling_outputs(self, tmp_path):
        n_values = [8, 12, 16, 24, 32, 48]
        config = parse_config(
            "noise-sweep",
            overrides=overrides(
                {
                    "sweep": "scaling", "theta1": PI / 2, "protocol": "simple",
                    "length": 128, "realizations": 64,
                    "coin_dephasing": 1.0, "n_values": n_values,
                    "histogram": True, "histogram_bins": 12,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        header, rows = read_csv_rows(tmp_path / "scaling.csv")
        assert header == list(serialize.SCALING_HEADER)
        assert [int(r[0]) for r in rows] == n_values
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert 0.3 < summary["beta"] < 0.7
        with open(tmp_path / "histogram.json") as fh:
            hist = json.load(fh)
        assert all(sum(site) == 64 for site in hist["counts"])
        assert len(hist["counts"][0]) == 12

    def test_noise_robustness_outputs(self, tmp_path):
        config = parse_config(
            "noise-sweep",
            overrides=overrides(
                {
                    "sweep": "robustness", "theta1": PI / 2,
                    "theta2_left": PI, "theta2_right": 0.0,
                    "length": 64, "levels": [0.0, 0.3], "walk_steps": 48,
                    "realizations": 8, "window": 6,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        header, rows = read_csv_rows(tmp_path / "robustness.csv")
        assert header == list(serialize.ROBUSTNESS_HEADER)
        assert [r[0] for r in rows] == ["phase", "phase"]
        assert [float(r[1]) for r in rows] == [0.0, 0.3]
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert summary["baseline_retained"] == float(rows[0][2])

    def test_gain_scan_outputs(self, tmp_path):
        config = parse_config(
            "gain-scan",
            overrides=overrides(
                {
                    "functional": "quadrature_squeezing",
                    "dephasing": 0.2,
                    "scale_count": 25,
                }
            ),
            out=str(tmp_path),
        )
        run(config)
        header, rows = read_csv_rows(tmp_path / "gain_scan.csv")
        assert header == list(serialize.SCAN_HEADER)
        assert len(rows) == 25
        assert {r[4] for r in rows} <= {"0", "1"}
        with open(tmp_path / "summary.json") as fh:
            summary = json.load(fh)
        assert not summary["none_found"]
        assert abs(summary["critical_scale"] - 1.9560781631592166) < 1e-6
        assert abs(
            summary["critical_gain"] - math.cosh(summary["critical_scale"])
        ) < 1e-12

    def test_same_seed_reruns_match_bitwise(self, tmp_path):
        base = {
            "sweep": "scaling", "theta1": PI / 2, "protocol": "simple",
            "length": 64, "realizations": 16, "phase_noise": 0.2,
            "n_values": [8, 12, 16, 24, 32],
        }
        for sub in ("a", "b"):
            config = parse_config(
                "noise-sweep",
                overrides=overrides(base),
                out=str(tmp_path / sub),
                seed=3,
            )
            run(config)
        a = read_files(tmp_path / "a")
        b = read_files(tmp_path / "b")
        assert set(a) == set(b)
        for name in a:
            if name != "manifest.json":
                assert a[name] == b[name], name
