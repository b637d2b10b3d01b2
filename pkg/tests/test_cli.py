import json
import os
from pathlib import Path

import numpy as np
import pytest

from ineqpanel.cli import RunConfig, build_estimation_spec, load_config_file, main


def run(args):
    return main([str(a) for a in args])


def dir_bytes(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


class TestConfig:
    def test_defaults_mirror_study_setup(self):
        cfg = RunConfig()
        spec = build_estimation_spec(cfg)
        assert spec.dependent.label == "gini"
        assert [r.label for r in spec.regressors] == [
            "gini(-1)", "poverty", "neetsrate(-1)", "social", "creditb",
        ]
        assert cfg.threshold == 0.05
        assert cfg.max_lag == 1
        assert cfg.covariance == "white_cross_section"
        assert cfg.sigma_divisor == "periods"

    def test_config_file_plus_cli_overrides(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text(
            "threshold = 0.10  # loose\nmax_lag = 2\nregressors = gini:1, poverty\n",
            encoding="utf-8",
        )
        values = load_config_file(cfgfile)
        assert values["threshold"] == "0.10"
        assert values["max_lag"] == "2"

    def test_bad_format_rejected(self, tmp_path):
        code = run(["cluster", "--out", tmp_path, "--format", "pdf"])
        assert code == 2

    def test_out_env_var_used(self, tmp_path, monkeypatch):
        monkeypatch.setenv("INEQPANEL_OUT", str(tmp_path / "envout"))
        assert RunConfig().out_dir() == tmp_path / "envout"


class TestClusterCommand:
    def test_bundled_scores_split(self, tmp_path):
        assert run(["cluster", "--out", tmp_path]) == 0
        rows = (tmp_path / "cluster_assignment.csv").read_text().splitlines()
        assert rows[0] == "country,cluster,criterion,threshold"
        inclusive = [r for r in rows[1:] if ",inclusive," in r]
        extractive = [r for r in rows[1:] if ",extractive," in r]
        assert len(inclusive) == 14 and len(extractive) == 14
        payload = json.loads((tmp_path / "cluster_assignment.json").read_text())
        assert payload["threshold"] == pytest.approx(4.29)

    def test_two_country_toy_scores(self, tmp_path):
        scores = tmp_path / "toy.csv"
        header = "country,pillar," + ",".join(f"sub{i:02d}" for i in range(1, 22))
        r1 = "AA,3.0," + ",".join(["3.0"] * 20 + ["4.0"])
        r2 = "BB,5.0," + ",".join(["5.0"] * 20 + ["7.0"])
        scores.write_text("\n".join([header, r1, r2]) + "\n", encoding="utf-8")
        assert run(["cluster", "--scores", scores, "--out", tmp_path / "o"]) == 0
        rows = (tmp_path / "o" / "cluster_assignment.csv").read_text().splitlines()[1:]
        assert sum(",inclusive," in r for r in rows) == 1

    def test_missing_subindex_column_exits_2(self, tmp_path, scores_path):
        text = scores_path.read_text().splitlines()
        broken = tmp_path / "broken.csv"
        broken.write_text(
            "\n".join([text[0].rsplit(",", 1)[0]] + [r.rsplit(",", 1)[0] for r in text[1:]]) + "\n",
            encoding="utf-8",
        )
        assert run(["cluster", "--scores", broken, "--out", tmp_path / "o"]) == 2

    def test_stability_matrix_shape(self, tmp_path):
        assert run(["cluster", "--out", tmp_path]) == 0
        rows = (tmp_path / "cluster_stability.csv").read_text().splitlines()
        assert len(rows) == 29  # header + 28 countries
        assert rows[0].count(",") == 1 + 22 + 2 - 1


class TestEstimateCommand:
    def test_reports_written_all_formats(self, tmp_path):
        assert run(["estimate", "--out", tmp_path]) == 0
        for label in ("inclusive", "extractive"):
            for ext in ("txt", "json", "csv"):
                assert (tmp_path / f"estimate_{label}.{ext}").exists()
        payload = json.loads((tmp_path / "estimate_inclusive.json").read_text())
        names = [row["variable"] for row in payload["coefficients"]]
        assert names == ["gini(-1)", "poverty", "neetsrate(-1)", "social", "creditb", "C"]
        assert payload["sample"]["n_obs"] == 84

    def test_deterministic_reports(self, tmp_path):
        assert run(["estimate", "--out", tmp_path / "a"]) == 0
        assert run(["estimate", "--out", tmp_path / "b"]) == 0
        assert dir_bytes(tmp_path / "a") == dir_bytes(tmp_path / "b")

    def test_json_roundtrip_identical_bytes(self, tmp_path):
        assert run(["estimate", "--out", tmp_path]) == 0
        raw = (tmp_path / "estimate_inclusive.json").read_bytes()
        payload = json.loads(raw)
        again = (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode()
        assert raw == again

    def test_missing_data_file_exits_2(self, tmp_path):
        assert run(["estimate", "--data", tmp_path / "nope.csv", "--out", tmp_path]) == 2


class TestUnitrootCommand:
    def test_battery_reports(self, tmp_path):
        assert run(["unitroot", "--out", tmp_path]) == 0
        payload = json.loads((tmp_path / "unitroot_inclusive.json").read_text())
        assert len(payload["variables"]) == 6
        names = [v["variable"] for v in payload["variables"]]
        assert names[0] == "gini" and "gini(-1)" in names
        for v in payload["variables"]:
            assert v["order"] in ("I(0)", "I(1)", "undetermined")
            assert len(v["level_tests"]) == 12

    def test_empty_regressors_exits_2(self, tmp_path, monkeypatch):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("regressors =\n", encoding="utf-8")
        assert run(["unitroot", "--config", cfg, "--out", tmp_path]) == 2


def toy_scores_csv(path: Path, entities) -> Path:
    header = "country,pillar," + ",".join(f"sub{i:02d}" for i in range(1, 22))
    lines = [header]
    for i, e in enumerate(entities):
        v = 3.0 + i * 0.2
        lines.append(f"{e},{v}," + ",".join([f"{v}"] * 20 + [f"{v * 1.3:.2f}"]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def synthetic_unitroot_run(tmp_path, kind: str) -> int:
    rng = np.random.default_rng(99 if kind == "stationary" else 100)
    entities = [f"E{i:02d}" for i in range(10)]
    rows = ["entity,year,variable,value"]
    for var in ("v0", "v1"):
        for e in entities:
            if kind == "stationary":
                x = np.empty(30)
                x[0] = rng.standard_normal()
                for t in range(1, 30):
                    x[t] = 0.2 * x[t - 1] + rng.standard_normal()
            else:
                x = np.cumsum(rng.standard_normal(30))
            for j, year in enumerate(range(1987, 2017)):
                rows.append(f"{e},{year},{var},{float(x[j])!r}")
    data = tmp_path / f"{kind}.csv"
    data.write_text("\n".join(rows) + "\n", encoding="utf-8")
    scores = toy_scores_csv(tmp_path / "scores.csv", entities)
    return run(
        [
            "unitroot", "--data", data, "--scores", scores, "--out", tmp_path / kind,
            "--dependent", "v0", "--regressors", "v1", "--format", "json",
        ]
    )


class TestUnitrootVerdicts:
    def test_all_stationary_panel_all_i0(self, tmp_path):
        assert synthetic_unitroot_run(tmp_path, "stationary") == 0
        for label in ("inclusive", "extractive"):
            payload = json.loads((tmp_path / "stationary" / f"unitroot_{label}.json").read_text())
            assert all(v["order"] == "I(0)" for v in payload["variables"])

    def test_all_random_walk_panel_all_i1(self, tmp_path):
        assert synthetic_unitroot_run(tmp_path, "randomwalk") == 0
        for label in ("inclusive", "extractive"):
            payload = json.loads((tmp_path / "randomwalk" / f"unitroot_{label}.json").read_text())
            assert all(v["order"] == "I(1)" for v in payload["variables"])


class TestDiagnoseCommand:
    def test_battery_shape(self, tmp_path):
        assert run(["diagnose", "--out", tmp_path]) == 0
        payload = json.loads((tmp_path / "diagnostics_inclusive.json").read_text())
        names = [t["name"] for t in payload["tests"]]
        assert names[0] == "Redundant fixed effects LR"
        assert names[-1] == "Breusch-Pagan-Godfrey heteroskedasticity"
        bpg = payload["tests"][-1]
        assert bpg["n_used"] == 84 and bpg["df_used"] == 5
        serial = [t for t in payload["tests"] if "serial" in t["name"]][0]
        assert serial["n_used"] == 70 and serial["df_used"] == 1

    def test_text_annotations(self, tmp_path):
        assert run(["diagnose", "--out", tmp_path, "--format", "text"]) == 0
        text = (tmp_path / "diagnostics_extractive.txt").read_text()
        assert "(n = 84, df = 5)" in text
        assert "(n = 70, df = 1)" in text


class TestReplicate:
    def test_full_pipeline_manifest(self, tmp_path):
        assert run(["replicate", "--out", tmp_path]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["stages"] == {
            "cluster": "ok", "unitroot": "ok", "estimate": "ok", "diagnose": "ok",
        }
        assert set(manifest["inputs"]) == {"data", "scores"}
        assert len(manifest["inputs"]["data"]["sha256"]) == 64

    def test_byte_deterministic_directory(self, tmp_path):
        assert run(["replicate", "--out", tmp_path / "r1"]) == 0
        assert run(["replicate", "--out", tmp_path / "r2"]) == 0
        assert dir_bytes(tmp_path / "r1") == dir_bytes(tmp_path / "r2")

    def test_missing_panel_exits_2_with_manifest(self, tmp_path):
        code = run(["replicate", "--data", tmp_path / "gone.csv", "--out", tmp_path])
        assert code == 2
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["stages"] == {}

    def test_benchmark_diff_emitted(self, tmp_path):
        assert run(["replicate", "--out", tmp_path, "--benchmark"]) == 0
        diff = json.loads((tmp_path / "benchmark_diff.json").read_text())
        assert set(diff["clusters"]) == {"inclusive", "extractive"}
        rows = diff["clusters"]["inclusive"]
        assert {r["variable"] for r in rows} == {
            "gini(-1)", "poverty", "neetsrate(-1)", "social", "creditb", "C",
        }
        for r in rows:
            assert r["status"] in ("ok", "warn")
            assert r["delta"] == pytest.approx(r["estimate"] - r["reference"], abs=1e-12)
