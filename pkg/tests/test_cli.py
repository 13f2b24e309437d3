import json
from pathlib import Path

import numpy as np
import pytest

from multifinsler.cli import dumps_stable, main
from multifinsler.config import ConfigError, load_config, parse_config

BIMETRIC = {
    "dimension": 2,
    "coordinates": ["x1", "x2"],
    "metrics": [
        {"name": "alpha", "components": [["1", "0"], ["0", "1"]]},
        {"name": "beta", "components": [["4", "0"], ["0", "1+x1^2"]]},
    ],
    "sampling": {"seed": 42, "count": 40, "box": [[-1, 1], [-1, 1]]},
}


@pytest.fixture()
def config_path(tmp_path):
    p = tmp_path / "space.json"
    p.write_text(json.dumps(BIMETRIC))
    return str(p)


class TestConfig:
    def test_load_valid(self, config_path):
        cfg = load_config(config_path)
        assert cfg.dimension == 2
        assert cfg.sampling.seed == 42
        space = cfg.build_space()
        assert space.n_metrics == 2

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_config("/nonexistent/space.json")

    def test_dimension_mismatch(self):
        bad = json.loads(json.dumps(BIMETRIC))
        bad["metrics"][0]["components"] = [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]]
        with pytest.raises(ConfigError, match="dimension"):
            parse_config(bad)

    def test_unknown_identifier(self):
        bad = json.loads(json.dumps(BIMETRIC))
        bad["metrics"][1]["components"] = [["x3", "0"], ["0", "1"]]
        with pytest.raises(ConfigError, match="unknown identifier"):
            parse_config(bad)

    def test_spd_probe(self):
        bad = json.loads(json.dumps(BIMETRIC))
        bad["metrics"][0]["components"] = [["1", "0"], ["0", "0-1"]]
        with pytest.raises(ConfigError, match="SPD"):
            parse_config(bad)

    def test_defaults(self):
        minimal = {
            "dimension": 2,
            "coordinates": ["x1", "x2"],
            "metrics": [{"name": "a", "components": [["1", "0"], ["0", "1"]]}],
        }
        cfg = parse_config(minimal)
        assert cfg.sampling.seed == 42
        assert cfg.sampling.count == 500
        assert cfg.sampling.box == ((-1.0, 1.0), (-1.0, 1.0))


class TestCli:
    def test_validate(self, config_path, tmp_path, capsys):
        assert main(["validate", "--config", config_path]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["valid"] is True

    def test_malformed_config_exits_2(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text('{"dimension": 2')
        code = main(["check", "--config", str(p), "--suite", "all"])
        assert code == 2
        assert "config error" in capsys.readouterr().err

    def test_check_identities(self, config_path, tmp_path):
        out = tmp_path / "report.json"
        code = main(["check", "--config", config_path, "--suite", "identities", "--out", str(out)])
        assert code == 0
        rep = json.loads(out.read_text())
        assert rep["passed"] is True
        names = {c["check"] for c in rep["checks"]}
        assert "determinant-identity" in names
        assert "spray-factorized-vs-variational" in names
        for c in rep["checks"]:
            assert c["tolerance_class"] in ("analytic", "fd", "nested-fd")

    def test_reports_are_byte_stable(self, config_path, tmp_path):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        main(["check", "--config", config_path, "--suite", "identities", "--out", str(out1)])
        main(["check", "--config", config_path, "--suite", "identities", "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_override_changes_report(self, config_path, tmp_path):
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        main(["check", "--config", config_path, "--suite", "identities", "--out", str(out1)])
        main(["check", "--config", config_path, "--suite", "identities", "--seed", "7",
              "--out", str(out2)])
        r1, r2 = json.loads(out1.read_text()), json.loads(out2.read_text())
        assert r1["seed"] == 42 and r2["seed"] == 7
        assert r1["passed"] and r2["passed"]

    def test_tol_scale(self, config_path, tmp_path):
        out = tmp_path / "r.json"
        main(["check", "--config", config_path, "--suite", "identities",
              "--tol-scale", "10", "--out", str(out)])
        rep = json.loads(out.read_text())
        assert rep["tolerance_scale"] == 10.0

    def test_measure_command(self, config_path, capsys):
        assert main(["measure", "--config", config_path, "--at", "0,0"]) == 0
        rep = json.loads(capsys.readouterr().out)
        ht = rep["holmes_thompson"]
        assert ht["rel_deviation"] < 1e-6
        assert rep["busemann_hausdorff"]["value"] > 0

    def test_geodesic_csv(self, config_path, tmp_path):
        out = tmp_path / "traj.csv"
        code = main(["geodesic", "--config", config_path, "--x0", "0.1,0.2", "--y0", "1,0",
                     "--t-end", "0.2", "--step", "0.01", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,x1,x2,y1,y2,F"
        assert len(lines) == 22

    def test_geodesic_json(self, config_path, capsys):
        code = main(["geodesic", "--config", config_path, "--x0", "0.1,0.2", "--y0", "1,0",
                     "--t-end", "0.2", "--step", "0.01", "--format", "json"])
        assert code == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["norm_drift"] < 1e-10
        assert rep["action"] == pytest.approx(sum(rep["action_per_sector"]), rel=1e-12)

    def test_sample_grid(self, config_path, tmp_path):
        out = tmp_path / "grid.csv"
        code = main(["sample", "--config", config_path, "--grid", "3", "--directions", "4",
                     "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x1,x2,theta,F,det_g,I,J,K"
        assert len(lines) == 1 + 3 * 3 * 4


class TestStableJson:
    def test_sorted_keys_and_float_format(self):
        text = dumps_stable({"b": 1.0 / 3.0, "a": [1, 2.5], "c": {"nested": True}})
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert "0.33333333333333331" in text
        parsed = json.loads(text)
        assert parsed["a"] == [1, 2.5]
        assert parsed["c"]["nested"] is True

    def test_floats_survive_roundtrip_exactly(self):
        vals = [1e-17, 3.141592653589793, 6.083928850380081, 2.0**-52]
        parsed = json.loads(dumps_stable(vals))
        assert parsed == vals
