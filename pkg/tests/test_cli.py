import json
import os

import pytest

from dpsecagg.cli import RunConfig, atomic_write, load_config, main, parse_range
from dpsecagg.errors import SecAggError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_precedence(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"k": 5, "u": 3, "seed": 4}))
        cfg = load_config(str(path), {"seed": 9, "u": None})
        assert (cfg.k, cfg.u, cfg.seed, cfg.l) == (5, 3, 9, RunConfig().l)

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"kk": 5}))
        with pytest.raises(SecAggError):
            load_config(str(path), {})

    def test_default_q(self):
        assert RunConfig(k=4, u=3, kc=2, scheme="multi").params().q == 11

    def test_range(self):
        assert parse_range("1-3,5") == [1, 2, 3, 5]

    def test_atomic_write(self, tmp_path):
        target = tmp_path / "out.json"
        atomic_write(str(target), "x")
        atomic_write(str(target), "y")
        assert target.read_text() == "y"
        assert os.listdir(tmp_path) == ["out.json"]


class TestRun:
    def test_report(self, capsys, tmp_path):
        out_path = tmp_path / "t.json"
        code, out, _ = run_cli(capsys, "run", "--k", "3", "--u", "2", "--kc", "1", "--q", "11", "--l", "2",
                               "--dropout", "fixed:1,2", "--out", str(out_path))
        assert code == 0
        assert json.loads(out)["rates"]["rates"] == [1.0, 0.5]
        t = json.loads(out_path.read_text())
        assert t["u1"] == [1, 2] and t["schema_version"] == 1 and "demand" not in t

    def test_same_seed_same_bytes(self, capsys, tmp_path):
        paths = [tmp_path / "a.json", tmp_path / "b.json"]
        for p in paths:
            run_cli(capsys, "run", "--scheme", "multi", "--k", "5", "--u", "4", "--kc", "2", "--l", "6",
                    "--dropout", "random:0.3", "--seed", "11", "--out", str(p))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_debug_demand_exported(self, capsys, tmp_path):
        out_path = tmp_path / "t.json"
        run_cli(capsys, "run", "--debug-demand", "--out", str(out_path))
        assert "demand" in json.loads(out_path.read_text())

    def test_invalid_u(self, capsys):
        code, _, err = run_cli(capsys, "run", "--k", "3", "--u", "3")
        assert code == 2
        payload = json.loads(err)
        assert payload["error"] == "ParameterError" and "U <= K-1" in payload["message"]

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"scheme": "baseline", "k": 4, "u": 3, "kc": 2, "l": 3,
                                   "demand": [[1, 0, 2, 3], [0, 1, 1, 1]]}))
        code, out, _ = run_cli(capsys, "run", "--config", str(cfg))
        assert code == 0
        assert json.loads(out)["rates"]["r2"] == "2/3"


class TestVerify:
    def test_single_tiny_all_pass(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--q", "3", "--trials", "3")
        res = json.loads(out)
        assert code == 0 and [v["status"] for v in res["verdicts"]] == ["PASS"] * 4

    def test_low_q_rejected(self, capsys):
        code, _, err = run_cli(capsys, "verify", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2",
                               "--q", "5")
        assert code == 2 and "minimum" in json.loads(err)["message"]

    def test_leak_control_fails(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--checks", "privacy", "--control", "leak-demand")
        assert code == 1 and json.loads(out)["verdicts"][0]["status"] == "FAIL"

    def test_mi_skipped_for_multi(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2",
                               "--checks", "mi")
        v = json.loads(out)["verdicts"][0]
        assert code == 1 and v["status"] == "SKIPPED" and v["detail"]["reason"]


class TestRatesAndSweep:
    def test_rates_csv(self, capsys, tmp_path):
        out_path = tmp_path / "r.csv"
        code, out, _ = run_cli(capsys, "rates", "--k", "4", "--u", "3", "--kc-range", "1-2",
                               "--out", str(out_path))
        assert code == 0 and out_path.read_text() == out
        row = out.splitlines()[3].split(",")
        assert row[0] == "2" and [float(v) for v in row[1:]] == pytest.approx(
            [1, 1, 2, 2 / 3, 1, 2 / 3, 1.5], abs=0)

    def test_sweep(self, capsys):
        code, out, _ = run_cli(capsys, "sweep", "--scheme", "multi", "--k", "4", "--u", "3", "--kc", "2",
                               "--trials", "2")
        assert code == 0 and json.loads(out)["sweep"]["ok"]
