import json
import os

import pytest

from rgmix.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main, parse_config_file
from rgmix.errors import RgmixError


def write_config(path, **kv):
    with open(path, "w") as fh:
        for key, val in kv.items():
            fh.write(f"{key} = {val}\n")


FAST_FIT = dict(g0=2.0, zk_mc=1000, ztilde_mc=40, k_max=6, m=1)


class TestSimulate:
    def test_writes_csv_and_manifest(self, tmp_path):
        out = tmp_path / "tri.csv"
        rc = main(["simulate", "--scenario", "trimodal", "--n", "50", "--seed", "3", "--out", str(out)])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0] == "x1,x2,label"
        assert len(lines) == 51
        manifest = json.loads((tmp_path / "tri.csv.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["seed"] == 3

    def test_bad_scenario_exit2(self, tmp_path, capsys):
        rc = main(["simulate", "--scenario", "bogus", "--n", "5", "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_USAGE
        assert "trimodal" in capsys.readouterr().err

    def test_zero_n_exit2(self, tmp_path):
        rc = main(["simulate", "--scenario", "trimodal", "--n", "0", "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_USAGE

    def test_same_seed_same_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["simulate", "--scenario", "emg", "--n", "40", "--seed", "9", "--out", str(a)]) == EXIT_OK
        assert main(["simulate", "--scenario", "emg", "--n", "40", "--seed", "9", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestConfigFile:
    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("nonsense = 3\n")
        with pytest.raises(RgmixError):
            parse_config_file(str(path))

    def test_missing_keys_fall_back(self, tmp_path, capsys):
        path = tmp_path / "c.txt"
        path.write_text("g0 = 5.5\n")
        values = parse_config_file(str(path))
        assert values["g0"] == 5.5
        assert values["tau"] == 10.0
        err = capsys.readouterr().err
        assert "tau" in err and "default" in err

    def test_comments_and_blanks(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("# comment\n\nm = 1  # trailing\n")
        assert parse_config_file(str(path))["m"] == 1

    def test_fixed_cov_forms(self, tmp_path):
        path = tmp_path / "c.txt"
        path.write_text("fixed_cov = 1.0\n")
        assert parse_config_file(str(path))["fixed_cov"] == 1.0
        path.write_text("fixed_cov = 1.0,2.0\n")
        assert parse_config_file(str(path))["fixed_cov"] == (1.0, 2.0)
        path.write_text("fixed_cov = none\n")
        assert parse_config_file(str(path))["fixed_cov"] is None


class TestFit:
    def test_end_to_end(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "40", "--seed", "1", "--out", str(data)])
        cfg = tmp_path / "cfg.txt"
        write_config(cfg, **FAST_FIT)
        out = tmp_path / "fit"
        rc = main([
            "fit", "--data", str(data), "--config", str(cfg),
            "--sweeps", "12", "--burn-in", "6", "--seed", "2", "--out", str(out),
        ])
        assert rc == EXIT_OK
        assert (out / "trace.jsonl").exists()
        manifest = json.loads((out / "fit.manifest.json").read_text())
        assert manifest["sweeps"] == 12
        assert manifest["config"]["g0"] == 2.0

    def test_burn_in_validation(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "10", "--seed", "1", "--out", str(data)])
        rc = main(["fit", "--data", str(data), "--sweeps", "5", "--burn-in", "5", "--out", str(tmp_path / "o")])
        assert rc == EXIT_USAGE

    def test_missing_data_exit1(self, tmp_path):
        rc = main(["fit", "--data", str(tmp_path / "nope.csv"), "--sweeps", "5", "--burn-in", "1", "--out", str(tmp_path / "o")])
        assert rc == EXIT_RUNTIME

    def test_reproducible_trace_bytes(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "30", "--seed", "4", "--out", str(data)])
        cfg = tmp_path / "cfg.txt"
        write_config(cfg, **FAST_FIT)
        outs = []
        for name in ("f1", "f2"):
            out = tmp_path / name
            rc = main([
                "fit", "--data", str(data), "--config", str(cfg),
                "--sweeps", "8", "--burn-in", "4", "--seed", "7", "--out", str(out),
            ])
            assert rc == EXIT_OK
            outs.append((out / "trace.jsonl").read_bytes())
        assert outs[0] == outs[1]

    def test_zk_cache_used(self, tmp_path, monkeypatch):
        cache = tmp_path / "zkcache"
        monkeypatch.setenv("RGM_ZK_CACHE", str(cache))
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "20", "--seed", "4", "--out", str(data)])
        cfg = tmp_path / "cfg.txt"
        write_config(cfg, **FAST_FIT)
        out1, out2 = tmp_path / "f1", tmp_path / "f2"
        assert main(["fit", "--data", str(data), "--config", str(cfg), "--sweeps", "6",
                     "--burn-in", "3", "--seed", "7", "--out", str(out1)]) == EXIT_OK
        cached = list(cache.glob("zk_*.txt"))
        assert len(cached) == 1
        assert main(["fit", "--data", str(data), "--config", str(cfg), "--sweeps", "6",
                     "--burn-in", "3", "--seed", "7", "--out", str(out2)]) == EXIT_OK
        # cache hit must not change the chain's stream
        assert (out1 / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()

    def test_multiple_chains(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "20", "--seed", "4", "--out", str(data)])
        cfg = tmp_path / "cfg.txt"
        write_config(cfg, **FAST_FIT)
        out = tmp_path / "fit"
        rc = main([
            "fit", "--data", str(data), "--config", str(cfg), "--sweeps", "6",
            "--burn-in", "3", "--seed", "7", "--chains", "2", "--out", str(out),
        ])
        assert rc == EXIT_OK
        assert (out / "trace_chain0.jsonl").exists()
        assert (out / "trace_chain1.jsonl").exists()


class TestDiagnose:
    @pytest.fixture
    def fitted(self, tmp_path):
        data = tmp_path / "d.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "40", "--seed", "1", "--out", str(data)])
        cfg = tmp_path / "cfg.txt"
        write_config(cfg, **FAST_FIT)
        out = tmp_path / "fit"
        main([
            "fit", "--data", str(data), "--config", str(cfg),
            "--sweeps", "14", "--burn-in", "7", "--seed", "2", "--out", str(out),
        ])
        return data, out / "trace.jsonl", tmp_path

    def test_khist_sums_to_one(self, fitted):
        data, trace, root = fitted
        out = root / "diag"
        rc = main(["diagnose", "--trace", str(trace), "--data", str(data), "--what", "khist", "--out", str(out)])
        assert rc == EXIT_OK
        rows = (out / "k_hist.csv").read_text().splitlines()[1:]
        total = sum(float(r.split(",")[1]) for r in rows)
        assert total == pytest.approx(1.0, abs=1e-9)

    def test_full_set_outputs(self, fitted):
        data, trace, root = fitted
        out = root / "diag_all"
        rc = main(["diagnose", "--trace", str(trace), "--data", str(data), "--out", str(out)])
        assert rc == EXIT_OK
        names = {"logcpo.txt", "density_grid.csv", "k_hist.csv", "cocluster.csv", "acf.csv"}
        made = {p.name for p in out.iterdir()}
        assert names <= made
        assert all((out / n).stat().st_size > 0 for n in names)

    def test_cpo_reproducible(self, fitted):
        data, trace, root = fitted
        a, b = root / "da", root / "db"
        for out in (a, b):
            assert main(["diagnose", "--trace", str(trace), "--data", str(data), "--what", "cpo", "--out", str(out)]) == EXIT_OK
        assert (a / "logcpo.txt").read_bytes() == (b / "logcpo.txt").read_bytes()

    def test_dimension_mismatch_exit2(self, fitted, tmp_path):
        data, trace, root = fitted
        other = tmp_path / "other.csv"
        main(["simulate", "--scenario", "trimodal", "--n", "12", "--seed", "0", "--out", str(other)])
        rc = main(["diagnose", "--trace", str(trace), "--data", str(other), "--what", "cpo", "--out", str(root / "dx")])
        assert rc == EXIT_USAGE

    def test_bad_what_exit2(self, fitted):
        data, trace, root = fitted
        rc = main(["diagnose", "--trace", str(trace), "--data", str(data), "--what", "spaghetti", "--out", str(root / "dy")])
        assert rc == EXIT_USAGE
