import json

import numpy as np
import pytest

from structscan.cli import (
    DataError,
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_OK,
    load_observations,
    main,
    write_observations,
)
from structscan import ExperimentReport, Observations


def write_csv(path, text):
    path.write_text(text)
    return str(path)


class TestLoadObservations:
    def test_gaussian_round_trip(self, tmp_path):
        obs = Observations.gaussian([0.5, -1.25, 3.0])
        p = tmp_path / "x.csv"
        write_observations(obs, p)
        loaded = load_observations(p, "gaussian")
        assert np.array_equal(loaded.values, obs.values)

    def test_poisson_round_trip(self, tmp_path):
        obs = Observations.poisson([3, 0, 7], [1.5, 2.0, 0.5])
        p = tmp_path / "c.csv"
        write_observations(obs, p)
        loaded = load_observations(p, "poisson")
        assert np.array_equal(loaded.counts, obs.counts)
        assert np.array_equal(loaded.baselines, obs.baselines)

    def test_duplicate_index_names_line(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", "index,value\n0,1.0\n0,2.0\n")
        with pytest.raises(DataError, match="line 3"):
            load_observations(p, "gaussian")

    def test_missing_index(self, tmp_path):
        p = write_csv(tmp_path / "m.csv", "index,value\n0,1.0\n2,2.0\n")
        with pytest.raises(DataError, match="missing"):
            load_observations(p, "gaussian")

    def test_bad_header(self, tmp_path):
        p = write_csv(tmp_path / "h.csv", "idx,val\n0,1.0\n")
        with pytest.raises(DataError, match="header"):
            load_observations(p, "gaussian")

    def test_non_numeric_cell(self, tmp_path):
        p = write_csv(tmp_path / "n.csv", "index,value\n0,abc\n")
        with pytest.raises(DataError, match="non-numeric"):
            load_observations(p, "gaussian")

    def test_zero_baseline_rejected(self, tmp_path):
        p = write_csv(tmp_path / "z.csv", "index,count,baseline\n0,1,1.0\n1,2,0.0\n")
        with pytest.raises(DataError, match="baseline"):
            load_observations(p, "poisson")


class TestEstimateCommand:
    def test_interval_example(self, tmp_path):
        obs = write_csv(tmp_path / "x.csv", "index,value\n0,0\n1,5\n2,5\n3,0\n")
        out = tmp_path / "est"
        code = main([
            "estimate", "--family", "interval", "--estimator", "mle",
            "--observations", obs, "--out", str(out),
        ])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "est.json").read_text())
        assert payload["indices"] == [1, 2]
        assert payload["solver"] == "exact"
        assert "content_hash" in payload

    def test_gmm_estimator_writes_fit(self, tmp_path):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(60)
        x[:6] += 5.0
        obs = tmp_path / "x.csv"
        write_observations(Observations.gaussian(x), obs)
        out = tmp_path / "est"
        code = main([
            "estimate", "--family", "unstructured", "--estimator", "gmm",
            "--observations", str(obs), "--out", str(out), "--seed", "1",
        ])
        assert code == EXIT_OK
        assert (tmp_path / "est.fit.json").exists()
        assert (tmp_path / "est.responsibilities.csv").exists()


class TestDiseaseCommand:
    def test_toy_mle(self, tmp_path):
        obs = write_csv(tmp_path / "c.csv", "index,count,baseline\n0,5,2.0\n1,1,2.0\n")
        out = tmp_path / "dis"
        code = main([
            "disease", "--family", "unstructured",
            "--observations", obs, "--out", str(out),
        ])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "dis.json").read_text())
        assert payload["indices"] == [0]


class TestSampleCommand:
    def test_writes_artifacts(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "interval", "n": 30},
            "anomaly_size": 4,
            "mu": 2.5,
            "out": str(tmp_path / "samp"),
            "seed": 5,
        }))
        code = main(["sample", "--config", str(cfg)])
        assert code == EXIT_OK
        obs = load_observations(tmp_path / "samp.csv", "gaussian")
        assert len(obs) == 30
        meta = json.loads((tmp_path / "samp.json").read_text())
        assert len(meta["anomaly"]) == 4


class TestBiasCommand:
    def test_report_artifacts_and_round_trip(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "interval", "n": 50},
            "mu_grid": [2.0, 3.0],
            "trials": 3,
            "estimator": "mle",
            "anomaly_frac": 0.1,
            "out": str(tmp_path / "rep"),
            "threads": 1,
        }))
        code = main(["bias", "--config", str(cfg), "--seed", "17"])
        assert code == EXIT_OK
        rep = ExperimentReport.load(tmp_path / "rep.json", tmp_path / "rep.csv")
        assert len(rep.rows) == 6
        assert {r.mu for r in rep.rows} == {2.0, 3.0}
        payload = json.loads((tmp_path / "rep.json").read_text())
        assert payload["schema_version"] == 1
        assert "content_hash" in payload

    def test_seed_mandatory(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "interval", "n": 20},
            "mu_grid": [2.0],
            "trials": 2,
            "estimator": "mle",
            "out": str(tmp_path / "rep"),
        }))
        assert main(["bias", "--config", str(cfg)]) == EXIT_CONFIG

    def test_aggregated_config_errors(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"family": {"kind": "interval", "n": 20}, "seed": 1}))
        assert main(["bias", "--config", str(cfg)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        # one aggregated message naming every missing field
        for field in ("mu_grid", "trials", "estimator", "out"):
            assert field in err


class TestOtherCommands:
    def test_asymptotic_bias_prints_json(self, capsys):
        code = main(["asymptotic-bias", "--alpha", "0.1", "--mu", "2.0"])
        assert code == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["bias"] == pytest.approx(0.17019, abs=1e-4)

    def test_mu_detect_command(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "interval", "n": 60},
            "anomaly_size": 5,
            "trials_null": 150,
            "trials_alt": 150,
            "out": str(tmp_path / "md"),
        }))
        code = main(["mu-detect", "--config", str(cfg), "--seed", "2"])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "md.json").read_text())
        assert payload["mu_detect"] > 0
        curve = (tmp_path / "md.curve.csv").read_text().splitlines()
        assert curve[0] == "mu,type2_error"
        assert len(curve) > 2

    def test_wasserstein_command(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "pairs": [[0.2, 3.0]],
            "n_grid": [100, 1000, 10000],
            "trials": 3,
            "out": str(tmp_path / "w"),
        }))
        code = main(["wasserstein", "--config", str(cfg), "--seed", "3"])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "w.json").read_text())
        assert -0.9 < payload["slopes"][0] < -0.2

    def test_export_ilp_command(self, tmp_path):
        obs = write_csv(tmp_path / "x.csv", "index,value\n0,1.0\n1,-0.5\n2,0.25\n3,2.0\n")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "connected", "graph": {"kind": "path", "n": 4}},
            "observations": obs,
            "out": str(tmp_path / "model"),
        }))
        code = main(["export-ilp", "--config", str(cfg)])
        assert code == EXIT_OK
        text = (tmp_path / "model.lp").read_text()
        assert text.startswith("\\ structscan ILP export")
        assert "Binary" in text

    def test_graph_family_via_file(self, tmp_path):
        gpath = tmp_path / "g.txt"
        gpath.write_text("4\n0 1\n1 2\n2 3\n")
        obs = write_csv(tmp_path / "x.csv", "index,value\n0,1\n1,-5\n2,1\n3,1\n")
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "family": {"kind": "connected", "graph": str(gpath)},
            "observations": obs,
            "estimator": "mle",
            "out": str(tmp_path / "est"),
        }))
        code = main(["estimate", "--config", str(cfg)])
        assert code == EXIT_OK
        payload = json.loads((tmp_path / "est.json").read_text())
        assert payload["indices"] == [2, 3]

    def test_unknown_command_rejected(self, capsys):
        with pytest.raises(SystemExit):
            main(["frobnicate"])

    def test_threads_env_and_determinism(self, tmp_path, monkeypatch):
        base = {
            "family": {"kind": "interval", "n": 40},
            "mu_grid": [2.5],
            "trials": 4,
            "estimator": "mle",
            "anomaly_frac": 0.1,
        }
        cfg1 = tmp_path / "c1.json"
        cfg1.write_text(json.dumps({**base, "out": str(tmp_path / "r1"), "threads": 1}))
        cfg2 = tmp_path / "c2.json"
        cfg2.write_text(json.dumps({**base, "out": str(tmp_path / "r2")}))
        assert main(["bias", "--config", str(cfg1), "--seed", "9"]) == EXIT_OK
        monkeypatch.setenv("STRUCTSCAN_THREADS", "2")
        assert main(["bias", "--config", str(cfg2), "--seed", "9"]) == EXIT_OK
        r1 = ExperimentReport.load(tmp_path / "r1.json", tmp_path / "r1.csv")
        r2 = ExperimentReport.load(tmp_path / "r2.json", tmp_path / "r2.csv")
        assert r1.rows == r2.rows
