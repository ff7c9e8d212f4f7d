import csv
import json

import numpy as np
import pytest

from saddlescope import cli
from saddlescope.analysis.verify import VerificationReport

QUAD_SADDLE_PE = {
    "model": {"kind": "quadratic", "curvature": [1.0, -1.0]},
    "oracle": {"kind": "perturbed_exact", "perturbation_std": 1.0},
    "run": {"step_size": 0.05, "horizon": 100, "w0": [0.0, 0.0]},
    "classifier": {"tau": 1.0, "pi": 0.5, "beta": 0.0, "sigma_sq": 2.0, "sigma_l_sq": 1.0},
    "sweep": {"horizon_T": 8.0},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_fig1_preset(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        assert cli.main(["run", "--preset", "fig1", "--out", str(out)]) == 0
        r = rows(out)
        assert len(r) == 2001
        final = np.array([float(r[-1]["w_0"]), float(r[-1]["w_1"])])
        # ends near one of the two symmetric minima
        assert abs(final[0] - final[1]) < 0.1 and abs(abs(final[0]) - 1.4) < 0.2
        text = capsys.readouterr().out
        assert "final cost" in text and "final region: M" in text
        assert "iter,w_0" not in text

    def test_zero_step(self, tmp_path):
        doc = {**QUAD_SADDLE_PE, "run": {"step_size": 0.0, "horizon": 10, "w0": [0.3, 0.1]}}
        out = tmp_path / "t.csv"
        assert cli.main(["run", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
        r = rows(out)
        assert len({(x["w_0"], x["w_1"], x["cost"]) for x in r}) == 1

    def test_malformed_json(self, tmp_path, capsys):
        p = tmp_path / "bad.json"
        p.write_text("{")
        assert cli.main(["run", "--config", str(p), "--out", str(tmp_path / "x.csv")]) == 2
        assert "malformed" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        doc = {**QUAD_SADDLE_PE, "run": {"stepsize": 1}}
        assert cli.main(["run", "--config", write(tmp_path, doc), "--out", str(tmp_path / "x.csv")]) == 2
        assert "config.run.stepsize" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x")]) == 2

    def test_divergence(self, tmp_path):
        doc = {**QUAD_SADDLE_PE, "oracle": {"kind": "exact"},
               "run": {"step_size": 1.0, "horizon": 100, "w0": [0.0, 1.0]}}
        assert cli.main(["run", "--config", write(tmp_path, doc), "--out", str(tmp_path / "x.csv")]) == 3


class TestSweep:
    def test_quadratic_ratio(self, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code = cli.main(["sweep", "--config", write(tmp_path, QUAD_SADDLE_PE), "--out", str(out),
                         "--seeds", "200", "--mu-list", "0.05,0.025"])
        assert code == 0
        r = rows(out)
        med = [float(x["median"]) for x in r]
        assert 1.6 <= med[1] / med[0] <= 2.5
        assert all(float(x["q25"]) <= float(x["median"]) <= float(x["q75"]) for x in r)
        slope = json.loads((tmp_path / "s.slope.json").read_text())["slope"]
        assert -1.3 <= slope <= -0.7
        curves = rows(tmp_path / "s.curves.csv")
        assert {"cost_seed0", "cost_mean"} <= set(curves[0])
        assert "mu,n_seeds" not in capsys.readouterr().out

    def test_single_mu(self, tmp_path):
        assert cli.main(["sweep", "--config", write(tmp_path, QUAD_SADDLE_PE), "--out", str(tmp_path / "s.csv"),
                         "--mu-list", "0.05"]) == 2

    def test_too_few_seeds(self, tmp_path):
        assert cli.main(["sweep", "--config", write(tmp_path, QUAD_SADDLE_PE), "--out", str(tmp_path / "s.csv"),
                         "--seeds", "10"]) == 2

    def test_bad_mu_list(self, tmp_path):
        assert cli.main(["sweep", "--config", write(tmp_path, QUAD_SADDLE_PE), "--out", str(tmp_path / "s.csv"),
                         "--mu-list", "0.1,x"]) == 2

    def test_all_censored_level_excluded(self, tmp_path):
        doc = {**QUAD_SADDLE_PE, "sweep": {"horizon_T": 0.06}}
        out = tmp_path / "s.csv"
        assert cli.main(["sweep", "--config", write(tmp_path, doc), "--out", str(out), "--seeds", "50",
                         "--mu-list", "0.02,0.01,0.005"]) == 0
        side = json.loads((tmp_path / "s.slope.json").read_text())
        assert side["excluded_step_sizes"]
        assert all(float(x["censor_rate"]) == 1.0 for x in rows(out) if float(x["mu"]) in side["excluded_step_sizes"])


class TestVerify:
    def test_limits(self, tmp_path):
        out = tmp_path / "v.json"
        assert cli.main(["verify", "--preset", "fig1", "--suite", "limits", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["passed"] and len(doc["reports"]) == 3

    def test_unknown_suite(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            cli.main(["verify", "--preset", "fig1", "--suite", "bogus", "--out", str(tmp_path / "v.json")])
        assert info.value.code == 2

    def test_failure_exit_code(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "run_suite", lambda name, cfg: [VerificationReport("x", "fail", 1.0, 0.0)])
        assert cli.main(["verify", "--preset", "fig1", "--out", str(tmp_path / "v.json")]) == 4

    def test_skipped_premise_is_not_failure(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "run_suite",
                            lambda name, cfg: [VerificationReport("x", "skipped-premise", float("nan"), 0.0)])
        assert cli.main(["verify", "--preset", "fig1", "--out", str(tmp_path / "v.json")]) == 0


class TestSurface:
    def test_logistic(self, tmp_path):
        out = tmp_path / "g.csv"
        assert cli.main(["surface", "--preset", "fig1", "--out", str(out)]) == 0
        r = rows(out)
        assert len(r) == 101 * 101
        W = np.array([[float(x["w_0"]), float(x["w_1"])] for x in r])
        J = np.array([float(x["cost"]) for x in r])
        best = np.sort(J)[:2]
        assert best[0] == pytest.approx(best[1], abs=1e-14)
        a, b = W[np.argsort(J)[:2]]
        np.testing.assert_allclose(a, -b)
        origin = next(x for x in r if float(x["w_0"]) == 0.0 and float(x["w_1"]) == 0.0)
        assert float(origin["lambda_min"]) == pytest.approx(-0.4, abs=1e-12)
        assert origin["region"] == "H"

    def test_convex_quadratic(self, tmp_path):
        out = tmp_path / "g.csv"
        assert cli.main(["surface", "--preset", "convex-quadratic", "--out", str(out)]) == 0
        r = rows(out)
        J = np.array([float(x["cost"]) for x in r])
        k = int(np.argmin(J))
        assert float(r[k]["w_0"]) == 0.0 and float(r[k]["w_1"]) == 0.0
        near = [x["region"] for x in r if abs(float(x["w_0"])) <= 0.04 and abs(float(x["w_1"])) <= 0.04]
        assert set(near) == {"M"}

    def test_single_point(self, tmp_path):
        doc = {**QUAD_SADDLE_PE, "surface": {"n": 1, "w_max": 1.0}}
        out = tmp_path / "g.csv"
        assert cli.main(["surface", "--config", write(tmp_path, doc), "--out", str(out)]) == 0
        assert len(rows(out)) == 1

    def test_not_two_dimensional(self, tmp_path):
        doc = {"model": {"kind": "quadratic", "curvature": [1.0, 1.0, 1.0]}}
        assert cli.main(["surface", "--config", write(tmp_path, doc), "--out", str(tmp_path / "g.csv")]) == 2
