import json

import numpy as np
import pytest

from kpgraph.cli import main
from kpgraph.io import load_config, read_series, read_series_array, write_series
from kpgraph.spectral import MatrixSeries

SMALL = "p: 5\nq: 5\nn: 128\nM: 2\ngrid_points: 2\nruns: 1\n"


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    (d / "cfg.yaml").write_text(SMALL)
    assert main(["simulate", "--config", str(d / "cfg.yaml"), "--seed", "3", "--out", str(d)]) == 0
    return d


class TestIo:
    def test_round_trip_exact(self, tmp_path, rng):
        Z = rng.standard_normal((6, 2, 3)) * 10.0 ** rng.integers(-12, 12, size=(6, 2, 3))
        write_series(tmp_path / "s.csv", MatrixSeries(Z))
        np.testing.assert_array_equal(read_series_array(tmp_path / "s.csv"), Z)

    def test_odd_length_truncated(self, tmp_path, rng):
        write_series(tmp_path / "s.csv", rng.standard_normal((7, 2, 2)))
        with pytest.warns(UserWarning):
            s = read_series(tmp_path / "s.csv")
        assert s.n == 6

    @pytest.mark.parametrize("text", [
        "a,b,c,d\n0,0,0,1\n",
        "t,row,col,value\n0,0,0,1\n0,0,1,2\n1,0,0,3\n",
        "t,row,col,value\n0,0,0,1\n0,0,0,nan\n",
        "t,row,col,value\n0,0,0,x\n",
    ])
    def test_malformed(self, tmp_path, text):
        from kpgraph.io import InputError

        (tmp_path / "s.csv").write_text(text)
        with pytest.raises(InputError):
            read_series_array(tmp_path / "s.csv")

    def test_config(self, tmp_path):
        from kpgraph.io import InputError

        (tmp_path / "c.yaml").write_text("M: 3\nlambda_p: 0.1\n")
        cfg = load_config(tmp_path / "c.yaml", {"seed": 4})
        assert (cfg.M, cfg.lambda_p, cfg.lambda_q, cfg.seed) == (3, 0.1, "auto", 4)
        for bad in ("bogus: 1\n", "M: 0\n", "alpha: 2\n", "n: 15\n", "- 1\n", "M: 1.5\n"):
            (tmp_path / "c.yaml").write_text(bad)
            with pytest.raises(InputError):
                load_config(tmp_path / "c.yaml")


class TestCommands:
    def test_simulate_outputs(self, sim):
        Z = read_series_array(sim / "series.csv")
        assert Z.shape == (128, 5, 5)
        man = json.loads((sim / "manifest.json").read_text())
        assert man["config"]["seed"] == 3

    def test_simulate_reproducible(self, sim, tmp_path):
        assert main(["simulate", "--config", str(sim / "cfg.yaml"), "--seed", "3",
                     "--out", str(tmp_path)]) == 0
        assert (tmp_path / "series.csv").read_bytes() == (sim / "series.csv").read_bytes()

    def test_fit_deterministic(self, sim, tmp_path):
        args = ["fit", str(sim / "series.csv"), "--config", str(sim / "cfg.yaml"),
                "--lambda-p", "0.01", "--lambda-q", "0.02"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "estimate.json").read_bytes()
        assert a == (tmp_path / "b" / "estimate.json").read_bytes()
        est = json.loads(a)
        assert est["gamma_frobenius_norm"] == pytest.approx(1.0)
        assert len(est["phi"]["real"]) == 2 * 25
        for name in ("omega.dot", "gamma.dot", "combined.dot"):
            assert (tmp_path / "a" / name).read_text().startswith("graph")

    def test_select_marks_argmin(self, sim, tmp_path):
        assert main(["select", str(sim / "series.csv"), "--config", str(sim / "cfg.yaml"),
                     "--out", str(tmp_path)]) == 0
        est = json.loads((tmp_path / "estimate.json").read_text())
        table = est["bic_table"]
        assert len(table) == 4 and sum(r["selected"] for r in table) == 1
        best = min(table, key=lambda r: r["value"])
        assert best["selected"] and best["lambda_p"] == est["lambda_p"]

    def test_benchmark_and_roc(self, sim, tmp_path):
        cfg = str(sim / "cfg.yaml")
        out = tmp_path / "b.csv"
        assert main(["benchmark", "--config", cfg, "--out", str(out)]) == 0
        summary = json.loads(out.with_suffix(".json").read_text())
        assert summary["selection"] == "bic" and summary["runs"] == 1
        assert main(["benchmark", "--config", cfg, "--estimator", "iid", "--out",
                     str(tmp_path / "i.csv")]) == 0
        assert main(["benchmark", "--config", cfg, "--estimator", "iid", "--select", "bic",
                     "--out", str(tmp_path / "x.csv")]) == 2
        assert main(["roc", "--config", cfg, "--out", str(tmp_path / "r.csv")]) == 0
        rows = (tmp_path / "r.csv").read_text().splitlines()
        assert rows[0] == "estimator,scope,factor,fpr,tpr" and len(rows) == 1 + 2 * 3 * 13

    def test_exit_codes(self, tmp_path):
        assert main(["fit", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
        (tmp_path / "bad.yaml").write_text("nope: 1\n")
        assert main(["simulate", "--config", str(tmp_path / "bad.yaml"), "--out", str(tmp_path)]) == 2
        assert main(["simulate"]) == 2
        assert main(["fit", "x.csv", "--lambda", "-1", "--out", "o"]) == 2

    def test_preprocess(self, tmp_path):
        raw = tmp_path / "raw.csv"
        lines = ["t,row,a,b"] + [f"{t},{i},{1 + t + i},{2 + (t * 7 + i) % 5}" for t in range(6)
                                 for i in range(2)]
        raw.write_text("\n".join(lines) + "\n")
        assert main(["preprocess", str(raw), "--kelvin", "a", "--out", str(tmp_path / "s.csv")]) == 0
        Z = read_series_array(tmp_path / "s.csv")
        assert Z.shape == (5, 2, 2)
        np.testing.assert_allclose(np.mean(Z ** 2, axis=0), 1.0, atol=1e-10)
