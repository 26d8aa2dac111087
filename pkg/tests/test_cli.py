import json
import os

import numpy as np
import pytest

from momentgmm import SymmetricTensor, WaringDecomposition, reconstruct
from momentgmm.cli import main, read_csv, run_benchmark, write_csv


@pytest.fixture
def model_file(tmp_path, example2_params):
    path = tmp_path / "model.json"
    path.write_text(example2_params.to_json())
    return str(path)


@pytest.fixture
def dataset(tmp_path, model_file):
    data_path = str(tmp_path / "data.csv")
    labels_path = str(tmp_path / "labels.txt")
    rc = main([
        "simulate", "--model", model_file, "--n", "400", "--seed", "3",
        "--out-data", data_path, "--out-labels", labels_path,
    ])
    assert rc == 0
    return data_path, labels_path


class TestCsvIo:
    def test_round_trip(self, tmp_path):
        path = str(tmp_path / "x.csv")
        rng = np.random.default_rng(0)
        data = rng.standard_normal((7, 3))
        write_csv(path, data)
        assert np.array_equal(read_csv(path), data)

    def test_header_skipped(self, tmp_path):
        path = str(tmp_path / "x.csv")
        write_csv(path, np.ones((2, 2)), header=["a", "b"])
        assert read_csv(path, header=True).shape == (2, 2)

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3\n")
        rc = main(["pca", str(path), "--q", "1", "--out", str(tmp_path / "o.csv")])
        assert rc == 1

    def test_missing_file_is_io_error(self, tmp_path):
        rc = main([
            "pca", str(tmp_path / "nope.csv"), "--q", "1",
            "--out", str(tmp_path / "o.csv"),
        ])
        assert rc == 3


class TestSimulate:
    def test_outputs(self, dataset, tmp_path):
        data_path, labels_path = dataset
        data = read_csv(data_path)
        assert data.shape == (400, 5)
        labels = [int(v) for v in open(labels_path).read().split()]
        assert len(labels) == 400
        assert set(labels) <= {0, 1, 2}

    def test_deterministic(self, tmp_path, model_file):
        out = []
        for tag in ("a", "b"):
            dp = str(tmp_path / f"d{tag}.csv")
            main(["simulate", "--model", model_file, "--n", "100", "--seed", "9",
                  "--out-data", dp, "--out-labels", str(tmp_path / f"l{tag}.txt")])
            out.append(open(dp).read())
        assert out[0] == out[1]

    def test_plot_data(self, tmp_path, model_file):
        pp = str(tmp_path / "plot.csv")
        main(["simulate", "--model", model_file, "--n", "10", "--seed", "0",
              "--out-data", str(tmp_path / "d.csv"),
              "--out-labels", str(tmp_path / "l.txt"), "--plot-data", pp])
        lines = open(pp).read().splitlines()
        assert lines[0] == "label,feature_x,feature_y,x,y"
        # 10 points per unordered feature pair, C(5,2)=10 pairs
        assert len(lines) == 1 + 10 * 10


class TestFit:
    @pytest.mark.parametrize("init", ["kmeans", "moments", "emem", "random"])
    def test_all_initializers(self, dataset, tmp_path, init):
        data_path, labels_path = dataset
        out = str(tmp_path / f"fit_{init}.json")
        rc = main([
            "fit", data_path, "--r", "3", "--init", init, "--seed", "1",
            "--labels", labels_path, "--out", out,
        ])
        assert rc == 0
        rep = json.loads(open(out).read())
        assert rep["initializer"] == init
        assert len(rep["params"]["weights"]) == 3
        assert 0.0 <= rep["error_rate"] <= 1.0
        assert rep["loglik_trace"][-1] >= rep["loglik_trace"][0]

    def test_flip_bic_sign(self, dataset, tmp_path):
        data_path, _ = dataset
        reports = []
        for flag in ([], ["--flip-bic-sign"]):
            out = str(tmp_path / f"fit{len(flag)}.json")
            main(["fit", data_path, "--r", "3", "--init", "kmeans",
                  "--seed", "0", "--out", out] + flag)
            reports.append(json.loads(open(out).read()))
        assert reports[0]["bic"] == -reports[1]["bic"]

    def test_moments_needs_small_r(self, dataset):
        data_path, _ = dataset
        rc = main(["fit", data_path, "--r", "6", "--init", "moments"])
        assert rc == 1


class TestDecompose:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        pts = rng.standard_normal((3, 4))
        wts = rng.uniform(0.5, 2.0, 3)
        t = reconstruct(WaringDecomposition(weights=wts, points=pts, order=3))
        tensor_path = tmp_path / "t.json"
        tensor_path.write_text(t.to_json())
        out = str(tmp_path / "dec.json")
        rc = main(["decompose", str(tensor_path), "--rank", "3", "--k", "2",
                   "--out", out])
        assert rc == 0
        dec = json.loads(open(out).read())
        assert len(dec["weights"]) == 3
        assert dec["residual"] < 1e-10

    def test_zero_tensor_numerical_failure(self, tmp_path):
        tensor_path = tmp_path / "z.json"
        tensor_path.write_text(SymmetricTensor.zero(3, 3).to_json())
        assert main(["decompose", str(tensor_path)]) == 2

    def test_malformed_tensor_input_error(self, tmp_path):
        tensor_path = tmp_path / "bad.json"
        tensor_path.write_text('{"dim": 2}')
        assert main(["decompose", str(tensor_path)]) == 1


class TestMoments:
    def test_reports_moment_set(self, dataset, tmp_path):
        data_path, _ = dataset
        out = str(tmp_path / "mom.json")
        assert main(["moments", data_path, "--out", out]) == 0
        obj = json.loads(open(out).read())
        assert obj["sigma_bar_sq"] > 0
        assert len(obj["m1"]) == 5
        assert len(obj["m2"]) == 5


class TestPca:
    def test_projection_shape_and_variance_order(self, dataset, tmp_path):
        data_path, _ = dataset
        out = str(tmp_path / "pca.csv")
        assert main(["pca", data_path, "--q", "2", "--out", out]) == 0
        proj = read_csv(out)
        assert proj.shape == (400, 2)
        v = proj.var(axis=0)
        assert v[0] >= v[1]

    def test_q_too_large(self, dataset, tmp_path):
        data_path, _ = dataset
        rc = main(["pca", data_path, "--q", "9", "--out", str(tmp_path / "o.csv")])
        assert rc == 1


class TestBenchmark:
    def make_config(self, example2_params, n=200, replicates=3, seed=0):
        return {
            "model": json.loads(example2_params.to_json()),
            "n": n,
            "replicates": replicates,
            "initializers": ["kmeans", "moments", "emem", "random"],
            "master_seed": seed,
        }

    def test_run_benchmark_shapes(self, example2_params):
        summary, rows = run_benchmark(self.make_config(example2_params))
        assert summary["replicates"] == 3
        assert len(rows) == 3 * 4
        shares = summary["shares"]
        for name in ("kmeans", "moments", "emem", "random"):
            assert 0.0 <= shares[name]["best_bic_pct"] <= 100.0
            assert shares[name]["fits"] == 3

    def test_cli_outputs(self, tmp_path, example2_params):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(self.make_config(example2_params)))
        out_dir = str(tmp_path / "results")
        rc = main(["benchmark", "--config", str(cfg), "--out-dir", out_dir,
                   "--quiet"])
        assert rc == 0
        summary = json.loads(open(os.path.join(out_dir, "summary.json")).read())
        assert "shares" in summary
        csv_lines = open(os.path.join(out_dir, "replicates.csv")).read().splitlines()
        assert len(csv_lines) == 1 + 3 * 4

    def test_summary_deterministic_across_runs_and_threads(
        self, tmp_path, example2_params, monkeypatch
    ):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(self.make_config(example2_params, n=150)))
        blobs = []
        for tag, threads in (("one", "1"), ("two", "1"), ("par", "4")):
            monkeypatch.setenv("MOMENTGMM_THREADS", threads)
            out_dir = str(tmp_path / tag)
            assert main(["benchmark", "--config", str(cfg), "--out-dir", out_dir,
                         "--quiet"]) == 0
            blobs.append(open(os.path.join(out_dir, "summary.json"), "rb").read())
        assert blobs[0] == blobs[1] == blobs[2]

    def test_repeats_aggregate(self, tmp_path, example2_params):
        cfg_dict = self.make_config(example2_params, n=150, replicates=2)
        cfg_dict["repeats"] = 2
        summary, rows = run_benchmark(cfg_dict)
        assert len(rows) == 2 * 2 * 4
        agg = summary["aggregate"]
        for name in cfg_dict["initializers"]:
            assert "best_ari_pct_mean" in agg[name]
            assert "best_ari_pct_var" in agg[name]

    def test_bad_config_rejected(self, tmp_path, example2_params):
        cfg_dict = self.make_config(example2_params, replicates=0)
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(cfg_dict))
        rc = main(["benchmark", "--config", str(cfg),
                   "--out-dir", str(tmp_path / "o"), "--quiet"])
        assert rc == 1
