import json

import numpy as np
import pytest

from sparca.cli import main
from sparca.data import load_csv, write_csv
from sparca.pipeline import load_model

from conftest import block_factor_data


@pytest.fixture(scope="module")
def block_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "blocks.csv"
    X, _ = block_factor_data(400, seed=0)
    write_csv(X, path)
    return path


@pytest.fixture(scope="module")
def labeled_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "labeled.csv"
    X, _ = block_factor_data(360, n_blocks=4, block_size=8, seed=5)
    factors = np.add.reduceat(X, np.arange(0, 32, 8), axis=1)
    y = (factors[:, 0] - factors[:, 2] > 0).astype(float)
    write_csv(np.column_stack([X, y]), path)
    return path


class TestFit:
    def test_explicit_clusters(self, block_csv, tmp_path, capsys):
        out = tmp_path / "model.json"
        code = main([
            "fit", "--input", str(block_csv), "--clusters", "8",
            "--variance", "0.95", "--out", str(out), "--seed", "0",
        ])
        assert code == 0
        text = capsys.readouterr().out
        assert "8 clusters -> 8 features" in text
        model = load_model(out)
        assert model.n_reduced == 8

    def test_auto_selection(self, block_csv, tmp_path):
        out = tmp_path / "model.json"
        code = main([
            "fit", "--input", str(block_csv), "--auto",
            "--out", str(out), "--seed", "0",
        ])
        assert code == 0
        model = load_model(out)
        # the automatic choice lands on the plateau of the curve, where the
        # reduced feature count equals the true factor count
        assert model.n_reduced == 8

    def test_missing_input(self, tmp_path, capsys):
        code = main([
            "fit", "--input", str(tmp_path / "nope.csv"), "--clusters", "2",
            "--out", str(tmp_path / "m.json"),
        ])
        assert code != 0
        assert "nope.csv" in capsys.readouterr().err

    def test_unknown_flag(self, block_csv):
        with pytest.raises(SystemExit) as excinfo:
            main(["fit", "--input", str(block_csv), "--bogus"])
        assert excinfo.value.code == 2


class TestTransform:
    def test_round_trip(self, block_csv, tmp_path):
        model_path = tmp_path / "model.json"
        reduced_path = tmp_path / "reduced.csv"
        assert main([
            "fit", "--input", str(block_csv), "--clusters", "8",
            "--out", str(model_path), "--seed", "0",
        ]) == 0
        assert main([
            "transform", "--input", str(block_csv),
            "--model", str(model_path), "--out", str(reduced_path),
        ]) == 0
        model = load_model(model_path)
        reduced = load_csv(reduced_path)  # provenance comments are skipped
        assert reduced.shape == (400, model.n_reduced)
        header = reduced_path.read_text().splitlines()
        assert header[0].startswith("#")
        assert any("cluster 0 rank 0" in line for line in header[:12])
        assert min(c.achieved_evr for c in model.components) >= 0.95

    def test_dimension_mismatch(self, block_csv, tmp_path, capsys):
        model_path = tmp_path / "model.json"
        main([
            "fit", "--input", str(block_csv), "--clusters", "4",
            "--out", str(model_path), "--seed", "0",
        ])
        bad = tmp_path / "bad.csv"
        write_csv(np.ones((5, 3)), bad)
        code = main([
            "transform", "--input", str(bad),
            "--model", str(model_path), "--out", str(tmp_path / "r.csv"),
        ])
        assert code != 0
        assert "columns" in capsys.readouterr().err


class TestCfCurveCommand:
    def test_csv_schema_and_determinism(self, block_csv, tmp_path):
        out_a = tmp_path / "curve_a.csv"
        out_b = tmp_path / "curve_b.csv"
        args = [
            "cf-curve", "--input", str(block_csv),
            "--grid", "2,4,8,16,40,80", "--seed", "3",
        ]
        assert main(args + ["--out", str(out_a)]) == 0
        assert main(args + ["--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        lines = out_a.read_text().splitlines()
        assert lines[0].startswith("# selected =")
        assert lines[1] == "n_clusters,n_features,derivative"
        table = load_csv(out_a, has_header=True)
        assert table.shape == (6, 3)
        assert table[-1, 0] == 80 and table[-1, 1] == 80


class TestProfileCommand:
    def test_smoke(self, tmp_path):
        out = tmp_path / "runtime.csv"
        code = main([
            "profile", "--samples", "60,120,240,480",
            "--features", "24,48,96,192", "--repeats", "1",
            "--out", str(out), "--seed", "0",
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# sample_slope")
        assert lines[2] == "axis,size,seconds"
        assert len(lines) == 3 + 8


class TestEvalCommand:
    def test_artifacts(self, labeled_csv, tmp_path, capsys):
        prefix = tmp_path / "eval"
        code = main([
            "eval", "--input", str(labeled_csv), "--label-col", "-1",
            "--clusters", "4", "--embed-frac", "0.34",
            "--train-frac", "0.42", "--test-frac", "0.24",
            "--sigmas", "0,1,50", "--cv-folds", "3",
            "--out-prefix", str(prefix), "--seed", "0",
        ])
        assert code == 0
        acc_lines = (tmp_path / "eval_accuracy.csv").read_text().splitlines()
        assert acc_lines[0] == "model,n_features,lambda,test_accuracy"
        assert acc_lines[1].startswith("sparca,")
        assert acc_lines[2].startswith("pca,")
        clean = {
            row.split(",")[0]: float(row.split(",")[3]) for row in acc_lines[1:]
        }
        noise_lines = (tmp_path / "eval_noise.csv").read_text().splitlines()
        assert noise_lines[0] == "sigma,sparca_accuracy,pca_accuracy"
        first = noise_lines[1].split(",")
        assert float(first[0]) == 0.0
        # sigma = 0 row reproduces the clean test accuracies exactly
        assert float(first[1]) == clean["sparca"]
        assert float(first[2]) == clean["pca"]

    def test_requires_input(self, tmp_path):
        with pytest.raises(SystemExit):
            main(["eval", "--out-prefix", str(tmp_path / "x")])


class TestSynthCommand:
    def test_writes_matrix(self, tmp_path):
        out = tmp_path / "synth.csv"
        code = main([
            "synth", "--samples", "30", "--features", "50",
            "--rank", "10", "--out", str(out), "--seed", "1",
        ])
        assert code == 0
        X = load_csv(out)
        assert X.shape == (30, 50)
