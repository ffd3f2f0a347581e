import numpy as np
import pytest

from cggan.cli import build_parser, main
from cggan.experiments import synthetic_blob_images
from cggan.generator import GeneratorNetwork, Layer, random_generator, save_weights
from cggan.images import load_image, save_image


SIDE = 10


@pytest.fixture()
def weights_file(tmp_path):
    base = random_generator(5, (16,), SIDE * SIDE, activation="tanh", seed=3)
    f32 = GeneratorNetwork(
        [
            Layer(
                weight=l.weight.astype(np.float32).astype(np.float64),
                bias=l.bias.astype(np.float32).astype(np.float64),
                activation=l.activation,
            )
            for l in base.layers
        ]
    )
    path = tmp_path / "gen.cggn"
    save_weights(f32, path)
    return path


@pytest.fixture()
def image_file(tmp_path):
    img = synthetic_blob_images(1, SIDE, seed=4)[0]
    path = tmp_path / "input.pgm"
    save_image(img, path)
    return path


class TestParser:
    def test_solve_flags(self):
        args = build_parser().parse_args(
            [
                "solve", "--problem", "cs", "--ratio", "0.5", "--snr", "inf",
                "--solver", "acggan", "--weights", "w", "--image", "i",
                "--mu", "1e-6", "--lambda", "0.25", "--rho", "0.5",
                "--K", "20", "--J", "5", "--Jx", "5", "--tau", "1e-8",
            ]
        )
        assert args.command == "solve"
        assert args.lam == 0.25
        assert np.isinf(args.snr)

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])


class TestSolveCommand:
    def test_cs_end_to_end(self, tmp_path, weights_file, image_file, capsys):
        out = tmp_path / "rec.pgm"
        trace = tmp_path / "trace.csv"
        rc = main(
            [
                "solve", "--problem", "cs", "--ratio", "0.8", "--snr", "inf",
                "--solver", "acggan", "--weights", str(weights_file),
                "--image", str(image_file), "--out", str(out),
                "--trace", str(trace), "--seed", "1",
                "--mu", "1e-6", "--lambda", "1e-6", "--rho", "1e-4",
                "--K", "40",
            ]
        )
        assert rc == 0
        printed = capsys.readouterr().out
        assert "ssim=" in printed
        rec = load_image(out)
        assert rec.shape == (SIDE, SIDE)
        header = trace.read_text().splitlines()[0]
        assert header.startswith("k,L_rho,F,")

    def test_ct_with_baseline(self, tmp_path, weights_file, image_file):
        rc = main(
            [
                "solve", "--problem", "ct", "--angles", "5",
                "--solver", "latorre", "--weights", str(weights_file),
                "--image", str(image_file), "--seed", "2",
                "--steps", "30",
            ]
        )
        assert rc == 0

    def test_missing_ratio_fails(self, weights_file, image_file):
        rc = main(
            [
                "solve", "--problem", "cs", "--solver", "acggan",
                "--weights", str(weights_file), "--image", str(image_file),
            ]
        )
        assert rc == 2


class TestSweepCommand:
    def test_spec_file_sweep(self, tmp_path, weights_file, capsys):
        dataset = tmp_path / "data"
        dataset.mkdir()
        for i, img in enumerate(synthetic_blob_images(2, SIDE, seed=5)):
            save_image(img, dataset / f"{i}.pgm")
        out = tmp_path / "results.csv"
        spec = tmp_path / "spec.cfg"
        spec.write_text(
            "problem = cs\n"
            "sweep = 0.5, 0.9\n"
            "snr = inf\n"
            "solver = acggan\n"
            "mu = 1e-6\nlambda = 1e-6\nrho = 1e-4\nK = 25\n"
            f"side = {SIDE}\n"
            "image_count = 2\n"
            f"dataset = {dataset}\n"
            f"out = {out}\n",
            encoding="utf-8",
        )
        rc = main(["sweep", "--spec", str(spec), "--weights", str(weights_file)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 5  # header + 2 sweep points x 2 images
        assert "sweep=0.5" in capsys.readouterr().out


class TestVerifyTheoryCommand:
    def test_passes_and_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "report.csv"
        rc = main(["verify-theory", "--seed", "3", "--iterations", "80",
                   "--out", str(out)])
        assert rc == 0
        assert "iteration_inequality" in capsys.readouterr().out
        assert out.read_text().startswith("check,pass,worst_margin,samples")


class TestCheckGeneratorCommand:
    def test_prints_estimates(self, weights_file, capsys):
        rc = main(
            [
                "check-generator", "--weights", str(weights_file),
                "--pairs", "50", "--radius", "2.0", "--range-shift",
            ]
        )
        assert rc == 0
        printed = capsys.readouterr().out
        assert "tau_g=" in printed and "nu_g=" in printed
