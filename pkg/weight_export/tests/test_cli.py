import numpy as np
import pytest

from weight_export.cli import main
from weight_export.format import read_refs_csv

cggan_generator = pytest.importorskip("cggan.generator")


def test_export_random_cli(tmp_path, capsys):
    out = tmp_path / "gen.cggn"
    rc = main(
        [
            "export-random", "--d", "4", "--hidden", "12,8", "--n", "20",
            "--activation", "tanh", "--seed", "3", "--out", str(out),
        ]
    )
    assert rc == 0
    printed = capsys.readouterr().out
    assert "10 reference pairs" in printed
    loaded = cggan_generator.load_weights(out)
    inputs, outputs = read_refs_csv(tmp_path / "gen.refs.csv", input_dim=4)
    for x, y in zip(inputs, outputs):
        got = loaded.forward(x.astype(np.float64))
        assert np.max(np.abs(got - y)) <= 1e-5


def test_train_toy_cli(tmp_path):
    side = 8
    rng = np.random.default_rng(0)
    dataset = tmp_path / "data"
    dataset.mkdir()
    for i in range(6):
        img = rng.uniform(0, 1, (side, side))
        data = np.round(img * 255).astype(np.uint8)
        (dataset / f"{i}.pgm").write_bytes(
            f"P5\n{side} {side}\n255\n".encode() + data.tobytes()
        )
    out = tmp_path / "toy.cggn"
    rc = main(
        [
            "train-toy", "--dataset", str(dataset), "--d", "4",
            "--epochs", "1", "--seed", "1", "--batch", "3",
            "--channels", "4", "--out", str(out),
        ]
    )
    assert rc == 0
    loaded = cggan_generator.load_weights(out)
    assert loaded.output_dim == side * side
