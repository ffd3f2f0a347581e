"""Construct or train toy generators and serialize them with references.

Both export paths end in the same place: a list of dense float32 layers,
a weight file in the solver's binary format, and a refs CSV of ten
(latent, output) pairs computed by this package's own forward pass on the
exact serialized parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .format import (
    DenseLayer,
    as_float32_layers,
    forward_chain,
    write_refs_csv,
    write_weight_file,
)
from .lowering import lower_module, verify_lowering
from .models import ToyDiscriminator, ToyGenerator

REFERENCE_PAIRS = 10


@dataclass(frozen=True)
class ExportBundle:
    weight_path: Path
    refs_path: Path
    layers: tuple
    inputs: tuple
    outputs: tuple


def refs_path_for(weight_path) -> Path:
    weight_path = Path(weight_path)
    return weight_path.with_name(weight_path.stem + ".refs.csv")


def export_layers(layers, weight_path, seed: int = 0) -> ExportBundle:
    """Serialize dense layers and ship reference I/O pairs alongside."""
    layers = as_float32_layers(layers)
    weight_path = Path(weight_path)
    write_weight_file(layers, weight_path)
    rng = np.random.default_rng(seed)
    d = layers[0].weight.shape[1]
    inputs = [rng.standard_normal(d).astype(np.float32) for _ in
              range(REFERENCE_PAIRS)]
    outputs = [forward_chain(layers, x).astype(np.float32) for x in inputs]
    refs = refs_path_for(weight_path)
    write_refs_csv(inputs, outputs, refs)
    return ExportBundle(
        weight_path=weight_path,
        refs_path=refs,
        layers=tuple(layers),
        inputs=tuple(inputs),
        outputs=tuple(outputs),
    )


def export_random_generator(
    d: int,
    hidden,
    n: int,
    activation: str = "tanh",
    seed: int = 0,
    weight_path="generator.cggn",
    gain: float = 1.0,
) -> ExportBundle:
    """Random dense generator with spectral-norm-scaled float32 weights.

    Hidden layers use tanh; the output layer uses ``activation``.
    Deterministic per seed, including the reference pairs.
    """
    rng = np.random.default_rng(seed)
    sizes = [d, *list(hidden), n]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        W = rng.standard_normal((fan_out, fan_in))
        W *= gain / np.linalg.svd(W, compute_uv=False)[0]
        b = 0.05 * rng.standard_normal(fan_out)
        act = activation if i == len(sizes) - 2 else "tanh"
        layers.append(
            DenseLayer(
                weight=W.astype(np.float32),
                bias=b.astype(np.float32),
                activation=act,
            )
        )
    return export_layers(layers, weight_path, seed=seed + 1)


def lower_generator(gen: ToyGenerator) -> list:
    """Dense layer chain equal to the torch generator, verified stage by
    stage against the native modules before export."""
    layers = []
    for module, in_shape, activation in gen.stages():
        weight, bias = lower_module(module, in_shape)
        verify_lowering(module, weight, bias, in_shape)
        layers.append(DenseLayer(weight=weight, bias=bias, activation=activation))
    return layers


def load_pgm_images(dataset_path) -> np.ndarray:
    """All P5 images under the path, max-normalized to [0, 1], stacked."""
    paths = sorted(Path(dataset_path).glob("*.pgm"))
    if not paths:
        raise ValueError(f"no PGM images found under {dataset_path}")
    images = []
    for p in paths:
        images.append(_read_pgm(p))
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise ValueError(f"dataset images disagree on shape: {shapes}")
    return np.stack(images)


def _read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    width, height, _maxval = fields
    pix = np.frombuffer(data, dtype=np.uint8, count=width * height,
                        offset=pos + 1)
    img = pix.reshape(height, width).astype(np.float32)
    peak = img.max()
    return img / peak if peak > 0 else img


def train_toy_generator(
    dataset_path,
    d: int = 16,
    epochs: int = 1,
    seed: int = 0,
    weight_path="generator.cggn",
    batch_size: int = 16,
    lr: float = 2e-4,
    base_channels: int = 16,
) -> ExportBundle:
    """Adversarially train the toy generator and export the lowered chain.

    Images train in [-1, 1] (2*I - 1 after max normalization) against a
    strided-conv discriminator with the non-saturating GAN loss.
    ``epochs = 0`` exports the seeded initialization unchanged. Single
    threaded and seeded throughout, so a fixed seed reproduces the bundle
    bytes exactly.
    """
    images = load_pgm_images(dataset_path)
    side = images.shape[1]
    if images.shape[1] != images.shape[2]:
        raise ValueError(f"need square images, got {images.shape[1:]}")
    real = torch.from_numpy(images.astype(np.float32) * 2.0 - 1.0).unsqueeze(1)

    torch.manual_seed(seed)
    old_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        gen = ToyGenerator(d, side, base_channels=base_channels)
        disc = ToyDiscriminator(side, base_channels=base_channels)
        opt_g = torch.optim.Adam(gen.parameters(), lr=lr, betas=(0.5, 0.999))
        opt_d = torch.optim.Adam(disc.parameters(), lr=lr, betas=(0.5, 0.999))
        loss_fn = torch.nn.BCEWithLogitsLoss()
        order = torch.Generator().manual_seed(seed + 1)

        for _epoch in range(epochs):
            perm = torch.randperm(real.shape[0], generator=order)
            for start in range(0, real.shape[0], batch_size):
                batch = real[perm[start:start + batch_size]]
                b = batch.shape[0]
                z = torch.randn(b, d, generator=order)
                fake = gen(z)

                opt_d.zero_grad()
                loss_d = loss_fn(disc(batch), torch.ones(b, 1)) + loss_fn(
                    disc(fake.detach()), torch.zeros(b, 1)
                )
                loss_d.backward()
                opt_d.step()

                opt_g.zero_grad()
                loss_g = loss_fn(disc(fake), torch.ones(b, 1))
                loss_g.backward()
                opt_g.step()

        layers = lower_generator(gen)
    finally:
        torch.set_num_threads(old_threads)
    return export_layers(layers, weight_path, seed=seed + 2)
