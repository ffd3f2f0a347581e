"""Writers for the solver's binary weight format and reference CSVs.

The weight file is little-endian: magic "CGGN", format version u32 = 1,
layer count u32, then per layer rows u32, cols u32, activation tag u8
(0 identity, 1 tanh, 2 relu, 3 leaky-relu 0.2), float32 row-major weights,
float32 biases. The refs CSV carries pairs of (latent input, expected
output) produced by this package's own forward pass on the exact
serialized float32 weights.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"CGGN"
FORMAT_VERSION = 1
ACTIVATION_TAGS = {"identity": 0, "tanh": 1, "relu": 2, "leaky_relu": 3}
LEAKY_SLOPE = 0.2


@dataclass(frozen=True)
class DenseLayer:
    """One affine layer: weight (rows x cols) float32, bias (rows,) float32."""

    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATION_TAGS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError("layer needs a matrix weight and matching bias")


def as_float32_layers(layers) -> list:
    return [
        DenseLayer(
            weight=np.ascontiguousarray(l.weight, dtype=np.float32),
            bias=np.ascontiguousarray(l.bias, dtype=np.float32),
            activation=l.activation,
        )
        for l in layers
    ]


def forward_chain(layers, x: np.ndarray) -> np.ndarray:
    """Reference forward pass on the serialized float32 parameters."""
    h = np.asarray(x, dtype=np.float64)
    for layer in layers:
        h = layer.weight.astype(np.float64) @ h + layer.bias.astype(np.float64)
        if layer.activation == "tanh":
            h = np.tanh(h)
        elif layer.activation == "relu":
            h = np.maximum(h, 0.0)
        elif layer.activation == "leaky_relu":
            h = np.where(h >= 0.0, h, LEAKY_SLOPE * h)
    return h


def write_weight_file(layers, path) -> None:
    layers = as_float32_layers(layers)
    for prev, nxt in zip(layers, layers[1:]):
        if nxt.weight.shape[1] != prev.weight.shape[0]:
            raise ValueError(
                f"layer shapes do not chain: {prev.weight.shape} -> "
                f"{nxt.weight.shape}"
            )
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(layers)))
        for layer in layers:
            rows, cols = layer.weight.shape
            fh.write(
                struct.pack("<IIB", rows, cols, ACTIVATION_TAGS[layer.activation])
            )
            fh.write(layer.weight.astype("<f4").tobytes())
            fh.write(layer.bias.astype("<f4").tobytes())


def write_refs_csv(inputs, outputs, path) -> None:
    """Reference pairs, one row per pair: x0..x_{d-1}, y0..y_{n-1}.

    Values are printed with 9 significant digits, enough to round-trip
    float32 exactly.
    """
    if len(inputs) != len(outputs):
        raise ValueError("inputs and outputs must pair up")
    d = len(inputs[0])
    n = len(outputs[0])
    header = [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(n)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for x, y in zip(inputs, outputs):
            row = [format(np.float32(v), ".9g") for v in x]
            row += [format(np.float32(v), ".9g") for v in y]
            fh.write(",".join(row) + "\n")


def read_refs_csv(path, input_dim: int):
    """Parse a refs CSV back into (inputs, outputs) float32 arrays."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    inputs, outputs = [], []
    for line in lines[1:]:
        values = np.array([float(v) for v in line.split(",")], dtype=np.float32)
        inputs.append(values[:input_dim])
        outputs.append(values[input_dim:])
    return inputs, outputs
