"""Self-contained generative-network runtime.

A generator is a chain of dense affine layers with elementwise activations,
optionally wrapped by a range shift (g+1)/2 and an orthonormal basis matrix
so the network can emit either images or change-of-basis coefficients.
Forward evaluation, exact vector-Jacobian products (reverse mode) and
Jacobian-vector products (forward mode) are provided, plus a binary weight
format shared with the export tooling.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, WeightFormatError
from .linalg import as_vector

ACTIVATIONS = ("identity", "tanh", "relu", "leaky_relu")
LEAKY_SLOPE = 0.2

_MAGIC = b"CGGN"
_FORMAT_VERSION = 1
_ACT_TO_TAG = {"identity": 0, "tanh": 1, "relu": 2, "leaky_relu": 3}
_TAG_TO_ACT = {v: k for k, v in _ACT_TO_TAG.items()}


def _apply_activation(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "identity":
        return pre
    if name == "tanh":
        return np.tanh(pre)
    if name == "relu":
        return np.maximum(pre, 0.0)
    if name == "leaky_relu":
        return np.where(pre >= 0.0, pre, LEAKY_SLOPE * pre)
    raise InvalidInputError(f"unknown activation {name!r}")


def _activation_derivative(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(pre)
    if name == "tanh":
        t = np.tanh(pre)
        return 1.0 - t * t
    if name == "relu":
        return (pre > 0.0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(pre >= 0.0, 1.0, LEAKY_SLOPE)
    raise InvalidInputError(f"unknown activation {name!r}")


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise InvalidInputError("layer expects a matrix weight and vector bias")
        if self.weight.shape[0] != self.bias.shape[0]:
            raise InvalidInputError(
                f"bias length {self.bias.shape[0]} != rows {self.weight.shape[0]}"
            )
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise InvalidInputError("layer has non-finite parameters")


class GeneratorNetwork:
    """Dense layer chain G: R^d -> R^n."""

    def __init__(self, layers):
        layers = list(layers)
        if not layers:
            raise InvalidInputError("generator needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise InvalidInputError(
                    f"layer dimensions do not chain: {prev.weight.shape} -> "
                    f"{nxt.weight.shape}"
                )
        self.layers = layers
        self.input_dim = layers[0].weight.shape[1]
        self.output_dim = layers[-1].weight.shape[0]

    def forward(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.shape[0] != self.input_dim:
            raise InvalidInputError(
                f"input length {x.shape[0]} != d={self.input_dim}"
            )
        h = x
        for layer in self.layers:
            h = _apply_activation(layer.activation, layer.weight @ h + layer.bias)
        return h

    def _forward_with_tape(self, x):
        """Forward pass keeping pre-activations for the backward sweep."""
        pres = []
        h = x
        for layer in self.layers:
            pre = layer.weight @ h + layer.bias
            pres.append(pre)
            h = _apply_activation(layer.activation, pre)
        return h, pres

    def vjp(self, x, w) -> np.ndarray:
        """Transposed-Jacobian product (d/dx G(x))^T applied backwards: J(x)^T w."""
        x = as_vector(x)
        w = as_vector(w)
        if x.shape[0] != self.input_dim:
            raise InvalidInputError(f"input length {x.shape[0]} != d={self.input_dim}")
        if w.shape[0] != self.output_dim:
            raise InvalidInputError(
                f"cotangent length {w.shape[0]} != n={self.output_dim}"
            )
        _, pres = self._forward_with_tape(x)
        g = w
        for layer, pre in zip(reversed(self.layers), reversed(pres)):
            g = layer.weight.T @ (_activation_derivative(layer.activation, pre) * g)
        return g

    def jvp(self, x, t) -> np.ndarray:
        """Jacobian-vector product J(x) t by forward-mode tangent propagation."""
        x = as_vector(x)
        t = as_vector(t)
        if x.shape[0] != self.input_dim or t.shape[0] != self.input_dim:
            raise InvalidInputError("jvp expects two length-d vectors")
        h, tan = x, t
        for layer in self.layers:
            pre = layer.weight @ h + layer.bias
            tan = _activation_derivative(layer.activation, pre) * (layer.weight @ tan)
            h = _apply_activation(layer.activation, pre)
        return tan


class ScaleBasisGenerator:
    """Base network with optional range shift (g+1)/2 and basis matrix.

    With both wrappers active the composed map is basis @ ((base(x)+1)/2),
    matching the convention of emitting coefficients of [0,1]-range images.
    """

    def __init__(self, base: GeneratorNetwork, range_shift: bool = False, basis=None):
        self.base = base
        self.range_shift = bool(range_shift)
        if basis is not None:
            basis = np.asarray(basis, dtype=np.float64)
            if basis.shape != (base.output_dim, base.output_dim):
                raise InvalidInputError(
                    f"basis must be {base.output_dim}x{base.output_dim}"
                )
        self.basis = basis
        self.basis_orthonormal = _probe_orthonormal(basis)
        self.input_dim = base.input_dim
        self.output_dim = base.output_dim

    def forward(self, x) -> np.ndarray:
        out = self.base.forward(x)
        if self.range_shift:
            out = (out + 1.0) / 2.0
        if self.basis is not None:
            out = self.basis @ out
        return out

    def vjp(self, x, w) -> np.ndarray:
        w = as_vector(w)
        if self.basis is not None:
            w = self.basis.T @ w
        if self.range_shift:
            w = 0.5 * w
        return self.base.vjp(x, w)

    def jvp(self, x, t) -> np.ndarray:
        out = self.base.jvp(x, t)
        if self.range_shift:
            out = 0.5 * out
        if self.basis is not None:
            out = self.basis @ out
        return out


def wrap(base: GeneratorNetwork, range_shift=False, basis=None) -> ScaleBasisGenerator:
    return ScaleBasisGenerator(base, range_shift=range_shift, basis=basis)


def _probe_orthonormal(basis, probes: int = 3, tol: float = 1e-10) -> bool:
    """Detect an orthonormal basis from a few deterministic probe vectors.

    Forming basis.T @ basis is cubic; probing basis.T @ (basis @ v) = v on
    generic vectors separates orthonormal from non-orthonormal matrices at
    quadratic cost. Callers use the flag only to pick equivalent faster
    code paths, so a (measure-zero) false positive cannot change results
    beyond roundoff.
    """
    if basis is None:
        return False
    rng = np.random.default_rng(0x5EED)
    for _ in range(probes):
        v = rng.standard_normal(basis.shape[0])
        if np.linalg.norm(basis.T @ (basis @ v) - v) > tol * np.linalg.norm(v):
            return False
    return True


@dataclass(frozen=True)
class GeneratorAssumptionEstimate:
    """Empirical near-isometry and curvature constants of a generator.

    nu_g / tau_g bound ||G(a)-G(b)|| / ||a-b|| from below/above over the
    sampled pairs; l_g bounds the second-order Taylor remainder. Sampled
    estimates: the true tau_g/l_g can only be larger and the true nu_g
    smaller.
    """

    nu_g: float
    tau_g: float
    l_g: float
    sample_count: int
    sampling_radius: float

    def __post_init__(self):
        if not (0.0 <= self.nu_g <= self.tau_g):
            raise InvalidInputError("need 0 <= nu_g <= tau_g")
        if self.l_g < 0.0:
            raise InvalidInputError("l_g must be nonnegative")


def estimate_assumption_constants(
    gen, pair_count: int, radius: float, seed: int
) -> GeneratorAssumptionEstimate:
    """Sample random pairs in the radius ball and record the extreme ratios."""
    if pair_count < 2:
        raise InvalidInputError(f"pair_count must be >= 2, got {pair_count}")
    rng = np.random.default_rng(seed)
    d = gen.input_dim
    nu = np.inf
    tau = 0.0
    lg = 0.0
    for _ in range(pair_count):
        a = _ball_point(rng, d, radius)
        b = _ball_point(rng, d, radius)
        dx = a - b
        ndx = float(np.linalg.norm(dx))
        if ndx == 0.0:
            continue
        dg = gen.forward(a) - gen.forward(b)
        ratio = float(np.linalg.norm(dg)) / ndx
        nu = min(nu, ratio)
        tau = max(tau, ratio)
        remainder = dg - gen.jvp(b, dx)
        lg = max(lg, 2.0 * float(np.linalg.norm(remainder)) / ndx**2)
    return GeneratorAssumptionEstimate(
        nu_g=nu, tau_g=tau, l_g=lg, sample_count=pair_count, sampling_radius=radius
    )


def _ball_point(rng, d, radius):
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    return v * radius * rng.uniform() ** (1.0 / d)


def random_generator(
    d: int,
    hidden,
    n: int,
    activation: str = "tanh",
    seed: int = 0,
    gain: float = 1.0,
    bias_scale: float = 0.05,
) -> GeneratorNetwork:
    """Random dense generator with spectral-norm-scaled weights.

    Each weight matrix is rescaled to spectral norm ``gain`` so the layer
    product bounds the Lipschitz constant; last layer uses ``activation``,
    hidden layers always tanh.
    """
    rng = np.random.default_rng(seed)
    sizes = [d, *list(hidden), n]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        W = rng.standard_normal((fan_out, fan_in))
        W *= gain / np.linalg.svd(W, compute_uv=False)[0]
        b = bias_scale * rng.standard_normal(fan_out)
        act = activation if i == len(sizes) - 2 else "tanh"
        layers.append(Layer(weight=W, bias=b, activation=act))
    return GeneratorNetwork(layers)


def save_weights(net: GeneratorNetwork, path) -> None:
    """Serialize to the binary weight format (float32, little-endian)."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _FORMAT_VERSION, len(net.layers)))
        for layer in net.layers:
            rows, cols = layer.weight.shape
            fh.write(struct.pack("<IIB", rows, cols, _ACT_TO_TAG[layer.activation]))
            fh.write(layer.weight.astype("<f4").tobytes())
            fh.write(layer.bias.astype("<f4").tobytes())


def load_weights(path) -> GeneratorNetwork:
    """Load a weight file, widening parameters to float64.

    Raises WeightFormatError (with the failing byte offset) on bad magic,
    truncation, inconsistent dimensions, or trailing bytes.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise WeightFormatError("bad magic bytes", offset=0)
    pos = 4
    version, layer_count = _read_struct(data, "<II", pos)
    pos += 8
    if version != _FORMAT_VERSION:
        raise WeightFormatError(f"unsupported format version {version}", offset=4)
    if layer_count == 0:
        raise WeightFormatError("file declares zero layers", offset=8)
    layers = []
    for idx in range(layer_count):
        rows, cols, tag = _read_struct(data, "<IIB", pos)
        pos += 9
        if tag not in _TAG_TO_ACT:
            raise WeightFormatError(f"unknown activation tag {tag}", offset=pos - 1)
        if rows == 0 or cols == 0:
            raise WeightFormatError(
                f"layer {idx} has degenerate shape {rows}x{cols}", offset=pos - 9
            )
        W = _read_f32(data, pos, rows * cols).reshape(rows, cols)
        pos += 4 * rows * cols
        b = _read_f32(data, pos, rows)
        pos += 4 * rows
        layers.append(Layer(weight=W, bias=b, activation=_TAG_TO_ACT[tag]))
    if pos != len(data):
        raise WeightFormatError(
            f"{len(data) - pos} trailing bytes after the last layer", offset=pos
        )
    try:
        return GeneratorNetwork(layers)
    except InvalidInputError as exc:
        raise WeightFormatError(str(exc)) from exc


def _read_struct(data, fmt, pos):
    size = struct.calcsize(fmt)
    if pos + size > len(data):
        raise WeightFormatError("file truncated", offset=pos)
    return struct.unpack_from(fmt, data, pos)


def _read_f32(data, pos, count):
    size = 4 * count
    if pos + size > len(data):
        raise WeightFormatError("file truncated", offset=pos)
    return np.frombuffer(data, dtype="<f4", count=count, offset=pos).astype(np.float64)
