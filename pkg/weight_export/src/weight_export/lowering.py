"""Lower linear torch modules to explicit dense matrices by basis probing.

Any linear module (Linear, Conv2d, ConvTranspose2d, flatten/reshape
compositions) equals x -> W x + b on flattened inputs; probing with an
identity batch recovers W column by column and a zero input recovers b.
Every lowered layer is verified against the native module before export.
"""

from __future__ import annotations

import numpy as np
import torch


def lower_module(module, in_shape) -> tuple:
    """Dense (weight, bias) equal to the module on row-major flattened input."""
    module = module.eval()
    in_dim = int(np.prod(in_shape))
    with torch.no_grad():
        zero = torch.zeros((1, *in_shape), dtype=torch.float32)
        bias = module(zero).reshape(-1).numpy().astype(np.float32)
        eye = torch.eye(in_dim, dtype=torch.float32).reshape(in_dim, *in_shape)
        cols = module(eye).reshape(in_dim, -1).numpy().astype(np.float32)
    weight = cols.T - bias[:, None]
    return np.ascontiguousarray(weight), bias


def verify_lowering(module, weight, bias, in_shape, trials: int = 10,
                    tol: float = 1e-5, seed: int = 0) -> float:
    """Worst relative error of the dense form vs the native module.

    Raises if any trial exceeds ``tol``; returns the worst error observed.
    """
    module = module.eval()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(int(np.prod(in_shape))).astype(np.float32)
        with torch.no_grad():
            native = (
                module(torch.from_numpy(x).reshape(1, *in_shape))
                .reshape(-1)
                .numpy()
            )
        dense = weight @ x + bias
        err = float(
            np.linalg.norm(dense - native) / max(np.linalg.norm(native), 1.0)
        )
        worst = max(worst, err)
    if worst > tol:
        raise ValueError(f"lowered layer mismatch: {worst:.3e} > {tol:.1e}")
    return worst
