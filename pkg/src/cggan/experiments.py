"""Sweep orchestration: datasets, forward models, solvers, metrics, CSV.

A sweep point is either a compressive-sensing ratio m/n (Gaussian matrix,
DCT basis) or a Radon angle count (identity basis). The compound-prior
solver works in coefficient space (A = Psi Phi, generator emitting basis
coefficients of [0,1]-range images); the comparison solvers work directly
in image space (A = Psi, generator emitting images). Both see the same
measurements of the same image, and metrics are computed on the image.

Seeds for the measurement matrix, the noise and the solver derive from the
experiment seed, the sweep value and the image index, so per-image results
do not depend on sweep order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import BaselineConfig, bora_solve, latorre_solve
from .errors import DivergenceError, InvalidInputError, NumericalFailureError
from .generator import GeneratorNetwork, load_weights, wrap
from .images import ImageFormatError, load_image
from .metrics import confidence_interval_99, mse, psnr, ssim
from .operators import (
    add_noise_snr,
    dct_basis,
    gaussian_measurement,
    measurement_setup,
    radon_operator,
)
from .solver import SolverConfig, solve

RESULTS_CSV_HEADER = "sweep_value,image,ssim,psnr,mse,iters,converged,runtime_s"

PROBLEMS = ("cs", "ct")
SOLVERS = ("acggan", "bora", "latorre")


@dataclass(frozen=True)
class ExperimentSpec:
    problem: str = "cs"
    image_side: int = 32
    sweep: tuple = (0.5,)
    snr_db: float = math.inf
    solver: str = "acggan"
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    baseline_config: BaselineConfig = field(default_factory=BaselineConfig)
    generator: GeneratorNetwork | None = None
    weights: str | None = None
    dataset: str | None = None
    images: tuple | None = None
    image_count: int = 1
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise InvalidInputError(f"problem must be one of {PROBLEMS}")
        if self.solver not in SOLVERS:
            raise InvalidInputError(f"solver must be one of {SOLVERS}")
        if self.image_count < 1:
            raise InvalidInputError("image_count must be >= 1")
        for v in self.sweep:
            if self.problem == "cs" and not 0.0 < float(v) <= 1.0:
                raise InvalidInputError(f"CS ratio {v} outside (0, 1]")
            if self.problem == "ct" and int(v) < 1:
                raise InvalidInputError(f"angle count {v} must be >= 1")


@dataclass(frozen=True)
class ImageResult:
    sweep_value: float
    image: int
    ssim: float
    psnr: float
    mse: float
    iters: int
    converged: bool
    runtime_s: float
    error: str | None = None


@dataclass(frozen=True)
class MetricsRecord:
    sweep_value: float
    count: int
    ssim_mean: float
    ssim_half_width: float
    psnr_mean: float
    psnr_half_width: float
    mse_mean: float
    mse_half_width: float
    runtime_s: float


def _derived_seed(seed: int, sweep_value, image_index: int, salt: int) -> int:
    key = int(round(float(sweep_value) * 1_000_000))
    return abs(seed * 1_000_003 + key * 97 + image_index * 13 + salt)


def _load_dataset(spec: ExperimentSpec):
    if spec.images is not None:
        imgs = [np.asarray(im, dtype=np.float64) for im in spec.images]
    elif spec.dataset is not None:
        paths = sorted(Path(spec.dataset).glob("*.pgm"))
        if not paths:
            raise InvalidInputError(f"no PGM images found under {spec.dataset}")
        imgs = [load_image(p) for p in paths[: spec.image_count]]
    else:
        raise InvalidInputError("experiment needs either images or a dataset path")
    imgs = imgs[: spec.image_count]
    side = spec.image_side
    for im in imgs:
        if im.shape != (side, side):
            raise InvalidInputError(
                f"image shape {im.shape} != {(side, side)} from spec"
            )
    return imgs


def _resolve_generator(spec: ExperimentSpec) -> GeneratorNetwork:
    if spec.generator is not None:
        base = spec.generator
    elif spec.weights is not None:
        base = load_weights(spec.weights)
    else:
        raise InvalidInputError("experiment needs a generator or a weights file")
    n = spec.image_side**2
    if base.output_dim != n:
        raise InvalidInputError(
            f"generator output dim {base.output_dim} != side^2 = {n}"
        )
    return base


def _build_forward(spec: ExperimentSpec, sweep_value):
    n = spec.image_side**2
    if spec.problem == "cs":
        m = max(1, int(round(float(sweep_value) * n)))
        psi = gaussian_measurement(m, n, _derived_seed(spec.seed, sweep_value, 0, 1))
        phi = dct_basis(spec.image_side)
    else:
        psi = radon_operator(spec.image_side, int(sweep_value))
        phi = None
    return psi, phi


def _solve_one(spec, gen_solver, setup, phi, y, run_seed):
    """Run the configured solver and return (image_estimate, iters, converged)."""
    if spec.solver == "acggan":
        cfg = replace(spec.solver_config, seed=run_seed)
        sol = solve(y, setup, gen_solver, cfg)
        s_hat = sol.c_estimate if phi is None else phi @ sol.c_estimate
        return s_hat, sol.iterations_used, sol.converged
    cfg = replace(spec.baseline_config, seed=run_seed)
    if spec.solver == "bora":
        sol = bora_solve(y, setup, gen_solver, cfg)
    else:
        sol = latorre_solve(y, setup, gen_solver, cfg)
    return sol.c, sol.iterations_used, sol.converged


def run_experiment(spec: ExperimentSpec):
    """Execute the sweep; returns (per-image rows, per-sweep aggregates).

    Per-image solver failures are recorded (NaN metrics) without aborting
    the sweep. Writes the results CSV when the spec carries an out path.
    """
    base = _resolve_generator(spec)
    images = _load_dataset(spec)
    rows: list[ImageResult] = []
    aggregates: list[MetricsRecord] = []

    for sweep_value in spec.sweep:
        psi, phi = _build_forward(spec, sweep_value)
        if spec.solver == "acggan":
            setup = measurement_setup(psi, phi)
            gen_solver = wrap(base, range_shift=True, basis=phi)
        else:
            setup = measurement_setup(psi)
            gen_solver = wrap(base, range_shift=True)
        point_rows = []
        t_point = time.perf_counter()
        for idx, img in enumerate(images):
            s = img.ravel()
            y = add_noise_snr(
                psi @ s, spec.snr_db, _derived_seed(spec.seed, sweep_value, idx, 2)
            )
            t0 = time.perf_counter()
            try:
                s_hat, iters, converged = _solve_one(
                    spec, gen_solver, setup, phi, y,
                    _derived_seed(spec.seed, sweep_value, idx, 3),
                )
                rec = np.clip(s_hat, 0.0, 1.0).reshape(img.shape)
                row = ImageResult(
                    sweep_value=float(sweep_value),
                    image=idx,
                    ssim=ssim(img, rec),
                    psnr=psnr(img, rec),
                    mse=mse(img, rec),
                    iters=iters,
                    converged=converged,
                    runtime_s=time.perf_counter() - t0,
                )
            except (DivergenceError, NumericalFailureError, ImageFormatError) as exc:
                row = ImageResult(
                    sweep_value=float(sweep_value),
                    image=idx,
                    ssim=math.nan,
                    psnr=math.nan,
                    mse=math.nan,
                    iters=0,
                    converged=False,
                    runtime_s=time.perf_counter() - t0,
                    error=str(exc),
                )
            point_rows.append(row)
        rows.extend(point_rows)
        aggregates.append(
            _aggregate(sweep_value, point_rows, time.perf_counter() - t_point)
        )

    if spec.out is not None:
        write_results_csv(rows, spec.out)
    return rows, aggregates


def _aggregate(sweep_value, point_rows, runtime) -> MetricsRecord:
    ok = [r for r in point_rows if r.error is None]

    def stat(name):
        vals = [getattr(r, name) for r in ok]
        if len(vals) == 0:
            return math.nan, math.nan
        if len(vals) == 1:
            return vals[0], 0.0
        return confidence_interval_99(vals)

    s_m, s_h = stat("ssim")
    p_m, p_h = stat("psnr")
    e_m, e_h = stat("mse")
    return MetricsRecord(
        sweep_value=float(sweep_value),
        count=len(ok),
        ssim_mean=s_m,
        ssim_half_width=s_h,
        psnr_mean=p_m,
        psnr_half_width=p_h,
        mse_mean=e_m,
        mse_half_width=e_h,
        runtime_s=runtime,
    )


def write_results_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(RESULTS_CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.sweep_value:.6g},{r.image},{r.ssim:.10g},{r.psnr:.10g},"
                f"{r.mse:.10g},{r.iters},{str(r.converged).lower()},"
                f"{r.runtime_s:.6g}\n"
            )


def synthetic_range_images(base: GeneratorNetwork, count: int, side: int,
                           seed: int = 0):
    """Images sampled from the generator's own range, clipped to [0, 1]."""
    if base.output_dim != side * side:
        raise InvalidInputError("generator output dim must equal side^2")
    gen = wrap(base, range_shift=True)
    rng = np.random.default_rng(seed)
    return [
        np.clip(gen.forward(rng.standard_normal(base.input_dim)), 0.0, 1.0)
        .reshape(side, side)
        for _ in range(count)
    ]


def synthetic_blob_images(count: int, side: int, seed: int = 0):
    """Smooth Gaussian-bump test images in [0, 1], max-normalized.

    Generic content deliberately outside any particular generator's range,
    so sweeps can separate prior-dominated from data-dominated regimes.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:side, 0:side] / (side - 1)
    images = []
    for _ in range(count):
        img = np.zeros((side, side))
        for _bump in range(int(rng.integers(2, 5))):
            cx, cy = rng.uniform(0.2, 0.8, 2)
            width = rng.uniform(0.05, 0.25)
            amp = rng.uniform(0.4, 1.0)
            img += amp * np.exp(
                -(((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * width**2))
            )
        img /= max(img.max(), 1e-9)
        images.append(img)
    return images


# ---------------------------------------------------------------------------
# key = value config files mirroring the CLI flags

def parse_config_file(path) -> dict:
    """Parse a line-oriented UTF-8 ``key = value`` file; '#' starts a comment."""
    mapping = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(
                    f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}"
                )
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
    return mapping


def _parse_snr(text: str) -> float:
    return math.inf if text.lower() in ("inf", "infinite", "infinity") else float(text)


def spec_from_mapping(mapping: dict, **overrides) -> ExperimentSpec:
    """Build an ExperimentSpec from config-file keys (flag spellings)."""
    opts = dict(mapping)
    opts.update({k: v for k, v in overrides.items() if v is not None})

    problem = str(opts.get("problem", "cs"))
    if "sweep" in opts:
        raw = [s for s in str(opts["sweep"]).replace(",", " ").split() if s]
        sweep = tuple(float(s) if problem == "cs" else int(s) for s in raw)
    elif "ratio" in opts:
        sweep = (float(opts["ratio"]),)
    elif "angles" in opts:
        sweep = (int(opts["angles"]),)
    else:
        raise InvalidInputError("config needs one of: sweep, ratio, angles")

    solver_kwargs = {}
    for key, attr, conv in (
        ("mu", "mu", float),
        ("lambda", "lam", float),
        ("rho", "rho", float),
        ("sigma0", "sigma0", float),
        ("K", "K", int),
        ("J", "J", int),
        ("Jx", "Jx", int),
        ("tau", "tau", float),
    ):
        if key in opts:
            solver_kwargs[attr] = conv(opts[key])
    baseline_kwargs = {}
    for key, conv in (("steps", int), ("restarts", int), ("latent_sigma", float),
                      ("rho", float), ("sigma0", float)):
        if key in opts:
            baseline_kwargs[key] = conv(opts[key])

    return ExperimentSpec(
        problem=problem,
        image_side=int(opts.get("side", 32)),
        sweep=sweep,
        snr_db=_parse_snr(str(opts.get("snr", "inf"))),
        solver=str(opts.get("solver", "acggan")),
        solver_config=SolverConfig(**solver_kwargs),
        baseline_config=BaselineConfig(**baseline_kwargs),
        generator=overrides.get("generator"),
        weights=opts.get("weights"),
        dataset=opts.get("dataset"),
        image_count=int(opts.get("image_count", 1)),
        seed=int(opts.get("seed", 0)),
        out=opts.get("out"),
    )
