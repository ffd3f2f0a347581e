"""Command-line front end: solve, sweep, verify-theory, check-generator."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .baselines import BaselineConfig, bora_solve, latorre_solve
from .experiments import (
    ExperimentSpec,
    parse_config_file,
    run_experiment,
    spec_from_mapping,
)
from .generator import estimate_assumption_constants, load_weights, wrap
from .images import load_image, save_image
from .metrics import mse, psnr, ssim
from .operators import (
    add_noise_snr,
    dct_basis,
    gaussian_measurement,
    measurement_setup,
    radon_operator,
)
from .solver import SolverConfig, solve
from .theory import report_lines, report_to_csv, run_theory_suite


def _snr_type(text):
    return math.inf if text.lower() in ("inf", "infinite", "infinity") else float(text)


def _add_problem_flags(p):
    p.add_argument("--problem", choices=("cs", "ct"), default="cs")
    p.add_argument("--ratio", type=float, help="CS sampling ratio m/n")
    p.add_argument("--angles", type=int, help="Radon projection angle count")
    p.add_argument("--snr", type=_snr_type, default=math.inf,
                   help="measurement SNR in dB, or 'inf'")
    p.add_argument("--solver", choices=("acggan", "bora", "latorre"),
                   default="acggan")
    p.add_argument("--weights", help="generator weight file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", type=float, default=1e-3)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--sigma0", type=float, default=1.0)
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--J", type=int, default=10)
    p.add_argument("--Jx", type=int, default=10)
    p.add_argument("--tau", type=float, default=1e-6)
    p.add_argument("--steps", type=int, default=2000,
                   help="iteration budget for the comparison solvers")
    p.add_argument("--restarts", type=int, default=5)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cggan",
        description="compound-Gaussian/generative-prior solvers for linear "
        "inverse problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="reconstruct a single image")
    _add_problem_flags(p_solve)
    p_solve.add_argument("--image", required=True, help="input PGM image")
    p_solve.add_argument("--out", help="output PGM for the reconstruction")
    p_solve.add_argument("--trace", help="per-iteration trace CSV")

    p_sweep = sub.add_parser("sweep", help="run a sweep over ratios or angles")
    _add_problem_flags(p_sweep)
    p_sweep.add_argument("--spec", help="key = value config file")
    p_sweep.add_argument("--sweep", help="comma-separated sweep values")
    p_sweep.add_argument("--dataset", help="directory of PGM images")
    p_sweep.add_argument("--image-count", type=int)
    p_sweep.add_argument("--side", type=int)
    p_sweep.add_argument("--out", help="results CSV path")

    p_verify = sub.add_parser("verify-theory",
                              help="run the convergence-theory checks")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--iterations", type=int, default=200)
    p_verify.add_argument("--out", help="report CSV path")

    p_check = sub.add_parser("check-generator",
                             help="estimate near-isometry constants")
    p_check.add_argument("--weights", required=True)
    p_check.add_argument("--pairs", type=int, default=200)
    p_check.add_argument("--radius", type=float, default=3.0)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--range-shift", action="store_true",
                         help="wrap the network with the (g+1)/2 range shift")
    return parser


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        mu=args.mu, lam=args.lam, rho=args.rho, sigma0=args.sigma0,
        K=args.K, J=args.J, Jx=args.Jx, tau=args.tau, seed=args.seed,
    )


def _baseline_config(args) -> BaselineConfig:
    return BaselineConfig(
        steps=args.steps, restarts=args.restarts, rho=args.rho,
        sigma0=args.sigma0, seed=args.seed,
    )


def cmd_solve(args) -> int:
    img = load_image(args.image)
    side = img.shape[0]
    if img.shape[0] != img.shape[1]:
        print(f"error: need a square image, got {img.shape}", file=sys.stderr)
        return 2
    if args.weights is None:
        print("error: solve requires --weights", file=sys.stderr)
        return 2
    base = load_weights(args.weights)
    n = side * side
    if base.output_dim != n:
        print(f"error: generator emits {base.output_dim} values, image needs {n}",
              file=sys.stderr)
        return 2

    if args.problem == "cs":
        if args.ratio is None:
            print("error: --problem cs requires --ratio", file=sys.stderr)
            return 2
        m = max(1, int(round(args.ratio * n)))
        psi = gaussian_measurement(m, n, args.seed + 1)
        phi = dct_basis(side)
    else:
        if args.angles is None:
            print("error: --problem ct requires --angles", file=sys.stderr)
            return 2
        psi = radon_operator(side, args.angles)
        phi = None

    y = add_noise_snr(psi @ img.ravel(), args.snr, args.seed + 2)
    if args.solver == "acggan":
        setup = measurement_setup(psi, phi)
        gen = wrap(base, range_shift=True, basis=phi)
        sol = solve(y, setup, gen, _solver_config(args))
        c_hat = sol.c_estimate
        s_hat = c_hat if phi is None else phi @ c_hat
        iters, converged, trace = sol.iterations_used, sol.converged, sol.trace
    else:
        setup = measurement_setup(psi)
        gen = wrap(base, range_shift=True)
        fn = bora_solve if args.solver == "bora" else latorre_solve
        sol = fn(y, setup, gen, _baseline_config(args))
        s_hat = sol.c
        iters, converged, trace = sol.iterations_used, sol.converged, sol.trace

    rec = np.clip(s_hat, 0.0, 1.0).reshape(side, side)
    print(f"iterations={iters} converged={converged}")
    print(f"ssim={ssim(img, rec):.6f} psnr={psnr(img, rec):.3f} "
          f"mse={mse(img, rec):.3e}")
    if args.out:
        save_image(rec, args.out)
        print(f"wrote {args.out}")
    if args.trace:
        trace.to_csv(args.trace)
        print(f"wrote {args.trace}")
    return 0


def cmd_sweep(args) -> int:
    mapping = parse_config_file(args.spec) if args.spec else {}
    overrides = {
        "problem": args.problem,
        "solver": args.solver,
        "weights": args.weights,
        "dataset": args.dataset,
        "out": args.out,
        "sweep": args.sweep,
    }
    if args.ratio is not None:
        overrides["ratio"] = str(args.ratio)
    if args.angles is not None:
        overrides["angles"] = str(args.angles)
    if args.image_count is not None:
        overrides["image_count"] = str(args.image_count)
    if args.side is not None:
        overrides["side"] = str(args.side)
    spec = spec_from_mapping(mapping, **overrides)
    rows, aggregates = run_experiment(spec)
    for agg in aggregates:
        print(
            f"sweep={agg.sweep_value:g} n={agg.count} "
            f"ssim={agg.ssim_mean:.4f}±{agg.ssim_half_width:.4f} "
            f"psnr={agg.psnr_mean:.2f}±{agg.psnr_half_width:.2f} "
            f"mse={agg.mse_mean:.3e}±{agg.mse_half_width:.3e} "
            f"({agg.runtime_s:.1f}s)"
        )
    failures = [r for r in rows if r.error is not None]
    for r in failures:
        print(f"warning: sweep={r.sweep_value:g} image={r.image} failed: {r.error}",
              file=sys.stderr)
    if spec.out:
        print(f"wrote {spec.out}")
    return 0


def cmd_verify_theory(args) -> int:
    report = run_theory_suite(seed=args.seed, iterations=args.iterations)
    for line in report_lines(report):
        print(line)
    if args.out:
        report_to_csv(report, args.out)
        print(f"wrote {args.out}")
    slope_ok = report.rate.in_neighborhood or report.rate.slope < 0
    return 0 if (report.all_passed and slope_ok) else 1


def cmd_check_generator(args) -> int:
    base = load_weights(args.weights)
    gen = wrap(base, range_shift=args.range_shift)
    est = estimate_assumption_constants(gen, args.pairs, args.radius, args.seed)
    print(f"input_dim={base.input_dim} output_dim={base.output_dim}")
    print(f"nu_g={est.nu_g:.6e} tau_g={est.tau_g:.6e} l_g={est.l_g:.6e}")
    print(f"pairs={est.sample_count} radius={est.sampling_radius:g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "solve": cmd_solve,
        "sweep": cmd_sweep,
        "verify-theory": cmd_verify_theory,
        "check-generator": cmd_check_generator,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
