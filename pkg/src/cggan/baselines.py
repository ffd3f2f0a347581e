"""Reference generative-prior solvers used for comparisons.

``bora_solve`` minimizes over the latent space directly; ``latorre_solve``
runs ADMM with the single range constraint c = G(x). Both reuse the
generator runtime's VJPs and the ridge solve on the cached operator SVD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .linalg import as_vector, ridge_solve
from .solver import RunTrace, TraceRecord


@dataclass(frozen=True)
class BaselineConfig:
    steps: int = 2000
    restarts: int = 5
    latent_sigma: float = 1.0
    rho: float = 1.0
    sigma0: float = 1.0
    seed: int = 0
    # Artifact defaults: inner latent steps and stopping tolerance for the
    # ADMM baseline; the source methods leave these unspecified.
    jx: int = 10
    tau: float = 1e-6
    adam_step: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.steps < 1 or self.restarts < 1:
            raise InvalidInputError("steps and restarts must be >= 1")
        if self.latent_sigma <= 0:
            raise InvalidInputError("latent_sigma must be positive")


@dataclass(frozen=True)
class BaselineSolution:
    x: np.ndarray
    c: np.ndarray
    objective: float
    iterations_used: int
    converged: bool
    trace: RunTrace


def _adam_run(x0, grad_fn, obj_fn, steps, config, track_best=False):
    """Adam loop; with ``track_best`` the lowest-objective iterate wins.

    The plain variant returns the final iterate (latent MAP convention);
    the tracked variant never returns anything worse than its start, which
    keeps the ADMM baseline from jittering at the step-size floor.
    """
    x = x0.copy()
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x, best_f = x0, obj_fn(x0)
    for t in range(1, steps + 1):
        g = grad_fn(x)
        m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g
        v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g * g
        m_hat = m / (1.0 - config.adam_beta1**t)
        v_hat = v / (1.0 - config.adam_beta2**t)
        x = x - config.adam_step * m_hat / (np.sqrt(v_hat) + config.adam_eps)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"latent optimization diverged at step {t}")
        if track_best:
            f = obj_fn(x)
            if f < best_f:
                best_f, best_x = f, x
    if track_best:
        return best_x, best_f
    f = obj_fn(x)
    if not math.isfinite(f):
        raise DivergenceError("latent objective diverged")
    return x, f


def bora_solve(y, setup, gen, config: BaselineConfig) -> BaselineSolution:
    """Best-of-restarts Adam on 1/2||y - A G(x)||^2 + ||x||^2/(2 sigma^2).

    Restarts draw independent seeded latents; the winner is the restart
    with the lowest final objective.
    """
    y = as_vector(y)
    inv_sig2 = 1.0 / config.latent_sigma**2

    def objective(x):
        r = y - setup.apply(gen.forward(x))
        return 0.5 * float(np.dot(r, r)) + 0.5 * inv_sig2 * float(np.dot(x, x))

    def gradient(x):
        r = y - setup.apply(gen.forward(x))
        return -gen.vjp(x, setup.apply_adjoint(r)) + inv_sig2 * x

    best = None
    trace = RunTrace()
    for r_idx in range(config.restarts):
        rng = np.random.default_rng(config.seed + r_idx)
        x0 = rng.standard_normal(gen.input_dim)
        x, f = _adam_run(x0, gradient, objective, config.steps, config)
        if best is None or f < best[1]:
            best = (x, f)
    x_star, f_star = best
    trace.append(TraceRecord(k=config.steps, F=f_star))
    return BaselineSolution(
        x=x_star,
        c=gen.forward(x_star),
        objective=f_star,
        iterations_used=config.steps,
        converged=False,
        trace=trace,
    )


def latorre_solve(y, setup, gen, config: BaselineConfig) -> BaselineSolution:
    """ADMM with the single constraint c = G(x).

    Per outer step: Adam on the augmented Lagrangian in x, closed-form c
    via the ridge solve, then dual ascent phi <- phi + sigma0 (c - G(x)).
    Stops when the mean-squared change in (x, c) plus the feasibility gap
    drops below tau.
    """
    y = as_vector(y)
    rng = np.random.default_rng(config.seed)
    x = rng.standard_normal(gen.input_dim)
    c = gen.forward(x)
    n = c.shape[0]
    d = x.shape[0]
    phi = np.zeros(n)
    aty = setup.apply_adjoint(y)
    trace = RunTrace()
    converged = False
    iterations = 0

    for k in range(1, config.steps + 1):
        x_prev, c_prev = x, c

        def gradient(xv):
            gap = c - gen.forward(xv)
            return -gen.vjp(xv, phi + config.rho * gap)

        def objective(xv):
            gap = c - gen.forward(xv)
            return float(np.dot(phi, gap)) + 0.5 * config.rho * float(np.dot(gap, gap))

        x, _ = _adam_run(x, gradient, objective, config.jx, config,
                         track_best=True)
        gx = gen.forward(x)
        c = ridge_solve(setup.svd, config.rho, aty + config.rho * gx - phi)
        xi = c - gx
        phi = phi + config.sigma0 * xi
        resid = y - setup.apply(c)
        fval = 0.5 * float(np.dot(resid, resid))
        lag = fval + float(np.dot(phi, xi)) + 0.5 * config.rho * float(np.dot(xi, xi))
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(phi))):
            raise DivergenceError("ADMM baseline diverged", trace=trace)
        stat = (
            float(np.dot(x - x_prev, x - x_prev)) / d
            + (float(np.dot(c - c_prev, c - c_prev)) + float(np.dot(xi, xi))) / n
        )
        trace.append(
            TraceRecord(
                k=k,
                L_rho=lag,
                F=fval,
                xi1_norm=float(np.linalg.norm(xi)),
                delta_x=float(np.linalg.norm(x - x_prev)),
                delta_c=float(np.linalg.norm(c - c_prev)),
                sigma_k=config.sigma0,
                stop_stat=stat,
            )
        )
        iterations = k
        if stat < config.tau:
            converged = True
            break

    resid = y - setup.apply(c)
    objective_value = 0.5 * float(np.dot(resid, resid))
    return BaselineSolution(
        x=x,
        c=c,
        objective=objective_value,
        iterations_used=iterations,
        converged=converged,
        trace=trace,
    )
