"""Acceptance suite: one test per release criterion, at stated tolerances.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS line per
criterion. Budgets and tolerances are pinned here, not configurable.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from cggan.baselines import BaselineConfig, bora_solve
from cggan.experiments import (
    ExperimentSpec,
    run_experiment,
    synthetic_blob_images,
)
from cggan.generator import (
    estimate_assumption_constants,
    random_generator,
    wrap,
)
from cggan.linalg import ridge_solve, soft_threshold, svd
from cggan.metrics import ssim
from cggan.operators import (
    add_noise_snr,
    dct_basis,
    gaussian_measurement,
    measurement_setup,
    radon_operator,
)
from cggan.solver import (
    SolverConfig,
    SolverState,
    augmented_lagrangian,
    initialize,
    solve,
    update_c,
    update_u,
    update_z_fista,
)
from cggan.solver import _x_smooth_gradient
from cggan.theory import (
    check_delta_relation,
    check_ista_descent_lemma,
    check_lipschitz_bounds,
    check_prox_lemma,
    compute_theory_constants,
    check_iteration_inequality,
    fit_convergence_rate,
    make_planted_problem,
    series_partial_sum,
)


def _report(name, detail=""):
    print(f"ACCEPTANCE {name}: PASS {detail}".rstrip())


def _random_instance(rng, n, d):
    gen = wrap(
        random_generator(d, (2 * d,), n, seed=int(rng.integers(0, 2**31))),
        range_shift=False,
    )
    m = int(rng.integers(max(1, n // 2), n + 1))
    setup = measurement_setup(
        gaussian_measurement(m, n, seed=int(rng.integers(0, 2**31)))
    )
    y = rng.standard_normal(m)
    state = SolverState(
        x=rng.standard_normal(d),
        z=rng.standard_normal(n),
        u=rng.standard_normal(n),
        c=rng.standard_normal(n),
        phi1=rng.standard_normal(n),
        phi2=rng.standard_normal(n),
    )
    return state, y, setup, gen


def test_closed_form_oracles():
    """update_c, update_u and the u warm start match numerical minimizers."""
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    for i in range(50):
        n = int(rng.integers(8, 65))
        d = int(rng.integers(2, 9))
        state, y, setup, gen = _random_instance(rng, n, d)
        if i % 2 == 0:
            sigma_u = rng.uniform(0.5, 2.0, n)
            sigma_mat = np.diag(sigma_u)
        else:
            B = rng.standard_normal((n, n))
            sigma_mat = B @ B.T + n * np.eye(n)
            sigma_u = sigma_mat
        mu_u = rng.standard_normal(n)
        config = SolverConfig(
            mu=10 ** rng.uniform(-6, -1),
            lam=10 ** rng.uniform(-3, 1),
            rho=10 ** rng.uniform(-2, 1),
            mu_u=mu_u,
            sigma_u=sigma_u,
            seed=i,
        )

        c = update_c(state, y, setup, config)
        grad_c = (
            setup.A.T @ (setup.A @ c - y)
            + state.phi2
            + config.rho * (c - state.z * state.u)
        )
        assert np.linalg.norm(grad_c) <= 1e-8 * (1 + np.linalg.norm(c))
        dense_c = np.linalg.solve(
            setup.A.T @ setup.A + config.rho * np.eye(n),
            setup.A.T @ y + config.rho * state.z * state.u - state.phi2,
        )
        assert np.linalg.norm(c - dense_c) <= 1e-8 * (1 + np.linalg.norm(dense_c))

        u = update_u(state, y, setup, config)
        grad_u = (
            config.lam * sigma_mat @ (u - mu_u)
            - state.z * state.phi2
            + config.rho * state.z * (state.z * u - state.c)
        )
        assert np.linalg.norm(grad_u) <= 1e-8 * (1 + np.linalg.norm(u))

        init = initialize(y, setup, gen, config)
        Az = setup.A * init.z[np.newaxis, :]
        grad_u0 = Az.T @ (Az @ init.u - y) + config.lam * sigma_mat @ (
            init.u - mu_u
        )
        assert np.linalg.norm(grad_u0) <= 1e-8 * (1 + np.linalg.norm(init.u))
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("closed-form-oracles", f"(50 instances, {elapsed:.1f}s)")


def test_svd_ridge_path():
    """ridge_solve equals the direct dense solve to 1e-10 relative."""
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(4, 40))
        m = int(rng.integers(2, 40))
        rho = 10 ** rng.uniform(-4, 4)
        M = rng.standard_normal((m, n))
        b = rng.standard_normal(n)
        x = ridge_solve(svd(M), rho, b)
        dense = np.linalg.solve(M.T @ M + rho * np.eye(n), b)
        assert np.linalg.norm(x - dense) <= 1e-10 * (1 + np.linalg.norm(dense))
    _report("svd-ridge-path", "(50 instances)")


def test_gradient_correctness():
    """VJP and latent-block gradient match central finite differences."""
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(8, 65))
        d = int(rng.integers(2, 17))
        state, y, setup, gen = _random_instance(rng, n, d)
        config = SolverConfig(rho=10 ** rng.uniform(-1, 1))
        x = state.x

        w = rng.standard_normal(n)
        g = gen.vjp(x, w)
        h = 1e-6
        fd = np.zeros(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fd[i] = (gen.forward(x + e) @ w - gen.forward(x - e) @ w) / (2 * h)
        assert np.linalg.norm(g - fd) <= 1e-5 * (1 + np.linalg.norm(fd))

        gl = _x_smooth_gradient(x, state, gen, config)
        fdl = np.zeros(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = h
            fdl[i] = (
                augmented_lagrangian(replace(state, x=x + e), y, setup, config,
                                     gen)
                - augmented_lagrangian(replace(state, x=x - e), y, setup,
                                       config, gen)
            ) / (2 * h)
        assert np.linalg.norm(gl - fdl) <= 1e-5 * (1 + np.linalg.norm(fdl))
    _report("gradient-correctness", "(20 instances)")


def test_monotone_fista_contract():
    """The J-step z block never loses to a single ISTA step."""
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = int(rng.integers(8, 65))
        d = int(rng.integers(2, 9))
        state, y, setup, gen = _random_instance(rng, n, d)
        config = SolverConfig(
            mu=10 ** rng.uniform(-6, 0),
            rho=10 ** rng.uniform(-2, 1),
            J=int(rng.integers(1, 25)),
        )
        gx = gen.forward(state.x)

        def objective(z):
            xi1 = z - gx
            xi2 = state.c - z * state.u
            return (
                config.mu * np.abs(z).sum()
                + state.phi1 @ xi1
                + state.phi2 @ xi2
                + 0.5 * config.rho * (xi1 @ xi1 + xi2 @ xi2)
            )

        step = 1.0 / (config.rho * (1.0 + np.max(np.abs(state.u)) ** 2))
        grad = (
            state.phi1
            + config.rho * (state.z - gx)
            - state.u * state.phi2
            + config.rho * state.u * (state.z * state.u - state.c)
        )
        ista = soft_threshold(state.z - step * grad, config.mu * step)
        out = update_z_fista(state, y, setup, gen, config)
        assert objective(out) <= objective(ista) + 1e-12
    _report("monotone-fista-contract", "(50 instances)")


def test_dual_boundedness():
    """Adaptive dual steps keep every dual iterate inside 4*sigma0."""
    t0 = time.perf_counter()
    for seed in range(10):
        problem = make_planted_problem(
            seed=100 + seed, n=24, d=4, hidden=(10,), K=1000,
        )
        sol = solve(problem.y, problem.setup, problem.gen, problem.config)
        bound = 4.0 * problem.config.sigma0
        worst = max(
            max(np.linalg.norm(s.phi1), np.linalg.norm(s.phi2))
            for s in sol.trace.states
        )
        assert worst <= bound
    partial = series_partial_sum(10**6)
    assert partial <= 4.0
    _report(
        "dual-boundedness",
        f"(10 runs x 1000 iters, series sum {partial:.3f} <= 4, "
        f"{time.perf_counter() - t0:.1f}s)",
    )


def test_lemma_suite():
    """Sampled lemma checks at their stated tolerances, 200 samples each."""
    problem = make_planted_problem(seed=42, K=200)
    sol = solve(problem.y, problem.setup, problem.gen, problem.config)
    results = [
        check_lipschitz_bounds(problem.setup, problem.config, samples=200,
                               seed=7),
        check_delta_relation(sol.trace, problem.v_star),
        check_prox_lemma(samples=200, seed=8),
        check_ista_descent_lemma(samples=200, seed=9),
    ]
    for res in results:
        assert res.passed, f"{res.name} failed with margin {res.worst_margin}"
    _report(
        "lemma-suite",
        "(" + ", ".join(f"{r.name} margin {r.worst_margin:.2e}" for r in results)
        + ")",
    )


def test_iteration_inequality_and_rate():
    """Per-iteration Lagrangian bound plus a negative pre-plateau slope."""
    problem = make_planted_problem(seed=11, K=200)
    sol = solve(problem.y, problem.setup, problem.gen, problem.config)
    assert sol.iterations_used == 200
    est = estimate_assumption_constants(
        problem.gen, pair_count=200, radius=problem.config.radius_x, seed=12
    )
    consts = compute_theory_constants(
        problem.setup, problem.config, est, sol.trace
    )
    check = check_iteration_inequality(sol.trace, problem.v_star, consts)
    assert check.passed, f"worst margin {check.worst_margin}"
    rate = fit_convergence_rate(sol.trace, problem.v_star, consts.alpha)
    assert not rate.in_neighborhood
    assert rate.slope < 0
    _report(
        "iteration-inequality-and-rate",
        f"(200 iterations, margin {check.worst_margin:.2e}, "
        f"slope {rate.slope:.4f})",
    )


def test_planted_recovery():
    """Identity sensing, noiseless, in-range target: full recovery fast."""
    t0 = time.perf_counter()
    problem = make_planted_problem(
        n=1024, d=16, hidden=(64,), seed=13, identity_sensing=True,
        dual_step_mode="constant", K=1000, tau=1e-6, lam=1e-3,
        radius_x=math.inf, radius_z=math.inf, radius_u=math.inf,
        radius_c=math.inf, keep_iterates=False,
    )
    sol = solve(problem.y, problem.setup, problem.gen, problem.config)
    elapsed = time.perf_counter() - t0
    assert sol.converged
    assert sol.trace.records[-1].stop_stat < 1e-6
    rel = np.linalg.norm(sol.state.c - problem.c_star) / np.linalg.norm(
        problem.c_star
    )
    assert rel <= 1e-2
    assert elapsed < 60.0
    _report(
        "planted-recovery",
        f"(n=1024, rel err {rel:.2e}, {sol.iterations_used} iters, "
        f"{elapsed:.1f}s)",
    )


def test_desk_scale_sweep_trend():
    """More measurements help, and the compound prior avoids saturation."""
    side = 32
    base = random_generator(16, (64,), side * side, activation="tanh", seed=14)
    images = tuple(synthetic_blob_images(10, side, seed=15))
    acggan_cfg = SolverConfig(mu=1e-6, lam=1e-6, rho=1e-4, K=300, tau=1e-9)
    spec = ExperimentSpec(
        problem="cs", image_side=side, sweep=(0.3, 0.6, 0.9), snr_db=60.0,
        solver="acggan", solver_config=acggan_cfg, generator=base,
        images=images, image_count=10, seed=16,
    )
    _, aggs = run_experiment(spec)
    by_ratio = {a.sweep_value: a for a in aggs}
    for lo, hi in ((0.3, 0.6), (0.6, 0.9), (0.3, 0.9)):
        hw_mse = max(by_ratio[lo].mse_half_width, by_ratio[hi].mse_half_width)
        assert by_ratio[hi].mse_mean <= by_ratio[lo].mse_mean + hw_mse

    bora_spec = ExperimentSpec(
        problem="cs", image_side=side, sweep=(0.9,), snr_db=60.0,
        solver="bora",
        baseline_config=BaselineConfig(steps=800, restarts=3,
                                       latent_sigma=10.0),
        generator=base, images=images, image_count=10, seed=16,
    )
    _, bora_aggs = run_experiment(bora_spec)
    hw_ssim = max(by_ratio[0.9].ssim_half_width, bora_aggs[0].ssim_half_width)
    assert by_ratio[0.9].ssim_mean >= bora_aggs[0].ssim_mean - hw_ssim
    _report(
        "desk-scale-sweep-trend",
        f"(mse {by_ratio[0.3].mse_mean:.2e} -> {by_ratio[0.9].mse_mean:.2e}; "
        f"ssim acggan {by_ratio[0.9].ssim_mean:.3f} vs bora "
        f"{bora_aggs[0].ssim_mean:.3f})",
    )


def test_operator_suite():
    """Adjoint tests, Radon symmetry, exact SNR, SSIM identities."""
    rng = np.random.default_rng(17)
    for A in (
        gaussian_measurement(20, 48, seed=18),
        radon_operator(8, 4),
        dct_basis(6),
    ):
        setup = measurement_setup(A)
        for _ in range(20):
            x = rng.standard_normal(setup.n)
            yv = rng.standard_normal(setup.m)
            lhs = float(setup.apply(x) @ yv)
            rhs = float(x @ setup.apply_adjoint(yv))
            assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), abs(rhs), 1.0)

    side = 16
    R = radon_operator(side, 2)
    yy, xx = np.mgrid[0:side, 0:side]
    c = (side - 1) / 2.0
    disk = (((xx - c) ** 2 + (yy - c) ** 2) <= (side / 3.0) ** 2).astype(float)
    sino = (R @ disk.ravel()).reshape(2, side)
    assert np.linalg.norm(sino[0] - sino[1]) <= 1e-6 * np.linalg.norm(sino[0])

    y_clean = rng.standard_normal(300)
    noisy = add_noise_snr(y_clean, 60.0, seed=19)
    nu = noisy - y_clean
    realized = 10 * np.log10(np.dot(y_clean, y_clean) / np.dot(nu, nu))
    assert abs(realized - 60.0) <= 1e-9

    img_a = rng.uniform(0, 1, (24, 24))
    img_b = rng.uniform(0, 1, (24, 24))
    assert ssim(img_a, img_a) == pytest.approx(1.0, abs=1e-12)
    assert abs(ssim(img_a, img_b) - ssim(img_b, img_a)) <= 1e-12
    _report("operator-suite")
