"""ADMM solver with the dual compound-Gaussian / generative-network prior.

Estimates c from y = A c + nu under the constraints z = G(x) and
c = z (*) u, where (*) is the Hadamard product, by block-coordinate descent
on the augmented Lagrangian

    L_rho = 1/2 ||y - A c||^2 + mu ||z||_1 + R_x(x)
            + lambda/2 (u - mu_u)^T Sigma_u (u - mu_u)
            + <phi, xi> + rho/2 ||xi||^2,

with feasibility gap xi = (z - G(x), c - z*u), followed by dual ascent.
The u and c blocks have closed-form minimizers (diagonal systems via the
cached SVD of A), the z block runs monotone FISTA, and the x block runs
Adam (or proximal gradient when the latent regularizer is an l1 term).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, InvalidInputError
from .generator import ScaleBasisGenerator
from .linalg import as_vector, project_ball, ridge_solve, soft_threshold
from .operators import MeasurementSetup

TRACE_CSV_HEADER = (
    "k,L_rho,F,xi1_norm,xi2_norm,delta_x,delta_z,delta_u,delta_c,sigma_k,stop_stat"
)


@dataclass(frozen=True)
class RxSpec:
    """Latent regularizer: none, quadratic weight/2*||x||^2, or weight*||x||_1."""

    kind: str = "zero"
    weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "quadratic", "l1"):
            raise InvalidInputError(f"unknown latent regularizer {self.kind!r}")
        if self.weight < 0:
            raise InvalidInputError("regularizer weight must be nonnegative")

    @property
    def smooth(self) -> bool:
        return self.kind != "l1"

    def value(self, x) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "quadratic":
            return 0.5 * self.weight * float(np.dot(x, x))
        return self.weight * float(np.sum(np.abs(x)))

    def grad(self, x) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "quadratic":
            return self.weight * x
        raise InvalidInputError("l1 latent regularizer has no gradient; use prox")

    def prox(self, v, alpha: float) -> np.ndarray:
        if self.kind == "l1":
            return soft_threshold(v, alpha * self.weight)
        if self.kind == "quadratic":
            return v / (1.0 + alpha * self.weight)
        return v


@dataclass(frozen=True)
class SolverConfig:
    """Scalars, prior parameters and iteration budgets for one solve."""

    mu: float = 1e-3
    lam: float = 0.1
    rho: float = 1.0
    sigma0: float = 1.0
    dual_step_mode: str = "constant"  # "constant" or "adaptive"
    K: int = 1000
    J: int = 10
    Jx: int = 10
    tau: float = 1e-6
    mu_u: float | np.ndarray = 0.0
    sigma_u: float | np.ndarray = 1.0  # scalar/1-D: diagonal; 2-D: dense SPD
    rx: RxSpec = field(default_factory=RxSpec)
    radius_x: float = math.inf
    radius_z: float = math.inf
    radius_u: float = math.inf
    radius_c: float = math.inf
    adam_step: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    nonneg_z: bool = False
    seed: int = 0
    keep_iterates: bool = False

    def __post_init__(self):
        for name in ("mu", "lam", "rho", "sigma0", "tau"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive")
        if self.dual_step_mode not in ("constant", "adaptive"):
            raise InvalidInputError(f"unknown dual step mode {self.dual_step_mode!r}")
        for name in ("radius_x", "radius_z", "radius_u", "radius_c"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"{name} must be positive (or infinite)")
        if min(self.K, self.J, self.Jx) < 0:
            raise InvalidInputError("iteration counts must be nonnegative")

    def mu_u_vector(self, n: int) -> np.ndarray:
        mu_u = np.asarray(self.mu_u, dtype=np.float64)
        if mu_u.ndim == 0:
            return np.full(n, float(mu_u))
        if mu_u.shape != (n,):
            raise InvalidInputError(f"mu_u must be scalar or length {n}")
        return mu_u

    def sigma_u_terms(self, n: int):
        """Return (diag_or_None, dense_or_None) for the SPD prior precision."""
        sig = np.asarray(self.sigma_u, dtype=np.float64)
        if sig.ndim == 0:
            if sig <= 0:
                raise InvalidInputError("sigma_u must be positive definite")
            return np.full(n, float(sig)), None
        if sig.ndim == 1:
            if sig.shape != (n,) or np.any(sig <= 0):
                raise InvalidInputError("diagonal sigma_u must be positive, length n")
            return sig, None
        if sig.shape != (n, n):
            raise InvalidInputError(f"sigma_u must be {n}x{n}")
        if not np.allclose(sig, sig.T, atol=1e-12):
            raise InvalidInputError("sigma_u must be symmetric")
        return None, sig


@dataclass(frozen=True)
class SolverState:
    """One primal/dual iterate: latent x, scale z, Gaussian u, signal c."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    c: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    k: int = 0

    @property
    def d(self) -> int:
        return self.x.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def finite(self) -> bool:
        return all(
            np.all(np.isfinite(v))
            for v in (self.x, self.z, self.u, self.c, self.phi1, self.phi2)
        )


@dataclass
class TraceRecord:
    k: int
    L_rho: float | None = None
    F: float | None = None
    xi1_norm: float | None = None
    xi2_norm: float | None = None
    delta_x: float | None = None
    delta_z: float | None = None
    delta_u: float | None = None
    delta_c: float | None = None
    sigma_k: float | None = None
    stop_stat: float | None = None


class RunTrace:
    """Per-iteration diagnostics, exportable as CSV.

    When ``keep_iterates`` is set, the full state (including duals) is
    retained for every iteration so convergence-theory quantities can be
    recomputed after the run.
    """

    def __init__(self, keep_iterates: bool = False):
        self.records: list[TraceRecord] = []
        self.states: list[SolverState] | None = [] if keep_iterates else None

    def append(self, record: TraceRecord, state: SolverState | None = None):
        self.records.append(record)
        if self.states is not None:
            if state is None:
                raise InvalidInputError("iterate-keeping trace needs the state")
            self.states.append(state)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(TRACE_CSV_HEADER + "\n")
            for r in self.records:
                cells = [str(r.k)]
                for name in TRACE_CSV_HEADER.split(",")[1:]:
                    v = getattr(r, name)
                    cells.append("" if v is None else format(v, ".17e"))
                fh.write(",".join(cells) + "\n")


@dataclass(frozen=True)
class CgGanSolution:
    """Final state plus the compound-Gaussian estimate c = z*u."""

    state: SolverState
    c_estimate: np.ndarray
    converged: bool
    iterations_used: int
    trace: RunTrace


def feasibility_gap(state: SolverState, gen) -> tuple[np.ndarray, np.ndarray]:
    """Constraint residuals (z - G(x), c - z*u)."""
    return state.z - gen.forward(state.x), state.c - state.z * state.u


def cost_F(state: SolverState, y, setup: MeasurementSetup, config: SolverConfig):
    """Data fidelity + sparsity + latent + Gaussian prior terms."""
    resid = y - setup.apply(state.c)
    total = 0.5 * float(np.dot(resid, resid))
    total += config.mu * float(np.sum(np.abs(state.z)))
    total += config.rx.value(state.x)
    du = state.u - config.mu_u_vector(state.n)
    diag, dense = config.sigma_u_terms(state.n)
    if dense is None:
        total += 0.5 * config.lam * float(np.dot(du, diag * du))
    else:
        total += 0.5 * config.lam * float(du @ dense @ du)
    return total


def augmented_lagrangian(state, y, setup, config, gen) -> float:
    xi1, xi2 = feasibility_gap(state, gen)
    val = cost_F(state, y, setup, config)
    val += float(np.dot(state.phi1, xi1)) + float(np.dot(state.phi2, xi2))
    val += 0.5 * config.rho * (float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2)))
    return val


def initialize(y, setup, gen, config) -> SolverState:
    """Seeded Gaussian latent, z = G(x), ridge-type warm start for u.

    u starts at the minimizer of the data+Gaussian-prior cost with z fixed:
    (A_z^T A_z + lambda Sigma_u)^{-1} (lambda Sigma_u mu_u + A_z^T y) for
    A_z = A Diag(z). Duals start at zero.
    """
    rng = np.random.default_rng(config.seed)
    x0 = rng.standard_normal(gen.input_dim)
    z0 = gen.forward(x0)
    n = z0.shape[0]
    mu_u = config.mu_u_vector(n)
    diag, dense = config.sigma_u_terms(n)
    Az = setup.A * z0[np.newaxis, :]
    M = Az.T @ Az
    if dense is None:
        M[np.diag_indices(n)] += config.lam * diag
        rhs = config.lam * diag * mu_u + Az.T @ y
    else:
        M += config.lam * dense
        rhs = config.lam * (dense @ mu_u) + Az.T @ y
    u0 = np.linalg.solve(M, rhs)
    return SolverState(
        x=x0,
        z=z0,
        u=u0,
        c=z0 * u0,
        phi1=np.zeros(n),
        phi2=np.zeros(n),
        k=0,
    )


def update_c(state, y, setup, config) -> np.ndarray:
    """Closed-form c block: (A^T A + rho I)^{-1} (A^T y + rho z*u - phi2)."""
    rhs = setup.apply_adjoint(y) + config.rho * state.z * state.u - state.phi2
    c = ridge_solve(setup.svd, config.rho, rhs)
    return project_ball(c, config.radius_c)


def update_u(state, y, setup, config) -> np.ndarray:
    """Closed-form u block of the augmented Lagrangian.

    Solves (rho Diag(z)^2 + lambda Sigma_u) u = lambda Sigma_u mu_u
    + z*(rho c + phi2); elementwise when Sigma_u is diagonal, dense solve
    otherwise (the matrix is positive definite by construction).
    """
    n = state.n
    mu_u = config.mu_u_vector(n)
    diag, dense = config.sigma_u_terms(n)
    rhs_tail = state.z * (config.rho * state.c + state.phi2)
    if dense is None:
        u = (config.lam * diag * mu_u + rhs_tail) / (
            config.rho * state.z**2 + config.lam * diag
        )
    else:
        M = config.lam * dense.copy()
        M[np.diag_indices(n)] += config.rho * state.z**2
        u = np.linalg.solve(M, config.lam * (dense @ mu_u) + rhs_tail)
    return project_ball(u, config.radius_u)


def _z_smooth_gradient(z, gx, state, config):
    return (
        state.phi1
        + config.rho * (z - gx)
        - state.u * state.phi2
        + config.rho * state.u * (z * state.u - state.c)
    )


def _z_objective(z, gx, state, config):
    xi1 = z - gx
    xi2 = state.c - z * state.u
    val = config.mu * float(np.sum(np.abs(z)))
    val += float(np.dot(state.phi1, xi1)) + float(np.dot(state.phi2, xi2))
    val += 0.5 * config.rho * (float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2)))
    return val


def _z_prox(v, level, config):
    z = soft_threshold(v, level)
    if config.nonneg_z:
        z = np.maximum(z, 0.0)
    return project_ball(z, config.radius_z)


def update_z_fista(state, y, setup, gen, config, J=None, gx=None) -> np.ndarray:
    """Monotone FISTA on the z block.

    J accelerated proximal steps with prox = soft threshold at level
    mu*step; the step size comes from the exact curvature bound
    rho*(1 + max|u_i|^2). Tracks the best iterate and restarts momentum
    whenever the objective would increase, so the returned point is never
    worse than a single ISTA step from the input (the first iterate is
    exactly that step). ``gx`` short-circuits the generator evaluation
    when the caller already holds G(x).
    """
    if J is None:
        J = config.J
    if J == 0:
        return state.z
    if gx is None:
        gx = gen.forward(state.x)
    u_inf = config.radius_u
    if not np.isfinite(u_inf):
        u_inf = float(np.max(np.abs(state.u))) if state.n else 0.0
    step = 1.0 / (config.rho * (1.0 + u_inf**2))
    level = config.mu * step

    z_prev = state.z
    yk = state.z
    t = 1.0
    best_z = state.z
    best_h = _z_objective(state.z, gx, state, config)
    for _ in range(J):
        z_new = _z_prox(yk - step * _z_smooth_gradient(yk, gx, state, config),
                        level, config)
        h_new = _z_objective(z_new, gx, state, config)
        if h_new <= best_h:
            best_h, best_z = h_new, z_new
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            yk = z_new + ((t - 1.0) / t_next) * (z_new - z_prev)
            z_prev = z_new
            t = t_next
        else:
            yk = best_z
            z_prev = best_z
            t = 1.0
    return best_z


def _x_smooth_gradient(x, state, gen, config):
    gx = gen.forward(x)
    g = -gen.vjp(x, state.phi1 + config.rho * (state.z - gx))
    if config.rx.smooth:
        g = g + config.rx.grad(x)
    return g


def _x_objective(x, state, gen, config):
    xi1 = state.z - gen.forward(x)
    return (
        config.rx.value(x)
        + float(np.dot(state.phi1, xi1))
        + 0.5 * config.rho * float(np.dot(xi1, xi1))
    )


def _x_subproblem(state, gen):
    """Target generator and (z, phi1) for the latent block.

    A square orthonormal basis preserves norms and inner products, so the
    block can be solved against the unrotated network with rotated z and
    phi1: every per-step basis product disappears and the objective changes
    only by an x-independent constant.
    """
    if (
        isinstance(gen, ScaleBasisGenerator)
        and gen.basis is not None
        and gen.basis_orthonormal
    ):
        inner = ScaleBasisGenerator(gen.base, range_shift=gen.range_shift)
        return inner, gen.basis.T @ state.z, gen.basis.T @ state.phi1
    return gen, state.z, state.phi1


def update_x(state, y, setup, gen, config, Jx=None) -> np.ndarray:
    """Latent block: Jx Adam steps (or proximal-gradient steps for an l1
    latent regularizer), returning the best iterate seen.

    Adam moments start fresh on every call so each outer iteration is a
    self-contained descent block; the best-of safeguard makes the block
    non-increasing in the augmented Lagrangian by construction.
    """
    if Jx is None:
        Jx = config.Jx
    if Jx == 0:
        return state.x
    inner, z_eff, phi1_eff = _x_subproblem(state, gen)
    rho = config.rho

    def eval_point(x):
        xi1 = z_eff - inner.forward(x)
        obj = config.rx.value(x) + float(np.dot(phi1_eff, xi1))
        obj += 0.5 * rho * float(np.dot(xi1, xi1))
        return xi1, obj

    x = state.x
    best_x = x
    xi1, best_f = eval_point(x)
    if config.rx.smooth:
        m = np.zeros_like(x)
        v = np.zeros_like(x)
        for t in range(1, Jx + 1):
            g = -inner.vjp(x, phi1_eff + rho * xi1) + config.rx.grad(x)
            m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * g
            v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * g * g
            m_hat = m / (1.0 - config.adam_beta1**t)
            v_hat = v / (1.0 - config.adam_beta2**t)
            x = x - config.adam_step * m_hat / (np.sqrt(v_hat) + config.adam_eps)
            x = project_ball(x, config.radius_x)
            xi1, f = eval_point(x)
            if f < best_f:
                best_f, best_x = f, x
    else:
        for _ in range(Jx):
            g = -inner.vjp(x, phi1_eff + rho * xi1)
            x = config.rx.prox(x - config.adam_step * g, config.adam_step)
            x = project_ball(x, config.radius_x)
            xi1, f = eval_point(x)
            if f < best_f:
                best_f, best_x = f, x
    return best_x


def dual_step_size(xi1, xi2, k: int, config) -> float:
    """Step for the k-th dual ascent (k counts from 1).

    Constant mode uses min(rho, 1). Adaptive mode damps by the larger
    feasibility-gap norm and k*ln^2(k+1), never exceeding sigma0; the
    resulting dual iterates stay inside the 4*sigma0 ball.
    """
    if config.dual_step_mode == "constant":
        return min(config.rho, 1.0)
    gap = max(float(np.linalg.norm(xi1)), float(np.linalg.norm(xi2)))
    denom = gap * k * math.log(k + 1.0) ** 2
    if denom <= 0.0:
        return config.sigma0
    return min(config.sigma0, config.sigma0 / denom)


def dual_ascent(state, gen, config, k: int):
    """Gradient ascent on the duals: phi <- phi + sigma_k * xi."""
    xi1, xi2 = feasibility_gap(state, gen)
    sigma = dual_step_size(xi1, xi2, k, config)
    return state.phi1 + sigma * xi1, state.phi2 + sigma * xi2, sigma


def stopping_statistic(prev: SolverState, state: SolverState, gen) -> float:
    """Mean-squared primal change plus feasibility gap at the new state."""
    xi1, xi2 = feasibility_gap(state, gen)
    d = state.d
    n = state.n
    dx = float(np.dot(state.x - prev.x, state.x - prev.x))
    dz = float(np.dot(state.z - prev.z, state.z - prev.z))
    du = float(np.dot(state.u - prev.u, state.u - prev.u))
    dc = float(np.dot(state.c - prev.c, state.c - prev.c))
    gap = float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2))
    return dx / d + (dz + du + dc + gap) / n


def stopping_check(prev, state, gen, tau: float) -> bool:
    return stopping_statistic(prev, state, gen) < tau


def solve(y, setup: MeasurementSetup, gen: ScaleBasisGenerator, config: SolverConfig):
    """Run the full block-coordinate loop: x, z, u, c, dual, stopping test.

    Deterministic for a fixed seed and config. Raises DivergenceError
    (carrying the trace so far) if any block goes non-finite.
    """
    y = as_vector(y)
    if y.shape[0] != setup.m:
        raise InvalidInputError(f"measurement length {y.shape[0]} != m={setup.m}")
    state = initialize(y, setup, gen, config)
    trace = RunTrace(keep_iterates=config.keep_iterates)
    if not state.finite():
        raise DivergenceError("non-finite initialization", trace=trace)

    def record(k, prev, state, xi1, xi2, sigma, stat):
        fval = cost_F(state, y, setup, config)
        lag = fval + float(np.dot(state.phi1, xi1)) + float(np.dot(state.phi2, xi2))
        lag += 0.5 * config.rho * (
            float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2))
        )
        trace.append(
            TraceRecord(
                k=k,
                L_rho=lag,
                F=fval,
                xi1_norm=float(np.linalg.norm(xi1)),
                xi2_norm=float(np.linalg.norm(xi2)),
                delta_x=float(np.linalg.norm(state.x - prev.x)),
                delta_z=float(np.linalg.norm(state.z - prev.z)),
                delta_u=float(np.linalg.norm(state.u - prev.u)),
                delta_c=float(np.linalg.norm(state.c - prev.c)),
                sigma_k=sigma,
                stop_stat=stat,
            ),
            state,
        )

    def checked(name, value, k):
        if not np.all(np.isfinite(value)):
            raise DivergenceError(
                f"non-finite {name} block at iteration {k}", trace=trace
            )
        return value

    xi1, xi2 = feasibility_gap(state, gen)
    gap0 = float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2))
    record(0, state, state, xi1, xi2, 0.0, gap0 / state.n)

    converged = False
    iterations = 0
    for k in range(config.K):
        prev = state
        state = replace(
            state, x=checked("x", update_x(state, y, setup, gen, config), k + 1)
        )
        gx = gen.forward(state.x)
        state = replace(
            state,
            z=checked(
                "z", update_z_fista(state, y, setup, gen, config, gx=gx), k + 1
            ),
        )
        state = replace(
            state, u=checked("u", update_u(state, y, setup, config), k + 1)
        )
        state = replace(
            state,
            c=checked("c", update_c(state, y, setup, config), k + 1),
            k=k + 1,
        )
        xi1 = state.z - gx
        xi2 = state.c - state.z * state.u
        sigma = dual_step_size(xi1, xi2, k + 1, config)
        state = replace(
            state,
            phi1=checked("dual", state.phi1 + sigma * xi1, k + 1),
            phi2=checked("dual", state.phi2 + sigma * xi2, k + 1),
        )
        iterations = k + 1
        gap = float(np.dot(xi1, xi1)) + float(np.dot(xi2, xi2))
        stat = (
            float(np.dot(state.x - prev.x, state.x - prev.x)) / state.d
            + (
                float(np.dot(state.z - prev.z, state.z - prev.z))
                + float(np.dot(state.u - prev.u, state.u - prev.u))
                + float(np.dot(state.c - prev.c, state.c - prev.c))
                + gap
            )
            / state.n
        )
        record(k + 1, prev, state, xi1, xi2, sigma, stat)
        if stat < config.tau:
            converged = True
            break
    return CgGanSolution(
        state=state,
        c_estimate=state.z * state.u,
        converged=converged,
        iterations_used=iterations,
        trace=trace,
    )
