import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cggan.errors import InvalidInputError
from cggan.linalg import project_ball, ridge_solve, soft_threshold, svd


class TestSvd:
    def test_identity(self):
        f = svd(np.eye(3))
        np.testing.assert_allclose(f.s, [1.0, 1.0, 1.0], atol=1e-14)

    def test_diagonal(self):
        f = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(f.s, [3.0, 1.0], atol=1e-14)

    def test_reconstruction_residual(self):
        # The reconstruction residual is its own oracle.
        rng = np.random.default_rng(0)
        M = rng.standard_normal((5, 3))
        f = svd(M)
        assert np.linalg.norm(f.reconstruct() - M) <= 1e-10

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(1)
        M = rng.standard_normal((7, 4))
        f = svd(M)
        np.testing.assert_allclose(f.U.T @ f.U, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(f.V.T @ f.V, np.eye(4), atol=1e-10)
        assert np.all(np.diff(f.s) <= 0)
        assert np.all(f.s >= 0)

    def test_orthogonal_matrix_singular_values(self):
        rng = np.random.default_rng(2)
        Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        f = svd(Q)
        np.testing.assert_allclose(f.s, np.ones(6), atol=1e-10)

    def test_nonfinite_rejected(self):
        M = np.eye(2)
        M[0, 0] = np.nan
        with pytest.raises(InvalidInputError):
            svd(M)

    def test_rank_diagnostic_ignores_tiny_singular_values(self):
        f = svd(np.diag([2.0, 1e-15, 0.0]))
        assert f.rank == 1
        assert svd(np.zeros((2, 3))).rank == 0


class TestRidgeSolve:
    def test_identity_matrix(self):
        b = np.array([2.0, -4.0, 6.0])
        x = ridge_solve(svd(np.eye(3)), 1.0, b)
        np.testing.assert_allclose(x, b / 2.0, atol=1e-14)

    def test_zero_matrix(self):
        b = np.array([1.0, 3.0])
        x = ridge_solve(svd(np.zeros((2, 2))), 2.0, b)
        np.testing.assert_allclose(x, b / 2.0, atol=1e-14)

    def test_matches_dense_solve(self):
        # Oracle: direct dense LU solve of the normal equations.
        rng = np.random.default_rng(3)
        M = rng.standard_normal((8, 8))
        b = rng.standard_normal(8)
        x = ridge_solve(svd(M), 0.7, b)
        expected = np.linalg.solve(M.T @ M + 0.7 * np.eye(8), b)
        np.testing.assert_allclose(x, expected, rtol=1e-10)

    @pytest.mark.parametrize("rho", [1e-4, 1.0, 1e4])
    @pytest.mark.parametrize("shape", [(12, 12), (6, 12), (12, 6)])
    def test_residual_property(self, rho, shape):
        rng = np.random.default_rng(hash(shape) % 2**32)
        M = rng.standard_normal(shape)
        b = rng.standard_normal(shape[1])
        x = ridge_solve(svd(M), rho, b)
        residual = (M.T @ M + rho * np.eye(shape[1])) @ x - b
        assert np.linalg.norm(residual) <= 1e-8 * np.linalg.norm(b)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            ridge_solve(svd(np.eye(3)), 1.0, np.ones(4))

    def test_nonpositive_rho(self):
        with pytest.raises(InvalidInputError):
            ridge_solve(svd(np.eye(2)), 0.0, np.ones(2))


class TestSoftThreshold:
    def test_below_threshold(self):
        np.testing.assert_array_equal(soft_threshold(np.array([0.5]), 1.0), [0.0])

    def test_above_threshold(self):
        np.testing.assert_array_equal(soft_threshold(np.array([2.0]), 1.0), [1.0])

    def test_sign_cases(self):
        out = soft_threshold(np.array([-3.0, 0.2, 4.0]), 1.0)
        np.testing.assert_allclose(out, [-2.0, 0.0, 3.0], atol=1e-15)

    def test_negative_threshold_rejected(self):
        with pytest.raises(InvalidInputError):
            soft_threshold(np.array([1.0]), -0.1)

    @settings(max_examples=50, deadline=None)
    @given(
        v=st.floats(min_value=-10, max_value=10, allow_nan=False),
        t=st.floats(min_value=0, max_value=5, allow_nan=False),
    )
    def test_grid_minimizer_oracle(self, v, t):
        # Exact minimizer of t|u| + (u-v)^2/2, checked against a dense grid.
        out = float(soft_threshold(np.array([v]), t)[0])
        grid = np.linspace(v - 2 * t - 1, v + 2 * t + 1, 20001)
        obj = t * np.abs(grid) + 0.5 * (grid - v) ** 2
        best = grid[np.argmin(obj)]
        step = grid[1] - grid[0]
        obj_out = t * abs(out) + 0.5 * (out - v) ** 2
        assert obj_out <= obj.min() + 1e-12
        assert abs(out - best) <= step + 1e-12


class TestProjectBall:
    def test_inside_untouched(self):
        v = np.array([0.3, 0.4])
        assert project_ball(v, 1.0) is v

    def test_outside_scaled(self):
        v = np.array([3.0, 4.0])
        out = project_ball(v, 1.0)
        np.testing.assert_allclose(np.linalg.norm(out), 1.0)
        np.testing.assert_allclose(out, v / 5.0)

    def test_infinite_radius_noop(self):
        v = np.array([1e12])
        assert project_ball(v, np.inf) is v
