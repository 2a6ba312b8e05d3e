import numpy as np
import pytest

from adasamp import glm
from adasamp.oracle import (
    brute_force_minimax,
    exhaustive_expected_value,
    finite_difference_gradient,
    grid_minimax_value,
)
from adasamp.sampling import GradientBox, LipschitzProfile, StationaryPointError

from conftest import make_problem


class TestBruteForceMinimax:
    def test_interior_example(self):
        value, cert = brute_force_minimax(
            GradientBox([1.0, 2.0], [2.0, 3.0]), LipschitzProfile([1.0, 1.0])
        )
        assert value == pytest.approx(2.0, rel=1e-12)
        np.testing.assert_allclose(cert, [2.0, 2.0], rtol=1e-12)

    def test_singleton_box(self):
        c = np.array([3.0, 4.0])
        profile = LipschitzProfile([2.0, 1.0])
        value, cert = brute_force_minimax(GradientBox(c, c), profile)
        expected = float((profile.sqrt_values @ c) ** 2 / (c @ c))
        assert value == pytest.approx(expected, rel=1e-12)
        np.testing.assert_array_equal(cert, c)

    def test_symmetric_box_certificate_is_diagonal(self):
        value, cert = brute_force_minimax(
            GradientBox([1.0, 1.0], [3.0, 3.0]), LipschitzProfile([1.0, 1.0])
        )
        assert value == pytest.approx(2.0, rel=1e-12)
        assert cert[0] == pytest.approx(cert[1], rel=1e-12)
        assert 1.0 <= cert[0] <= 3.0

    def test_against_grid(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            profile = LipschitzProfile(rng.uniform(0.1, 10.0, n))
            lower = rng.uniform(0.0, 2.0, n)
            box = GradientBox(lower, lower + rng.uniform(0.01, 3.0, n))
            value, _ = brute_force_minimax(box, profile)
            grid = grid_minimax_value(box, profile, 150)
            assert grid <= value * (1 + 1e-9)
            assert grid >= value * 0.995

    def test_certificate_feasible(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 9))
            profile = LipschitzProfile(rng.uniform(0.1, 10.0, n))
            lower = rng.uniform(0.0, 2.0, n)
            box = GradientBox(lower, lower + rng.uniform(0.0, 3.0, n))
            value, cert = brute_force_minimax(box, profile)
            assert np.all(cert >= box.lower - 1e-12)
            assert np.all(cert <= box.upper + 1e-12)
            attained = (profile.sqrt_values @ cert) ** 2 / (cert @ cert)
            assert attained == pytest.approx(value, rel=1e-12)

    def test_rejects_large_and_unbounded(self):
        profile = LipschitzProfile(np.ones(9))
        box = GradientBox(np.zeros(9), np.ones(9))
        with pytest.raises(ValueError):
            brute_force_minimax(box, profile)
        with pytest.raises(ValueError):
            brute_force_minimax(
                GradientBox([0.0], [np.inf]), LipschitzProfile([1.0])
            )

    def test_all_zero_box(self):
        with pytest.raises(StationaryPointError):
            brute_force_minimax(
                GradientBox([0.0, 0.0], [0.0, 0.0]), LipschitzProfile([1.0, 1.0])
            )


class TestExhaustiveExpectedValue:
    def test_single_coordinate_is_deterministic(self):
        problem = make_problem(d=6, n=1, lam=0.0)
        x = np.array([0.7])
        state = glm.CdState(problem, x)
        grad = glm.full_gradient(problem, state)
        alpha = 0.05
        stepped = x - alpha * grad
        expected = glm.objective(problem, stepped, method="cd")
        got = exhaustive_expected_value(problem, x, np.array([1.0]), alpha)
        assert got == pytest.approx(expected, rel=1e-14)

    def test_quadratic_optimal_bound(self, rng):
        from adasamp.sampling import optimal_sampling

        problem = make_problem(d=15, n=8, lam=0.0, seed=3)
        profile = glm.coordinate_lipschitz(problem)
        for _ in range(20):
            x = rng.standard_normal(problem.n_features)
            state = glm.CdState(problem, x)
            grad = glm.full_gradient(problem, state)
            p, alpha = optimal_sampling(np.abs(grad), profile)
            if np.any(p == 0.0):
                continue
            lhs = exhaustive_expected_value(problem, x, p, alpha)
            fval = glm.objective(problem, x, method="cd")
            assert lhs <= fval - 0.5 * alpha * float(grad @ grad) + 1e-9

    def test_symmetric_outcomes_match(self):
        design = np.array([[1.0, 1.0], [1.0, 1.0]])
        from adasamp.data import SparseDesign

        problem = glm.GlmProblem(
            SparseDesign.from_matrix(design), np.array([1.0, 1.0]), "square", "l2", 0.0
        )
        x = np.array([0.3, 0.3])
        state = glm.CdState(problem, x)
        grad = glm.full_gradient(problem, state)
        alpha = 0.1
        outcomes = []
        for i in range(2):
            stepped = x.copy()
            stepped[i] -= (alpha / 0.5) * grad[i]
            outcomes.append(glm.objective(problem, stepped, method="cd"))
        assert outcomes[0] == pytest.approx(outcomes[1], rel=1e-14)
        value = exhaustive_expected_value(problem, x, np.array([0.5, 0.5]), alpha)
        assert value == pytest.approx(outcomes[0], rel=1e-14)

    def test_rejects_nonsmooth(self):
        problem = make_problem(reg="l1", lam=0.5)
        with pytest.raises(ValueError):
            exhaustive_expected_value(
                problem, np.zeros(problem.n_features),
                np.full(problem.n_features, 1.0 / problem.n_features), 0.1,
            )


class TestFiniteDifferenceGradient:
    def test_identity_least_squares(self):
        from adasamp.data import SparseDesign

        problem = glm.GlmProblem(
            SparseDesign.from_matrix(np.eye(3)), np.zeros(3), "square", "l2", 0.0
        )
        grad = finite_difference_gradient(problem, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(grad, [1.0, 0.0, 0.0], atol=1e-8)

    @pytest.mark.parametrize("loss", ["square", "logistic", "squared_hinge"])
    def test_matches_analytic(self, loss, rng):
        problem = make_problem(d=12, n=6, loss=loss, lam=0.0, seed=9)
        for _ in range(20):
            x = rng.standard_normal(problem.n_features)
            state = glm.CdState(problem, x)
            analytic = glm.full_smooth_gradient(problem, state)
            numeric = finite_difference_gradient(problem, x)
            np.testing.assert_allclose(
                numeric, analytic, rtol=1e-6, atol=1e-6 * (1 + np.abs(analytic).max())
            )

    def test_logistic_symmetry(self):
        from adasamp.data import SparseDesign

        design = np.array([[1.0, 0.5], [-1.0, -0.5]])
        labels = np.array([1.0, 1.0])
        problem = glm.GlmProblem(
            SparseDesign.from_matrix(design), labels, "logistic", "l2", 0.0
        )
        grad = finite_difference_gradient(problem, np.zeros(2))
        np.testing.assert_allclose(grad, 0.0, atol=1e-10)
