import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oracles import grid_search_simplex_ls
from routechoice.qp import (SimplexLSProblem, gradient, kkt_residual, lipschitz_constant,
                            objective_value, project_onto_simplex, solve_simplex_ls)


@pytest.mark.parametrize("v, expected", [
    ((0.6, 0.6), (0.5, 0.5)),
    ((2.0, 0.0), (1.0, 0.0)),
    ((0.2, 0.3, 0.5), (0.2, 0.3, 0.5)),
    ((-1.0, -1.0, -1.0), (1 / 3, 1 / 3, 1 / 3)),
])
def test_projection_examples(v, expected):
    np.testing.assert_allclose(project_onto_simplex(v), expected, atol=1e-15)


finite = st.floats(-1e3, 1e3, allow_nan=False)
vectors = st.integers(1, 8).flatmap(lambda n: arrays(np.float64, n, elements=finite))


@settings(max_examples=200, deadline=None)
@given(v=vectors)
def test_projection_lands_on_simplex(v):
    x = project_onto_simplex(v)
    assert np.all(x >= 0)
    assert x.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(v=vectors)
def test_projection_idempotent(v):
    x = project_onto_simplex(v)
    np.testing.assert_allclose(project_onto_simplex(x), x, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(v=vectors, seed=st.integers(0, 1000))
def test_projection_is_nearest_point(v, seed):
    # variational inequality: (v - x) . (y - x) <= 0 for every feasible y
    x = project_onto_simplex(v)
    ys = np.random.default_rng(seed).dirichlet(np.ones(v.size), size=20)
    scale = max(1.0, np.abs(v).max())
    assert np.all((ys - x) @ (v - x) <= 1e-9 * scale)


def test_identity_example():
    prob = SimplexLSProblem(np.eye(2), np.ones(2))
    sol = solve_simplex_ls(prob)
    np.testing.assert_allclose(sol.alpha, [0.5, 0.5], atol=1e-12)
    assert sol.objective == pytest.approx(0.5, abs=1e-12)
    assert sol.converged


def test_single_column():
    sol = solve_simplex_ls(SimplexLSProblem(np.array([[1.0], [2.0]]), np.array([1.0, 1.0])))
    assert sol.alpha.tolist() == [1.0]
    assert sol.objective == pytest.approx(1.0)


def test_exact_fit_recovered(rng):
    A = rng.uniform(0, 100, size=(40, 5))
    alpha = np.array([0.1, 0.0, 0.4, 0.5, 0.0])
    sol = solve_simplex_ls(SimplexLSProblem(A, A @ alpha))
    np.testing.assert_allclose(sol.alpha, alpha, atol=1e-9)
    assert sol.objective <= 1e-18
    assert sol.alpha[1] == 0.0 and sol.alpha[4] == 0.0


def test_gradient_finite_difference(rng):
    prob = SimplexLSProblem(rng.normal(size=(6, 4)), rng.normal(size=6))
    a = rng.dirichlet(np.ones(4))
    h = 1e-6
    fd = [(objective_value(prob, a + h * e) - objective_value(prob, a - h * e)) / (2 * h)
          for e in np.eye(4)]
    np.testing.assert_allclose(gradient(prob, a), fd, rtol=1e-6, atol=1e-7)


def test_lipschitz_matches_eigenvalue(rng):
    A = rng.normal(size=(10, 4))
    gram = A.T @ A
    L = lipschitz_constant(gram)
    lam = np.linalg.eigvalsh(gram).max()
    assert 2 * lam <= L <= 2 * lam * 1.002


def test_warm_start_same_answer(rng):
    prob = SimplexLSProblem(rng.uniform(0, 5, size=(12, 4)), rng.uniform(0, 5, size=12))
    cold = solve_simplex_ls(prob)
    warm = solve_simplex_ls(prob, alpha0=np.array([1.0, 0, 0, 0]))
    assert warm.objective == pytest.approx(cold.objective, rel=1e-10, abs=1e-12)


def test_shape_checks():
    with pytest.raises(ValueError):
        SimplexLSProblem(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        SimplexLSProblem(np.array([[np.nan]]), np.ones(1))
    with pytest.raises(ValueError):
        objective_value(SimplexLSProblem(np.eye(2), np.ones(2)), np.ones(3))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(1, 3), m=st.integers(1, 10))
def test_solver_beats_coarse_grid(seed, q, m):
    rng = np.random.default_rng(seed)
    A, b = rng.normal(size=(m, q)), rng.normal(size=m)
    sol = solve_simplex_ls(SimplexLSProblem(A, b))
    assert sol.alpha.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(sol.alpha >= 0)
    assert sol.objective <= grid_search_simplex_ls(A, b, resolution=50) + 1e-12
    assert sol.kkt_residual <= 1e-8


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.integers(2, 8))
def test_optimality_against_random_feasible_points(seed, q):
    rng = np.random.default_rng(seed)
    prob = SimplexLSProblem(rng.uniform(0, 10, size=(15, q)), rng.uniform(0, 10, size=15))
    sol = solve_simplex_ls(prob)
    others = rng.dirichlet(np.ones(q), size=200)
    vals = np.array([objective_value(prob, a) for a in others])
    assert sol.objective <= vals.min() + 1e-9 * max(1.0, vals.min())
    assert kkt_residual(prob, sol.alpha) == sol.kkt_residual
