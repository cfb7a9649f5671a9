import math

import numpy as np
import pytest

from safedual import NumProblem, UtilitySpec, compute_constants, solve_optimal


@pytest.fixture(scope="session")
def tiny():
    """Two users sharing one unit-capacity link, unit utility scale."""
    return NumProblem([[1, 1]], [1.0], (UtilitySpec(1.0), UtilitySpec(1.0)))


@pytest.fixture(scope="session")
def tiny_constants(tiny):
    return compute_constants(tiny)


@pytest.fixture(scope="session")
def tiny_solution(tiny, tiny_constants):
    return solve_optimal(tiny, tiny_constants)


def grid_search_optimum(problem, rounds=6, points=33):
    """Independent brute-force reference for small instances (n <= 3).

    Nested grid refinement over the enclosing box; valid because the
    objective is concave and the feasible set convex, so the incumbent cell
    always brackets the optimum.
    """
    n = problem.n
    assert n <= 3, "grid oracle is exponential in n"
    c_max = float(problem.capacities.max())
    lo = problem.lower.copy()
    hi = np.minimum(problem.upper, c_max)
    best_x, best_f = None, -np.inf
    for _ in range(rounds):
        axes = [np.linspace(lo[i], hi[i], points) for i in range(n)]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        feasible = (pts @ problem.a_matrix.T <= problem.capacities + 1e-12).all(axis=1)
        pts = pts[feasible]
        values = np.sum(problem.theta * np.log(pts + problem.shift), axis=1)
        k = int(np.argmax(values))
        if values[k] > best_f:
            best_f = float(values[k])
            best_x = pts[k]
        cell = (hi - lo) / (points - 1)
        lo = np.maximum(problem.lower, best_x - 3 * cell)
        hi = np.minimum(np.minimum(problem.upper, c_max), best_x + 3 * cell)
    return best_x, best_f


def charpoly_eigen_max(matrix):
    """Largest eigenvalue via Faddeev-LeVerrier characteristic polynomial.

    Deliberately avoids any eigenvalue routine so it can serve as an
    independent oracle for the power iteration.
    """
    a = np.asarray(matrix, float)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(a @ m) / k
    roots = np.roots(coeffs)
    real = roots[np.abs(roots.imag) < 1e-8 * max(1.0, np.abs(roots).max())].real
    return float(real.max())


def random_valid_problem(seed, n_range=(3, 12), m_range=(2, 8)):
    """Small random instance with the generator's default utility family."""
    from safedual import GeneratorConfig, generate_random

    return generate_random(
        GeneratorConfig(n_range=n_range, m_range=m_range, seed=seed)
    )
