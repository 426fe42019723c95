"""Shared fixtures and helpers for the test suite."""

import itertools

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def brute_force_box_qp(problem):
    """Global BoxQP minimum by enumerating active sets (n <= 8, convex Q)."""
    Q, c = problem.Q, problem.c
    lo, hi = problem._beta_bounds()
    a = problem.eq_coeffs
    n = c.shape[0]
    # work in beta = a * alpha coordinates, where the constraint is sum = t
    Qb = Q / np.outer(a, a)
    cb = c / a
    best_obj, best_beta = np.inf, None
    for assignment in itertools.product((0, 1, 2), repeat=n):
        beta = np.empty(n)
        fixed = np.array([s != 1 for s in assignment])
        beta[[s == 0 for s in assignment]] = lo[[s == 0 for s in assignment]]
        beta[[s == 2 for s in assignment]] = hi[[s == 2 for s in assignment]]
        free = ~fixed
        k = int(free.sum())
        if k == 0:
            if abs(beta.sum() - problem.eq_target) > 1e-10:
                continue
        else:
            A = np.zeros((k + 1, k + 1))
            A[:k, :k] = Qb[np.ix_(free, free)]
            A[:k, k] = 1.0
            A[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[:k] = cb[free] - Qb[np.ix_(free, fixed)] @ beta[fixed]
            rhs[k] = problem.eq_target - beta[fixed].sum()
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            beta[free] = sol[:k]
            if np.any(beta[free] < lo[free] - 1e-10) or np.any(beta[free] > hi[free] + 1e-10):
                continue
        obj = float(0.5 * beta @ Qb @ beta - cb @ beta)
        if obj < best_obj:
            best_obj, best_beta = obj, beta.copy()
    assert best_beta is not None
    return best_obj


def random_psd_instance(rng, n_max=30, d_max=3):
    """A random kernel-learning instance: points, responses, weights."""
    n = int(rng.integers(5, n_max + 1))
    d = int(rng.integers(1, d_max + 1))
    X = rng.normal(size=(n, d))
    y = rng.normal(size=n)
    w = rng.uniform(0.0, 3.0, size=n)
    return X, y, w
