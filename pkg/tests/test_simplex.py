import numpy as np
import pytest

from nonlocal_distill.simplex import (InfeasibleError, SimplexLP, UnboundedError,
                                      independent_rows, linprog_max)


def test_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    res = linprog_max(np.array([1.0, 1.0]), np.array([[1.0, 2.0], [3.0, 1.0]]),
                      np.array([4.0, 6.0]))
    assert res.value == pytest.approx(2.8)
    assert res.x == pytest.approx([1.6, 1.2])


def test_equality_rows_and_redundancy():
    c = np.array([1.0, 2.0, 3.0])
    A_eq = np.array([[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]])  # rank 1
    res = linprog_max(c, np.eye(3), np.ones(3), A_eq, np.array([1.0, 2.0]))
    assert res.value == pytest.approx(3.0)
    assert independent_rows(A_eq) == [0]


def test_infeasible_and_unbounded():
    with pytest.raises(InfeasibleError):
        linprog_max(np.ones(2), np.eye(2), np.ones(2), np.array([[1.0, 1.0]]), np.array([3.0]))
    with pytest.raises(UnboundedError):
        linprog_max(np.array([1.0, 0.0]), np.array([[0.0, 1.0]]), np.array([1.0]))


def test_negative_rhs_rejected():
    with pytest.raises(ValueError):
        SimplexLP(np.eye(2), np.array([-1.0, 1.0]))


def test_warm_start_matches_cold():
    rng = np.random.default_rng(3)
    A = rng.uniform(0, 1, (12, 6))
    b = rng.uniform(1, 2, 12)
    lp = SimplexLP(A, b)
    for _ in range(20):
        c = rng.normal(size=6)
        assert lp.maximize(c).value == pytest.approx(linprog_max(c, A, b).value, abs=1e-9)


def test_against_scipy():
    scipy_opt = pytest.importorskip("scipy.optimize")
    rng = np.random.default_rng(11)
    for _ in range(40):
        n, m = rng.integers(2, 8), rng.integers(2, 10)
        A = rng.normal(size=(m, n))
        b = rng.uniform(0.5, 2, m)
        A = np.vstack([A, np.eye(n)])  # keep bounded
        b = np.concatenate([b, np.full(n, 3.0)])
        c = rng.normal(size=n)
        ref = scipy_opt.linprog(-c, A_ub=A, b_ub=b, bounds=[(0, None)] * n, method="highs")
        assert linprog_max(c, A, b).value == pytest.approx(-ref.fun, abs=1e-8)
