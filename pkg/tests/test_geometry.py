import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from evclass.exceptions import NotInHullError
from evclass.geometry import (LpProblem, PointCloud, affine_dimension, caratheodory_weights,
                              independent_rows, solve_lp, zero_in_relint)


class TestSolveLp:
    def test_box(self):
        res = solve_lp(LpProblem([1.0], A_ub=[[1.0]], b_ub=[1.0]))
        assert res.status == "optimal"
        assert res.value == pytest.approx(1.0)
        np.testing.assert_allclose(res.x, [1.0])

    def test_infeasible(self):
        assert solve_lp(LpProblem([1.0], A_ub=[[1.0]], b_ub=[-1.0])).status == "infeasible"

    def test_unbounded(self):
        assert solve_lp(LpProblem([1.0])).status == "unbounded"

    def test_free_variable(self):
        # max -x with x free and x >= -3 written as -x <= 3
        res = solve_lp(LpProblem([-1.0], A_ub=[[-1.0]], b_ub=[3.0], lb=[-np.inf]))
        assert res.value == pytest.approx(3.0)
        assert res.x[0] == pytest.approx(-3.0)

    def test_equality_with_redundant_row(self):
        A = [[1.0, 1.0], [2.0, 2.0]]
        res = solve_lp(LpProblem([1.0, 2.0], A_eq=A, b_eq=[1.0, 2.0]))
        assert res.value == pytest.approx(2.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            LpProblem([1.0, 2.0], A_ub=[[1.0]], b_ub=[1.0])

    def test_degenerate_cycling_example(self):
        # Beale's example cycles under the textbook rule; Bland's rule terminates.
        c = [0.75, -150.0, 0.02, -6.0]
        A = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
        res = solve_lp(LpProblem(c, A_ub=A, b_ub=[0.0, 0.0, 1.0]))
        assert res.value == pytest.approx(0.05)


@st.composite
def lp_instances(draw):
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 6))
    k = int(rng.integers(1, 6))
    e = int(rng.integers(0, 3))
    A_ub = rng.normal(size=(k, n))
    x0 = rng.uniform(0, 2, size=n)
    b_ub = A_ub @ x0 + rng.uniform(0, 1, size=k) * int(rng.integers(0, 2))
    A_eq = rng.normal(size=(e, n))
    b_eq = A_eq @ x0
    # bounding rows keep most instances bounded but not all
    if rng.random() < 0.8:
        A_ub = np.vstack([A_ub, np.ones((1, n))])
        b_ub = np.append(b_ub, x0.sum() + 1.0)
    c = rng.normal(size=n)
    return c, A_eq, b_eq, A_ub, b_ub


@given(lp_instances())
def test_solve_lp_matches_scipy(inst):
    c, A_eq, b_eq, A_ub, b_ub = inst
    ours = solve_lp(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    ref = linprog(-c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq if len(A_eq) else None,
                  b_eq=b_eq if len(b_eq) else None, bounds=(0, None), method="highs")
    expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
    assert ours.status == expected
    if expected == "optimal":
        assert ours.value == pytest.approx(-ref.fun, abs=1e-7, rel=1e-7)
        assert np.all(ours.x >= -1e-9)
        assert np.all(A_ub @ ours.x <= b_ub + 1e-9)
        if len(A_eq):
            np.testing.assert_allclose(A_eq @ ours.x, b_eq, atol=1e-9)


@given(lp_instances(), st.integers(0, 1000))
def test_solve_lp_row_permutation_invariant(inst, seed):
    c, A_eq, b_eq, A_ub, b_ub = inst
    base = solve_lp(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub, b_ub=b_ub))
    perm = np.random.default_rng(seed).permutation(len(b_ub))
    again = solve_lp(LpProblem(c, A_eq=A_eq, b_eq=b_eq, A_ub=A_ub[perm], b_ub=b_ub[perm]))
    assert again.status == base.status
    if base.optimal:
        assert again.value == pytest.approx(base.value, abs=1e-9, rel=1e-9)


class TestCaratheodory:
    def test_two_point_balance(self):
        np.testing.assert_allclose(caratheodory_weights([[-1.0], [2.0]], [0.0]), [2 / 3, 1 / 3])

    def test_symmetric_centroid(self):
        w = caratheodory_weights(PointCloud([[1, 0], [0, 1], [-1, -1]]), [0, 0])
        np.testing.assert_allclose(w, [1 / 3, 1 / 3, 1 / 3])

    def test_not_in_hull(self):
        with pytest.raises(NotInHullError):
            caratheodory_weights([[1.0], [2.0]], [0.0])

    @given(st.integers(0, 10**6))
    def test_reconstruction_and_support(self, seed):
        rng = np.random.default_rng(seed)
        k, m = int(rng.integers(1, 12)), int(rng.integers(1, 4))
        P = rng.normal(size=(k, m))
        lam = rng.dirichlet(np.ones(k))
        target = lam @ P
        w = caratheodory_weights(P, target)
        assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)
        assert np.max(np.abs(w @ P - target)) <= 1e-9
        assert np.count_nonzero(w) <= m + 1


class TestRelint:
    def test_examples(self):
        assert zero_in_relint([[-1.0], [2.0]]).status == "yes"
        assert zero_in_relint([[0.0], [1.0], [2.0]]).status == "boundary"
        assert zero_in_relint([[1.0], [2.0]]).status == "outside"

    def test_yes_reports_min_weight(self):
        r = zero_in_relint([[-1.0], [1.0]])
        assert r.inside and r.min_weight == pytest.approx(0.5)

    @given(st.integers(0, 10**6))
    def test_yes_implies_caratheodory(self, seed):
        rng = np.random.default_rng(seed)
        P = rng.normal(size=(int(rng.integers(2, 8)), int(rng.integers(1, 3))))
        if zero_in_relint(P).inside:
            w = caratheodory_weights(P, np.zeros(P.shape[1]))
            assert np.max(np.abs(w @ P)) <= 1e-9


class TestIndependentRows:
    def test_examples(self):
        assert independent_rows([[1, 0], [0, 1]]) == [0, 1]
        assert independent_rows([[1, 2], [2, 4]]) == [0]
        assert independent_rows([[1, 0], [1, 0], [0, 3]]) == [0, 2]

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            independent_rows(np.zeros((0, 2)))

    @given(st.integers(0, 10**6))
    def test_rank_matches_numpy(self, seed):
        rng = np.random.default_rng(seed)
        r = int(rng.integers(1, 4))
        X = rng.normal(size=(int(rng.integers(1, 7)), r)) @ rng.normal(size=(r, 5))
        keep = independent_rows(X)
        assert len(keep) == np.linalg.matrix_rank(X)
        assert np.linalg.matrix_rank(X[keep]) == len(keep)


def test_affine_dimension_examples():
    assert affine_dimension([[3.0, 4.0]]) == 0
    assert affine_dimension([[0, 0], [1, 1], [2, 2]]) == 1
    assert affine_dimension([[0, 0], [1, 0], [0, 1]]) == 2
