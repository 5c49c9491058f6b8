from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.optimize import linprog

from _oracles import explicit_dual, random_lp
from rankchoice.lp import (
    LpBuilder,
    LpProblem,
    LpStatus,
    SimplexSolver,
    primal_residual,
    solve,
)


def lp(c, A, rel, b, **kw) -> LpProblem:
    return LpProblem(np.asarray(c, float), np.asarray(A, float), tuple(rel), np.asarray(b, float), **kw)


def scipy_value(c, A, rel, b, bounds=(0, None)):
    A = np.asarray(A, float)
    ub = [i for i, r in enumerate(rel) if r != "="]
    sgn = np.array([1.0 if rel[i] == "<=" else -1.0 for i in ub])
    eq = [i for i, r in enumerate(rel) if r == "="]
    res = linprog(c, A_ub=A[ub] * sgn[:, None] if ub else None, b_ub=np.asarray(b)[ub] * sgn if ub else None,
                  A_eq=A[eq] if eq else None, b_eq=np.asarray(b)[eq] if eq else None, bounds=bounds,
                  method="highs")
    return res


class TestSmallExamples:
    def test_single_lower_bound(self):
        sol = solve(lp([1.0], [[1.0]], [">="], [3.0]))
        assert sol.ok
        assert sol.x[0] == pytest.approx(3.0)
        assert sol.objective == pytest.approx(3.0)

    def test_zero_objective_on_simplex(self):
        sol = solve(lp([0.0, 0.0], [[1.0, 1.0]], ["="], [1.0]))
        assert sol.ok
        assert sol.x.sum() == pytest.approx(1.0)
        assert np.all(sol.x >= -1e-12)
        assert np.all(np.isfinite(sol.duals))

    def test_max_with_duals(self):
        sol = solve(lp([1.0, 1.0], [[1.0, 0.0], [0.0, 1.0]], ["<=", "<="], [1.0, 2.0], sense="max"))
        assert sol.objective == pytest.approx(3.0)
        assert_allclose(sol.duals, [1.0, 1.0], atol=1e-12)

    def test_infeasible(self):
        sol = solve(lp([1.0], [[1.0], [1.0]], ["<=", ">="], [1.0, 2.0]))
        assert sol.status is LpStatus.INFEASIBLE
        assert not sol.ok and math.isnan(sol.objective)

    def test_unbounded(self):
        sol = solve(lp([-1.0, 0.0], [[1.0, -1.0]], ["<="], [1.0]))
        assert sol.status is LpStatus.UNBOUNDED

    def test_free_and_boxed_variables(self):
        # min x - y, -2 <= x <= 5 free-ish, y free, x + y = 1, y <= 4
        b = LpBuilder()
        x = b.add_vars(1, lower=-2.0, upper=5.0, cost=1.0)
        y = b.add_vars(1, lower=-math.inf, cost=-1.0)
        b.add_row([x[0], y[0]], [1.0, 1.0], "=", 1.0)
        b.add_row(y, 1.0, "<=", 4.0)
        sol = solve(b.build())
        assert sol.objective == pytest.approx(-2.0 - 3.0)
        assert_allclose(sol.x, [-2.0, 3.0], atol=1e-9)

    def test_negative_rhs_row_duals(self):
        # min x s.t. -x <= -2: dual marginal d obj / d b = -1
        sol = solve(lp([1.0], [[-1.0]], ["<="], [-2.0]))
        assert sol.objective == pytest.approx(2.0)
        assert sol.duals[0] == pytest.approx(-1.0)

    def test_redundant_equalities(self):
        sol = solve(lp([1.0, 2.0], [[1.0, 1.0], [2.0, 2.0], [1.0, 0.0]], ["=", "=", ">="], [1.0, 2.0, 0.25]))
        assert sol.objective == pytest.approx(1.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            lp([1.0], [[1.0]], ["<"], [1.0])
        with pytest.raises(ValueError):
            lp([1.0], [[1.0]], ["<="], [np.inf])
        with pytest.raises(ValueError):
            lp([1.0], [[1.0]], ["<="], [1.0], sense="minimize")
        with pytest.raises(ValueError):
            lp([1.0], [[1.0]], ["<=", "<="], [1.0])

    def test_builder_doctest_example(self):
        b = LpBuilder()
        x = b.add_vars(2, cost=1.0)
        b.add_row(x, [1.0, 1.0], ">=", 1.0)
        assert solve(b.build()).objective == pytest.approx(1.0)


class TestRandomProblems:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_highs(self, seed):
        c, A, rel, b = random_lp(np.random.default_rng(seed))
        sol = solve(lp(c, A, rel, b), debug=True)
        ref = scipy_value(c, A, rel, b)
        assert ref.status == 0
        assert sol.ok
        assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
        assert primal_residual(lp(c, A, rel, b), sol.x) <= 1e-7

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_duals_certify_optimality(self, seed):
        c, A, rel, b = random_lp(np.random.default_rng(seed))
        sol = solve(lp(c, A, rel, b))
        y = sol.duals
        assert float(b @ y) == pytest.approx(sol.objective, abs=1e-7)
        assert np.all(c - A.T @ y >= -1e-7)
        for yi, r in zip(y, rel):
            assert (r != "<=" or yi <= 1e-9) and (r != ">=" or yi >= -1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_explicit_dual_value(self, seed):
        c, A, rel, b = random_lp(np.random.default_rng([12, seed]))
        primal = solve(lp(c, A, rel, b))
        obj, At, drel, rhs, lo, hi = explicit_dual(c, A, rel, b)
        dual = solve(lp(obj, At, drel, rhs, lower=lo, upper=hi, sense="max"))
        assert dual.ok
        assert primal.objective == pytest.approx(dual.objective, abs=1e-6)

    def test_boxed_random_matches_highs(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            c, A, rel, b = random_lp(rng)
            n = c.size
            lo = np.where(rng.random(n) < 0.3, -np.inf, -rng.uniform(0, 1, n))
            hi = np.where(rng.random(n) < 0.5, np.inf, rng.uniform(3, 5, n))
            ref = scipy_value(c, A, rel, b, bounds=list(zip(np.where(np.isinf(lo), None, lo),
                                                           np.where(np.isinf(hi), None, hi))))
            sol = solve(lp(c, A, rel, b, lower=lo, upper=hi))
            if ref.status == 0:
                assert sol.objective == pytest.approx(ref.fun, abs=1e-6)
            elif ref.status == 3:
                assert sol.status is LpStatus.UNBOUNDED


class TestCycling:
    def test_beale_example_terminates(self):
        # classic cycling instance for the textbook largest-coefficient rule
        c = [-0.75, 150.0, -0.02, 6.0]
        A = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
        sol = solve(lp(c, A, ["<=", "<=", "<="], [0.0, 0.0, 1.0]), debug=True)
        assert sol.ok
        assert sol.objective == pytest.approx(-0.05)

    def test_highly_degenerate_assignment(self):
        n = 6
        b = LpBuilder()
        x = b.add_vars(n * n, cost=np.random.default_rng(0).integers(0, 3, n * n))
        for i in range(n):
            b.add_row(x[i * n:(i + 1) * n], 1.0, "=", 1.0)
            b.add_row(x[i::n], 1.0, "=", 1.0)
        solver = SimplexSolver(b.build(), debug=True)
        sol = solver.solve()
        assert sol.ok
        assert sol.objective == pytest.approx(round(sol.objective))
