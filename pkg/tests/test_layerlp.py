"""Single-layer steps: exact greedy vs an independent LP, and the maximin LP."""

import numpy as np
import pytest
from scipy.optimize import linprog

import pipeopt as po
from pipeopt.layerlp import solve_maximin_step, solve_welfare_step

rng = np.random.default_rng(404)


def random_step(width_out, width_in, mask_p=1.0, weighted=False):
    m0 = rng.random((width_out, width_in))
    m0 /= m0.sum(axis=0, keepdims=True)
    mask = rng.random((width_out, width_in)) < mask_p if mask_p < 1 else \
        np.ones((width_out, width_in), dtype=bool)
    r_out = rng.random(width_out)
    d_in = rng.dirichlet(np.ones(width_in))
    weights = rng.uniform(0.5, 3.0, size=(width_out, width_in)) if weighted else None
    return r_out, d_in, m0, mask, weights


def welfare_step_by_linprog(r_out, d_in, m0, mask, budget, weights=None):
    """Reference solution via a generic LP solver (independent formulation)."""
    rows, cols = m0.shape
    n = rows * cols
    # Variables: all entries x, then auxiliary |x - m0| bounds a.
    c = np.zeros(2 * n)
    c[:n] = -np.outer(r_out, d_in).ravel()
    a_ub, b_ub = [], []
    w = np.ones_like(m0) if weights is None else weights
    for e in range(n):
        row = np.zeros(2 * n)
        row[e], row[n + e] = 1, -1
        a_ub.append(row)
        b_ub.append(m0.ravel()[e])
        row = np.zeros(2 * n)
        row[e], row[n + e] = -1, -1
        a_ub.append(row)
        b_ub.append(-m0.ravel()[e])
    cost = np.zeros(2 * n)
    cost[n:] = w.ravel()
    a_ub.append(cost)
    b_ub.append(budget)
    a_eq, b_eq = [], []
    for u in range(cols):
        row = np.zeros(2 * n)
        for v in range(rows):
            row[v * cols + u] = 1
        a_eq.append(row)
        b_eq.append(1.0)
    frozen = ~mask.ravel()
    bounds = []
    for e in range(n):
        if frozen[e]:
            bounds.append((m0.ravel()[e], m0.ravel()[e]))
        else:
            bounds.append((0.0, 1.0))
    bounds += [(0.0, 2.0)] * n
    res = linprog(c, A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                  A_eq=np.array(a_eq), b_eq=np.array(b_eq), bounds=bounds,
                  method="highs")
    assert res.status == 0
    return -res.fun


class TestWelfareStep:
    def test_zero_budget_returns_initial(self):
        r_out, d_in, m0, mask, _ = random_step(3, 3)
        res = solve_welfare_step(r_out, d_in, m0, mask, 0.0)
        np.testing.assert_array_equal(res.matrix, m0)
        assert res.objective == pytest.approx(float(r_out @ m0 @ d_in))

    def test_two_layer_contrast_optimum(self):
        # One layer, full budget on the heaviest population's column.
        r_out = np.array([1.0, 0.0])
        d_in = np.array([0.8, 0.1, 0.1])
        m0 = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        mask = np.ones_like(m0, dtype=bool)
        res = solve_welfare_step(r_out, d_in, m0, mask, 1.0)
        assert res.objective == pytest.approx(0.40, abs=1e-9)
        np.testing.assert_allclose(res.matrix[:, 0], [0.5, 0.5], atol=1e-9)

    def test_beats_exhaustive_column_grid(self):
        # Exhaustive search over 0.01-grid column moves can lag by at most
        # one grid cell per column.
        r_out, d_in, m0, mask, _ = random_step(2, 2)
        budget = 0.4
        res = solve_welfare_step(r_out, d_in, m0, mask, budget)
        eta = 0.01
        best = -np.inf
        steps0 = np.arange(0, m0[0, 0] / eta + 1, dtype=int)
        for a_units in range(-int(m0[0, 0] / eta), int(m0[1, 0] / eta) + 1):
            for b_units in range(-int(m0[0, 1] / eta), int(m0[1, 1] / eta) + 1):
                costu = 2 * (abs(a_units) + abs(b_units)) * eta
                if costu > budget:
                    continue
                m = m0 + eta * np.array([[a_units, b_units],
                                         [-a_units, -b_units]], dtype=float)
                if np.any(m < 0) or np.any(m > 1):
                    continue
                best = max(best, float(r_out @ m @ d_in))
        assert res.objective >= best - 1e-12
        assert res.objective <= best + 0.02

    @pytest.mark.parametrize("weighted", [False, True])
    @pytest.mark.parametrize("mask_p", [1.0, 0.6])
    def test_matches_reference_lp(self, weighted, mask_p):
        # The greedy must equal an independently formulated LP to solver
        # tolerance, across shapes, masks, weights, and budget levels.
        for trial in range(25):
            rows = int(rng.integers(2, 5))
            cols = int(rng.integers(1, 5))
            r_out, d_in, m0, mask, weights = random_step(rows, cols, mask_p, weighted)
            budget = float(rng.uniform(0, 2.5))
            res = solve_welfare_step(r_out, d_in, m0, mask, budget, weights)
            ref = welfare_step_by_linprog(r_out, d_in, m0, mask, budget, weights)
            assert res.objective == pytest.approx(ref, abs=1e-7)

    def test_budget_monotone(self):
        r_out, d_in, m0, mask, _ = random_step(3, 3)
        values = [
            solve_welfare_step(r_out, d_in, m0, mask, b).objective
            for b in np.linspace(0, 2, 9)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_output_feasibility(self):
        for _ in range(20):
            r_out, d_in, m0, mask, weights = random_step(3, 2, 0.7, True)
            budget = float(rng.uniform(0, 1.5))
            res = solve_welfare_step(r_out, d_in, m0, mask, budget, weights)
            m = res.matrix
            np.testing.assert_allclose(m.sum(axis=0), 1.0, atol=1e-9)
            assert np.all(m >= -1e-12) and np.all(m <= 1 + 1e-12)
            np.testing.assert_array_equal(m[~mask], m0[~mask])
            assert float((np.abs(m - m0) * weights).sum()) <= budget + 1e-7


class TestMaximinStep:
    def test_single_population_equals_welfare(self):
        r_out, d_in, m0, mask, _ = random_step(3, 3)
        a_in = d_in[None, :]
        res = solve_maximin_step(r_out, a_in, m0, mask, 0.5)
        ref = solve_welfare_step(r_out, d_in, m0, mask, 0.5)
        assert res.objective == pytest.approx(ref.objective, abs=1e-9)

    def test_even_split_optimum_and_uniqueness(self):
        # Every population starts on its own node; the optimum splits the
        # budget evenly and is unique, so the matrix itself is pinned.
        r_out = np.array([1.0, 0.0])
        m0 = np.array([[0.0] * 3, [1.0] * 3])
        mask = np.ones_like(m0, dtype=bool)
        a_in = np.eye(3)
        res = solve_maximin_step(r_out, a_in, m0, mask, 1.0)
        assert res.objective == pytest.approx(1 / 6, abs=1e-7)
        np.testing.assert_allclose(res.matrix[0], [1 / 6] * 3, atol=1e-7)
        np.testing.assert_allclose(res.matrix[1], [5 / 6] * 3, atol=1e-7)

    def test_matches_grid_oracle_two_populations(self):
        for trial in range(5):
            r_out, _, m0, mask, _ = random_step(2, 2)
            a_in = np.eye(2)
            budget = 0.5
            res = solve_maximin_step(r_out, a_in, m0, mask, budget)
            eta = 0.01
            best = -np.inf
            for a_units in range(-int(m0[0, 0] / eta), int(m0[1, 0] / eta) + 1):
                for b_units in range(-int(m0[0, 1] / eta), int(m0[1, 1] / eta) + 1):
                    if 2 * (abs(a_units) + abs(b_units)) * eta > budget:
                        continue
                    m = m0 + eta * np.array([[a_units, b_units],
                                             [-a_units, -b_units]], dtype=float)
                    if np.any(m < 0) or np.any(m > 1):
                        continue
                    best = max(best, min(r_out @ m @ a_in[0], r_out @ m @ a_in[1]))
            assert res.objective >= best - 1e-7
            assert res.objective <= best + 0.02

    def test_budget_zero_is_initial(self):
        r_out, _, m0, mask, _ = random_step(3, 2)
        a_in = np.eye(2)
        res = solve_maximin_step(r_out, a_in, m0, mask, 0.0)
        np.testing.assert_array_equal(res.matrix, m0)

    def test_output_feasibility(self):
        for _ in range(10):
            r_out, _, m0, mask, weights = random_step(3, 3, 0.7, True)
            a_in = np.eye(3)
            budget = float(rng.uniform(0, 1.5))
            res = solve_maximin_step(r_out, a_in, m0, mask, budget, weights)
            m = res.matrix
            np.testing.assert_allclose(m.sum(axis=0), 1.0, atol=1e-9)
            np.testing.assert_array_equal(m[~mask], m0[~mask])
            assert float((np.abs(m - m0) * weights).sum()) <= budget + 1e-7

    def test_budget_monotone(self):
        r_out, _, m0, mask, _ = random_step(2, 2)
        a_in = np.eye(2)
        values = [
            solve_maximin_step(r_out, a_in, m0, mask, b).objective
            for b in np.linspace(0, 2, 9)
        ]
        assert all(b >= a - 1e-7 for a, b in zip(values, values[1:]))


class TestCostModel:
    def test_self_cost_zero(self):
        m = rng.random((3, 3))
        cm = po.CostModel("l1")
        assert po.cost_model_evaluate(cm, m, m) == 0.0

    def test_weighted_scaling(self):
        m0 = np.array([[0.0], [1.0]])
        m = np.array([[0.5], [0.5]])
        cm = po.CostModel("weighted_l1", (np.full((2, 1), 2.0),))
        assert po.cost_model_evaluate(cm, m, m0) == pytest.approx(2.0)

    def test_weighted_dominates_scaled_l1(self):
        weights = rng.uniform(0.5, 3.0, size=(3, 3))
        cm = po.CostModel("weighted_l1", (weights,))
        for _ in range(20):
            a, b = rng.random((3, 3)), rng.random((3, 3))
            assert po.cost_model_evaluate(cm, a, b) >= weights.min() * po.cost(a, b) - 1e-12

    def test_nonpositive_weight_rejected(self):
        with pytest.raises(ValueError):
            po.CostModel("weighted_l1", (np.zeros((2, 2)),))
