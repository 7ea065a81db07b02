"""Single-layer subproblems: the welfare step and the maximin step.

Both steps optimize one transition matrix while everything downstream is
frozen into a value vector `r_out` (the expected continuation reward of each
target node).  The welfare step maximizes r_out^T M d_in; the maximin step
maximizes the worst population's value.  Feasibility is a per-entry box, a
column-stochasticity equality, frozen non-malleable entries, and a budget on
the (possibly weighted) total mass moved.

The welfare step is solved by an exact greedy rather than a generic LP
solver: any feasible matrix decomposes into donor->recipient mass moves
inside columns, each unit of budget spent on a move has a fixed gain rate,
and donor capacities are independent, so filling the best rates first is
optimal (a fractional knapsack).  The maximin step genuinely couples
populations and goes through an LP (HiGHS via scipy).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .model import CostModel

# LPs are solved to a looser tolerance than the model's 1e-9; matrices are
# repaired columnwise before leaving this module.
LP_TOL = 1e-7


@dataclass
class LayerStepResult:
    matrix: np.ndarray
    objective: float
    lp_status: str  # "OPTIMAL" | "INFEASIBLE"


def cost_model_evaluate(cost_model: CostModel, m, m0, layer: int = 0) -> float:
    """Cost of transforming m0 into m under the given model (layer selects weights)."""
    m = np.asarray(m, dtype=float)
    m0 = np.asarray(m0, dtype=float)
    if m.shape != m0.shape:
        raise ValueError(f"shape mismatch {m.shape} vs {m0.shape}")
    return cost_model.layer_cost(layer, m, m0)


class WelfareStepSolver:
    """Reusable exact solver for max r_out^T M d_in over feasible M.

    Construction cost depends only on (r_out, m0, mask, weights); `solve`
    and `value` can then be called for many (d_in, budget) pairs, which is
    what the dynamic programs do.

    Unit costs admit the greedy: every unit of budget moves half a unit of
    mass, so gain per budget and gain per mass rank moves identically and
    each donor routes everything to the best malleable target.  Per-edge
    weights break that alignment (a donor may prefer a cheap mediocre target
    when budget binds but a pricey good one when supply binds), so the
    weighted variant goes through an LP.
    """

    def __init__(self, r_out, m0, mask, weights=None):
        self.r_out = np.asarray(r_out, dtype=float)
        self.m0 = np.asarray(m0, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)
        if self.m0.shape != self.mask.shape:
            raise ValueError("mask shape does not match matrix")
        if self.r_out.shape != (self.m0.shape[0],):
            raise ValueError("r_out length does not match target layer size")
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        if self.weights is not None and self.weights.shape != self.m0.shape:
            raise ValueError("weight shape does not match matrix")
        # Base column values r_out^T m0[:, u].
        self.col_base = self.r_out @ self.m0
        if self.weights is None:
            # Per-column move segments sorted by decreasing gain rate.
            # Scaling rates by d_in[u] preserves the within-column order, so
            # the per-column sort is reusable across inputs.
            self._segments = [
                self._column_segments(u) for u in range(self.m0.shape[1])
            ]

    def _column_segments(self, u):
        """List of (rate, budget_capacity, donor, recipient) for column u."""
        free = np.flatnonzero(self.mask[:, u])
        if len(free) <= 1:
            # A single malleable entry is pinned by the column-sum constraint.
            return []
        r = self.r_out
        best = free[int(np.argmax(r[free]))]
        segs = []
        for v in free:
            gain = r[best] - r[v]
            if v == best or gain <= 0 or self.m0[v, u] <= 0:
                continue
            segs.append((gain / 2.0, 2.0 * self.m0[v, u], int(v), int(best)))
        segs.sort(key=lambda s: (-s[0], s[2]))
        return segs

    def _walk(self, d_in, budget):
        """Yield (u, seg, budget_taken) in global greedy order."""
        if budget <= 0:
            return
        heap = []
        for u, segs in enumerate(self._segments):
            if segs and d_in[u] > 0:
                heap.append((-segs[0][0] * d_in[u], u, 0))
        heapq.heapify(heap)
        remaining = budget
        while heap and remaining > 0:
            neg_rate, u, pos = heapq.heappop(heap)
            seg = self._segments[u][pos]
            take = min(seg[1], remaining)
            yield u, seg, take
            remaining -= take
            if pos + 1 < len(self._segments[u]):
                nxt = self._segments[u][pos + 1]
                heapq.heappush(heap, (-nxt[0] * d_in[u], u, pos + 1))

    def value(self, d_in, budget) -> float:
        """Optimal objective only; no matrix is materialized (unit costs)."""
        d_in = np.asarray(d_in, dtype=float)
        if self.weights is not None:
            return self.solve(d_in, budget).objective
        obj = float(self.col_base @ d_in)
        for u, seg, take in self._walk(d_in, budget):
            obj += seg[0] * d_in[u] * take
        return obj

    def solve(self, d_in, budget) -> LayerStepResult:
        d_in = np.asarray(d_in, dtype=float)
        if budget < 0:
            raise ValueError(f"budget must be non-negative, got {budget}")
        if self.weights is not None:
            return self._solve_weighted_lp(d_in, budget)
        m = self.m0.copy()
        for u, seg, take in self._walk(d_in, budget):
            rate, cap, donor, recipient = seg
            factor = cap / self.m0[donor, u]  # cost per unit of mass moved
            mass = take / factor
            m[donor, u] -= mass
            m[recipient, u] += mass
        obj = float(self.r_out @ m @ d_in)
        return LayerStepResult(matrix=m, objective=obj, lp_status="OPTIMAL")

    def _solve_weighted_lp(self, d_in, budget) -> LayerStepResult:
        res = _weighted_welfare_lp(
            self.r_out, d_in, self.m0, self.mask, budget, self.weights
        )
        return res


def _weighted_welfare_lp(r_out, d_in, m0, mask, budget, weights) -> LayerStepResult:
    """Welfare step under per-edge costs, as an LP over the malleable entries."""
    col_free = [np.flatnonzero(mask[:, u]) for u in range(m0.shape[1])]
    entries = [(int(v), u) for u in range(m0.shape[1]) if len(col_free[u]) >= 2
               for v in col_free[u]]
    n = len(entries)
    if n == 0 or budget <= 0:
        return LayerStepResult(matrix=m0.copy(),
                               objective=float(r_out @ m0 @ d_in),
                               lp_status="OPTIMAL")
    c = np.zeros(2 * n)
    w_e = np.empty(n)
    m0_e = np.empty(n)
    for e, (v, u) in enumerate(entries):
        c[e] = -r_out[v] * d_in[u]
        w_e[e] = weights[v, u]
        m0_e[e] = m0[v, u]
    rows, rhs = [], []
    for e in range(n):
        row = np.zeros(2 * n)
        row[e], row[n + e] = 1.0, -1.0
        rows.append(row)
        rhs.append(m0_e[e])
        row = np.zeros(2 * n)
        row[e], row[n + e] = -1.0, -1.0
        rows.append(row)
        rhs.append(-m0_e[e])
    cost_row = np.zeros(2 * n)
    cost_row[n:] = w_e
    rows.append(cost_row)
    rhs.append(budget)
    eq_rows, eq_rhs = [], []
    for u in range(m0.shape[1]):
        if len(col_free[u]) < 2:
            continue
        row = np.zeros(2 * n)
        for e, (v, uu) in enumerate(entries):
            if uu == u:
                row[e] = 1.0
        eq_rows.append(row)
        eq_rhs.append(1.0 - m0[~mask[:, u], u].sum())
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                  A_eq=np.array(eq_rows), b_eq=np.array(eq_rhs),
                  bounds=[(0.0, 1.0)] * n + [(0.0, 2.0)] * n, method="highs")
    if res.status != 0:
        raise RuntimeError(f"weighted welfare step LP failed: {res.message}")
    frozen = m0.copy()
    for v, u in entries:
        frozen[v, u] = 0.0
    frozen_value = float(r_out @ frozen @ d_in)
    m = m0.copy()
    for e, (v, u) in enumerate(entries):
        m[v, u] = res.x[e]
    m = _repair_columns(m, m0, mask, weights, budget)
    return LayerStepResult(matrix=m, objective=float(-res.fun) + frozen_value,
                           lp_status="OPTIMAL")


def solve_welfare_step(r_out, d_in, m0, mask, budget_step, cost_weights=None) -> LayerStepResult:
    """One-shot welfare step; see WelfareStepSolver for the reusable form."""
    solver = WelfareStepSolver(r_out, m0, mask, weights=cost_weights)
    return solver.solve(d_in, budget_step)


def _repair_columns(m, m0, mask, weights, budget):
    """Restore exact stochasticity and budget feasibility after an LP solve.

    Free (malleable) entries are rescaled so each column sums to exactly 1;
    frozen entries are copied bitwise from m0.  If the rounded solution
    overspends, all deltas shrink toward m0 multiplicatively, which preserves
    stochasticity and the mask.
    """
    m = np.clip(m, 0.0, None)
    out = m0.copy()
    for u in range(m0.shape[1]):
        free = np.flatnonzero(mask[:, u])
        if len(free) <= 1:
            continue
        target = 1.0 - out[~mask[:, u], u].sum() if (~mask[:, u]).any() else 1.0
        s = m[free, u].sum()
        if s <= 0:
            out[free, u] = target / len(free)
        else:
            out[free, u] = m[free, u] * (target / s)
    diff = np.abs(out - m0)
    c = float(diff.sum() if weights is None else (weights * diff).sum())
    if c > budget and c > 0:
        out = m0 + (out - m0) * (budget / c)
    return out


def solve_maximin_step(r_out, a_in, m0, mask, budget_step, cost_weights=None,
                       polish: bool = True) -> LayerStepResult:
    """Maximize min_j r_out^T M a_in[j] over feasible M (epigraph LP).

    a_in is a (populations, source-layer-size) array of per-population input
    distributions.  With `polish` a second solve, at the optimal objective,
    maximizes the summed population values among optima; this removes
    gratuitous reward damage that an arbitrary optimal vertex might carry and
    keeps results deterministic.
    """
    r_out = np.asarray(r_out, dtype=float)
    a_in = np.atleast_2d(np.asarray(a_in, dtype=float))
    m0 = np.asarray(m0, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if budget_step < 0:
        raise ValueError(f"budget must be non-negative, got {budget_step}")
    pops = a_in.shape[0]
    if pops == 1:
        # min over one population is the welfare step.
        res = solve_welfare_step(r_out, a_in[0], m0, mask, budget_step, cost_weights)
        return res

    weights = None if cost_weights is None else np.asarray(cost_weights, dtype=float)
    # Entries that can actually vary: malleable, in a column with >= 2 malleable.
    col_free = [np.flatnonzero(mask[:, u]) for u in range(m0.shape[1])]
    entries = [(int(v), u) for u in range(m0.shape[1]) if len(col_free[u]) >= 2
               for v in col_free[u]]
    n = len(entries)
    base_rewards = (r_out @ m0) @ a_in.T  # value per population if M = m0
    if n == 0 or budget_step == 0:
        return LayerStepResult(matrix=m0.copy(), objective=float(base_rewards.min()),
                               lp_status="OPTIMAL")

    ncols = m0.shape[1]
    # coef[j, e] = r_out[v] * a_in[j, u] for entry e = (v, u)
    coef = np.empty((pops, n))
    w_e = np.empty(n)
    m0_e = np.empty(n)
    for e, (v, u) in enumerate(entries):
        coef[:, e] = r_out[v] * a_in[:, u]
        w_e[e] = 1.0 if weights is None else weights[v, u]
        m0_e[e] = m0[v, u]
    # frozen_j: contribution of all non-variable entries.
    frozen = m0.copy()
    for v, u in entries:
        frozen[v, u] = 0.0
    frozen_j = (r_out @ frozen) @ a_in.T

    nvar = 2 * n + 1  # x, a, v
    iv = 2 * n
    c = np.zeros(nvar)
    c[iv] = -1.0
    rows, rhs = [], []
    for e in range(n):
        row = np.zeros(nvar)
        row[e], row[n + e] = 1.0, -1.0
        rows.append(row)
        rhs.append(m0_e[e])
        row = np.zeros(nvar)
        row[e], row[n + e] = -1.0, -1.0
        rows.append(row)
        rhs.append(-m0_e[e])
    cost_row = np.zeros(nvar)
    cost_row[n:2 * n] = w_e
    rows.append(cost_row)
    rhs.append(budget_step)
    for j in range(pops):
        row = np.zeros(nvar)
        row[:n] = -coef[j]
        row[iv] = 1.0
        rows.append(row)
        rhs.append(frozen_j[j])
    a_ub = np.array(rows)
    b_ub = np.array(rhs)

    eq_rows, eq_rhs = [], []
    for u in range(ncols):
        if len(col_free[u]) < 2:
            continue
        row = np.zeros(nvar)
        for e, (v, uu) in enumerate(entries):
            if uu == u:
                row[e] = 1.0
        eq_rows.append(row)
        eq_rhs.append(1.0 - m0[~mask[:, u], u].sum())
    a_eq = np.array(eq_rows)
    b_eq = np.array(eq_rhs)

    bounds = [(0.0, 1.0)] * n + [(0.0, 2.0)] * n + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds,
                  method="highs")
    if res.status != 0:
        raise RuntimeError(f"maximin step LP failed: {res.message}")
    v_star = float(res.x[iv])
    x = res.x[:n]

    if polish:
        # Re-solve at the optimal objective, maximizing total population value.
        rows2 = [a_ub[r, : 2 * n] for r in range(2 * n + 1)]
        rhs2 = list(b_ub[: 2 * n + 1])
        for j in range(pops):
            row = np.zeros(2 * n)
            row[:n] = -coef[j]
            rows2.append(row)
            rhs2.append(frozen_j[j] - (v_star - 1e-9))
        c2 = np.zeros(2 * n)
        c2[:n] = -coef.sum(axis=0)
        res2 = linprog(c2, A_ub=np.array(rows2), b_ub=np.array(rhs2),
                       A_eq=a_eq[:, : 2 * n], b_eq=b_eq,
                       bounds=[(0.0, 1.0)] * n + [(0.0, 2.0)] * n, method="highs")
        if res2.status == 0:
            x = res2.x[:n]

    m = m0.copy()
    for e, (v, u) in enumerate(entries):
        m[v, u] = x[e]
    m = _repair_columns(m, m0, mask, weights, budget_step)
    return LayerStepResult(matrix=m, objective=v_star, lp_status="OPTIMAL")
