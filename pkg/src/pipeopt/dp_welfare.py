"""Backward dynamic program for approximate social-welfare maximization.

Cells are (layer, remaining-budget grid point, layer-distribution net point).
Each cell stores the best achievable continuation value vector (the reward
vector pulled back through the optimal downstream matrices) plus a back
pointer.  Scanning a cell enumerates every (next budget, next distribution)
guess, prices the connecting transition with the exact single-layer welfare
step, and keeps the argmax; ties break toward the lowest budget index, then
the lowest net index, so results are reproducible.

Guessed continuation cells frequently share an identical value vector, in
which case the connecting step has an identical optimum; such guesses are
grouped and priced once.  The grouping changes nothing about which cell wins
(the group representative is the member the tie-break would select).

Everything below layer 1 is independent of the starting distribution, so one
built WelfareDP serves many starting distributions; the best-response loop
of the randomized solver leans on this.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .errors import CapacityError
from .layerlp import WelfareStepSolver
from .model import (
    Instance,
    InterventionPlan,
    SolveReport,
    evaluate_population_rewards,
)
from .netgrid import build_budget_grid, build_simplex_net, simplex_grid_size

DEFAULT_CELLS_CAP = 10_000_000
_GROUP_DECIMALS = 12


def welfare_dp_cell_count(instance: Instance, epsilon: float) -> int:
    """Predicted memo size without building anything."""
    grid_points = int(math.floor(instance.budget / epsilon + 1e-9)) + 1
    cells = 0
    for t in range(1, instance.depth - 1):
        d = instance.layer_sizes[t]
        units = 1 if d == 1 else int(math.ceil(2 * (d - 1) / epsilon - 1e-9))
        cells += simplex_grid_size(d, units) * grid_points
    return max(cells, grid_points)


class WelfareDP:
    """Memoized solver; build once per (instance, epsilon), query many starts."""

    def __init__(self, instance: Instance, epsilon: float,
                 cells_cap: int = DEFAULT_CELLS_CAP,
                 net_cap: int = DEFAULT_CELLS_CAP):
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.instance = instance
        self.epsilon = float(epsilon)
        self.grid = build_budget_grid(instance.budget, epsilon)
        predicted = welfare_dp_cell_count(instance, epsilon)
        if predicted > cells_cap:
            raise CapacityError(
                f"welfare DP would hold {predicted} cells (cap {cells_cap})"
            )
        self._nets_by_dim = {}
        self.nets = {}
        for t in range(1, instance.depth - 1):
            d = instance.layer_sizes[t]
            if d not in self._nets_by_dim:
                self._nets_by_dim[d] = build_simplex_net(d, epsilon, cap=net_cap)
            self.nets[t] = self._nets_by_dim[d]
        self.cells_built = 0
        self._rvec = {}     # layer -> (cells, s_t) continuation value vectors
        self._choice = {}   # layer -> (cells, 2) [next budget idx, next flat cell]
        self._groups = {}   # layer -> per budget idx: [(rep_cell, value vector)]
        self._solver_cache = {}
        self._build()

    # -- internals ---------------------------------------------------------

    def _solver_for(self, t: int, key, r_out) -> WelfareStepSolver:
        k = (t, key)
        s = self._solver_cache.get(k)
        if s is None:
            s = WelfareStepSolver(
                r_out,
                self.instance.initial_matrices[t],
                self.instance.malleable[t],
                self.instance.cost_model.layer_weights(t),
            )
            self._solver_cache[k] = s
        return s

    def _group_layer(self, t: int):
        """Group layer-t cells with identical value vectors, per budget index."""
        net, g = self.nets[t], len(self.grid)
        rvec = self._rvec[t]
        per_budget = []
        for bi in range(g):
            seen, reps = {}, []
            for ni in range(len(net)):
                cell = ni * g + bi
                key = rvec[cell].round(_GROUP_DECIMALS).tobytes()
                if key not in seen:
                    seen[key] = cell
                    reps.append((cell, rvec[cell]))
            per_budget.append(reps)
        self._groups[t] = per_budget

    def _scan(self, t: int, d_in, bi: int):
        """Best (value, next budget idx, next cell) for one cell at layer t."""
        inst = self.instance
        if t == inst.depth - 2:
            # Continuation is the identity with no budget reserved downstream,
            # so the whole remaining budget prices this transition.
            solver = self._solver_for(t, "terminal", inst.rewards)
            return solver.value(d_in, self.grid.value(bi)), 0, -1
        best, best_b, best_cell = -math.inf, -1, -1
        for b_next in range(bi + 1):
            step_budget = self.grid.value(bi) - self.grid.value(b_next)
            for rep_cell, r_out in self._groups[t + 1][b_next]:
                solver = self._solver_for(t, rep_cell, r_out)
                val = solver.value(d_in, step_budget)
                if val > best:
                    best, best_b, best_cell = val, b_next, rep_cell
        return best, best_b, best_cell

    def _step_matrix(self, t: int, d_in, bi: int, b_next: int, next_cell: int):
        inst = self.instance
        if t == inst.depth - 2:
            solver = self._solver_for(t, "terminal", inst.rewards)
        else:
            r_out = self._rvec[t + 1][next_cell]
            solver = self._solver_for(t, next_cell, r_out)
        return solver.solve(d_in, self.grid.value(bi) - self.grid.value(b_next)).matrix

    def _build(self):
        inst = self.instance
        g = len(self.grid)
        for t in range(inst.depth - 2, 0, -1):
            net = self.nets[t]
            n_cells = len(net) * g
            rvec = np.empty((n_cells, inst.layer_sizes[t]))
            choice = np.empty((n_cells, 2), dtype=np.int64)
            for ni in range(len(net)):
                d_in = net.points[ni]
                for bi in range(g):
                    cell = ni * g + bi
                    _, b_next, next_cell = self._scan(t, d_in, bi)
                    step = self._step_matrix(t, d_in, bi, b_next, next_cell)
                    if t == inst.depth - 2:
                        rvec[cell] = inst.rewards @ step
                    else:
                        rvec[cell] = self._rvec[t + 1][next_cell] @ step
                    choice[cell] = (b_next, next_cell)
            self._rvec[t] = rvec
            self._choice[t] = choice
            self.cells_built += n_cells
            self._group_layer(t)

    # -- queries -----------------------------------------------------------

    def solve_for(self, d1) -> tuple:
        """(memo chain value, reconstructed plan) for a starting distribution.

        d1 is used exactly (it is never rounded to the net); zero entries are
        allowed here even though instances require strictly positive starts,
        because best-response queries feed arbitrary adversary distributions.
        """
        d1 = np.asarray(d1, dtype=float)
        inst = self.instance
        top = len(self.grid) - 1
        value, b_next, next_cell = self._scan(0, d1, top)
        mats, split = [], []
        t, d_in, bi = 0, d1, top
        while True:
            step = self._step_matrix(t, d_in, bi, b_next, next_cell)
            mats.append(step)
            split.append(self.grid.value(bi) - self.grid.value(b_next))
            if t == inst.depth - 2:
                break
            net = self.nets[t + 1]
            d_in = net.points[next_cell // len(self.grid)]
            t, bi = t + 1, b_next
            b_next, next_cell = self._choice[t][next_cell]
        plan = InterventionPlan(matrices=tuple(mats), budget_split=tuple(split))
        return float(value), plan

    def meta(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "budget_grid_points": len(self.grid),
            "budget_grid_top": self.grid.top,
            "net_sizes": {t: len(n) for t, n in self.nets.items()},
            "cells": self.cells_built,
        }


def solve_social_welfare(instance: Instance, epsilon: float,
                         cells_cap: int = DEFAULT_CELLS_CAP) -> tuple:
    """Approximately welfare-optimal intervention.

    Returns (SolveReport, InterventionPlan).  The reported objective is the
    plan's exactly re-evaluated welfare, never a memo value; the guarantee is
    objective >= OPT - 3*(depth-1)*epsilon*max(rewards).
    """
    t0 = time.perf_counter()
    dp = WelfareDP(instance, epsilon, cells_cap=cells_cap)
    _, plan = dp.solve_for(instance.initial_distribution)
    rewards = evaluate_population_rewards(instance, plan)
    report = SolveReport(
        objective_value=float(rewards @ instance.initial_distribution),
        per_population_rewards=rewards,
        budget_used=plan.total_cost(instance),
        solver_meta={**dp.meta(), "wall_ms": (time.perf_counter() - t0) * 1e3},
    )
    return report, plan


def best_response(instance: Instance, d1_override, epsilon: float,
                  dp: WelfareDP | None = None) -> tuple:
    """Welfare maximization against an arbitrary starting distribution.

    Returns (exact welfare under d1_override, plan).  Passing a prebuilt
    WelfareDP skips the memo construction; the memo is independent of the
    starting distribution.
    """
    if dp is None:
        dp = WelfareDP(instance, epsilon)
    _, plan = dp.solve_for(d1_override)
    value = float(
        evaluate_population_rewards(instance, plan) @ np.asarray(d1_override, float)
    )
    return value, plan
