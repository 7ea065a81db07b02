#!/usr/bin/env python3
"""Tour of the data model: instances, plans, evaluation, feasibility.

A pipeline instance is a stack of column-stochastic matrices between layers
of nodes, a reward per final-layer node, a starting distribution, and a
budget.  An intervention plan swaps in new matrices; it is feasible when it
only touches malleable edges, keeps columns stochastic, and pays for the
mass it moves (one unit of budget per unit of absolute change).
"""

import numpy as np

import pipeopt as po

# A three-layer pipeline: 2 starting populations, 3 mid nodes, 2 outcomes.
instance = po.make_instance(
    layer_sizes=(2, 3, 2),
    initial_matrices=(
        np.array([[0.6, 0.1],
                  [0.3, 0.2],
                  [0.1, 0.7]]),
        np.array([[0.8, 0.5, 0.1],
                  [0.2, 0.5, 0.9]]),
    ),
    rewards=(1.0, 0.2),
    initial_distribution=(0.7, 0.3),
    budget=0.5,
)
print("instance valid:", po.validate_instance(instance) == [])

baseline = po.zero_budget_plan(instance)
rewards = po.evaluate_population_rewards(instance, baseline)
print("per-population expected rewards:", rewards.round(4))
print("welfare (average):", round(po.welfare(instance, baseline), 4))
print("worst population:", round(po.maximin_value(instance, baseline), 4))

# Intervene: population 1 is worse off; shift some of its mid-layer mass
# toward the strong branch, paying 2x the shift.
matrices = [m.copy() for m in instance.initial_matrices]
matrices[0][0, 1] += 0.2   # route population 1 toward mid node 0
matrices[0][2, 1] -= 0.2
plan = po.InterventionPlan(matrices=tuple(matrices), budget_split=(0.4, 0.0))
print("\nplan feasible:", po.plan_violations(instance, plan) == [])
print("new rewards:", po.evaluate_population_rewards(instance, plan).round(4))
print("plan cost:", plan.total_cost(instance))

# Mixtures model randomized interventions; each realization must be feasible
# on its own.
mixture = po.MixedPlan(support=((0.5, baseline), (0.5, plan)))
avg, worst = po.evaluate_mixed(instance, mixture)
print("\nmixture average rewards:", avg.round(4), "worst:", round(worst, 4))
