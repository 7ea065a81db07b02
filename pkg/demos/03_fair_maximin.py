#!/usr/bin/env python3
"""Fairness-first planning and what it costs in welfare.

The maximin solver lifts the worst-off starting population instead of the
average.  On the contrast network the welfare-optimal plan pours the budget
into the majority while the fair plan spreads it evenly, so the ratio of the
two welfares (the price of fairness) approaches the number of populations.
"""

import pipeopt as po

instance = po.fairness_price_instance(3, 0.01, 1.0)

welfare_report, welfare_plan = po.solve_social_welfare(instance, 0.05)
fair_report, fair_plan = po.solve_expost_maximin(instance, 0.05)

print("welfare-optimal plan:")
print("  welfare:", round(welfare_report.objective_value, 4))
print("  worst population:", round(po.maximin_value(instance, welfare_plan), 4))
print("fair (maximin) plan:")
print("  welfare:", round(po.welfare(instance, fair_plan), 4))
print("  worst population:", round(fair_report.objective_value, 4))

lower, upper, cert = po.price_of_fairness_bracket(instance, 0.05)
print("\nprice of fairness:")
print("  empirical ratio:", round(cert.empirical_ratio, 3))
print("  analytic worst case:", upper)
print("  conservative lower bound:", round(lower, 3))

# With budget >= 2 * width everyone can be routed to the top reward and the
# tension disappears.
saturated = po.fairness_price_instance(3, 0.01, 6.0)
_, upper_sat, cert_sat = po.price_of_fairness_bracket(saturated, 0.05)
print("\nsaturated budget:", "ratio", round(cert_sat.empirical_ratio, 6),
      "bracket upper", upper_sat)

# Analytic floors that every exact fair optimum satisfies (all edges must
# be malleable): value and welfare at least min(1, B/2w) * top reward, and
# welfare never below the do-nothing welfare.
print("\nfair-plan floor:", round(po.maximin_lower_bound(instance), 4))
checks = po.check_plan_bounds(instance, fair_plan)
for c in checks:
    flag = "ok" if c.passed else "FAIL"
    print(f"  [{flag}] {c.name} (applicable={c.applicable})")
