#!/usr/bin/env python3
"""Encoding vertex cover as a pipeline planning problem.

Each graph vertex becomes a long chain of copies whose hops carry a small
probability `step`, the rest leaking to an absorbing dead branch; each graph
edge becomes a starting population split between its two endpoint chains.
The budget is exactly what it costs to raise `cover_size` chains by `step`
per hop.  Lifting the chains of a true vertex cover doubles every hop on
them, so every starting edge reaches the reward through at least one lifted
chain: the worst population clears twice the acceptance threshold.  The
instance is a witness that wide pipelines inherit covering hardness; only
the certificate direction is computed here.
"""

from fractions import Fraction

import pipeopt as po

triangle = [(0, 1), (0, 2), (1, 2)]
instance, meta = po.cover_reduction_instance(triangle, cover_size=2, step=0.25)
print("layers:", instance.layer_sizes)
print("budget:", meta["budget"], " threshold:", meta["threshold"])
print("valid:", po.validate_instance(instance) == [])

plan, value = po.verify_cover_plan(instance, meta, cover=[0, 1])
print("\ncover {0, 1}:")
print("  plan cost:", plan.total_cost(instance), "(budget spent exactly)")
print("  exact maximin value:", value, "=", float(value))
print("  certified >= 2 * threshold:", value >= 2 * meta["threshold_exact"])
print("  gap over 2T (uncovered chain residue):",
      float(value - 2 * meta["threshold_exact"]))

# A non-cover leaves some starting edge dark and is rejected outright.
try:
    po.verify_cover_plan(instance, meta, cover=[0])
except ValueError as exc:
    print("\ncover {0} rejected:", exc)

# The exact value decomposes into the lifted and untouched chain products.
lifted = Fraction(1, 2) ** 15
untouched = Fraction(1, 4) ** 15
assert value == lifted / 2 + untouched / 2
print("\nvalue decomposition: (2*step)^15 / 2 + step^15 / 2")
