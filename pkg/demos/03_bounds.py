"""
How wide is wide enough?
========================

Compare the Gaussian fan-in width requirement with the SUO conditions and
look at the certified failure probability as the width grows.
"""

import math

from orthokernel import builtin, normalize
from orthokernel.bounds import (
    BoundInputs,
    daniely_min_width,
    implied_delta,
    mean_bias_bound,
    suo_conditions,
    theorem_delta,
    theorem_radius,
)

C = normalize(builtin("tanh")).sup_bound_C
eps, delta = 0.25, 0.1
print(f"C = {C:.6f}")
print(f"Gaussian fan-in: m >= {daniely_min_width(C, eps, delta):.1f} for eps={eps}, delta={delta}")

# For square SUO layers the second width condition pins eps from below.
print("\n   n   smallest eps   theorem delta   bias bound")
for n in (64, 256, 1024, 4096, 16384):
    eps_n = 8 * math.sqrt(2) * C**2 * n**0.75 / (n - 1)
    print(f"{n:5d}   {eps_n:11.4f}   {theorem_delta(n, n):13.3e}   {mean_bias_bound(n, n, C):10.4f}")

n = 4096
cond = suo_conditions(BoundInputs(n, n, C, 2.0, 0.05))
print(f"\nn={n}, eps=2: condition 1 {cond.cond1_lhs:.1f} >= {cond.cond1_rhs:.2f}, "
      f"condition 2 {cond.cond2_lhs:.3f} >= {cond.cond2_rhs:.3f}")
print("radius used by the guarantee:", theorem_radius(n, n, C))

# Past the mean bias the concentration tail decays like exp(-r^2 m / C^4).
for eps in (0.5, 1.0, 1.5, 2.0):
    print(f"eps={eps}: certified delta {implied_delta(eps, n, n, C):.3e}")
