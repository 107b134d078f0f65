"""A walk through the outer and inner sum-rate bounds.

Run with ``python demos/01_bounds_tour.py``. Takes a few seconds.
"""

import numpy as np

from semantic_mt.inner_bounds import inner_bound, rate_allocation
from semantic_mt.outer_bounds import (
    DistortionBudget,
    conditional_rd_bound,
    error_prob_bound,
    fano_arm,
    outer_bound_closed,
    shannon_lower_bound,
)
from semantic_mt.source import binary_symmetric_spec, example1_spec, semantic_entropy

# %% The source: three labels, two agents each seeing a noisy 1-D view.
spec = example1_spec()
H = semantic_entropy(spec)
print(f"labels M={spec.M}, agents L={spec.L}, H(S) = {H:.4f} bits")

# %% With no semantic requirement (D_S = H) the bound reduces to the
# conditional rate-distortion function. The SLB sits below it.
for dx in (0.02, 0.1, 0.3):
    b = DistortionBudget(H, (dx, dx))
    print(f"D_X={dx:<5} outer={outer_bound_closed(b, spec).rate:.4f} "
          f"conditional={conditional_rd_bound((dx, dx), spec):.4f} slb={shannon_lower_bound((dx, dx), spec):.4f}")

# %% Below the Fano arm every bit of D_S costs a bit of rate. For this source
# the arm drops under H(S) only for very small observation budgets; past the
# arm the semantic budget is free and the rate flattens.
dx = (1e-4, 1e-4)
arm = fano_arm(error_prob_bound(sum(dx), spec), spec)
print(f"\nFano arm at sum D_X={sum(dx)}: {arm:.4f} bits")
for ds in np.linspace(0, H, 6):
    r = outer_bound_closed(DistortionBudget(ds, dx), spec)
    print(f"D_S={ds:.3f} rate={r.rate:.4f} region={r.region}")

# %% The inner bound needs binary labels. Two-label source, sigma^2 = 0.22.
bspec = binary_symmetric_spec(0.22)
budget = DistortionBudget(0.05, (0.2, 0.2))
inner = inner_bound(budget, bspec)
outer = outer_bound_closed(budget, bspec)
print(f"\nbinary source: outer={outer.rate:.4f} <= inner={inner.rate:.4f}, test channel d={inner.d}")

# %% Sum rate is fixed on the dominant face; only the split between agents moves.
face = rate_allocation(budget, bspec, sweep_points=5)
for R1, R2 in face:
    print(f"R1={R1:.4f} R2={R2:.4f} sum={R1 + R2:.4f}")
