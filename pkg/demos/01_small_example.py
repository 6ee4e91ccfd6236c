# %% [markdown]
# # Dissipating a 5x5 system
#
# The symmetric part of A has two positive eigenvalues, so x' = Ax is not
# dissipative. We check that a feedback through B can fix this, build a few
# feedbacks in closed form, and then look for the smallest one.

# %%
import numpy as np

from dissipator import bench, constructors, fov, outer_solve
from dissipator.model import is_dissipatable, saddle_inertia

pair = bench.example1()
print(np.linalg.eigvalsh((pair.A + pair.A.T) / 2))

# %% [markdown]
# Feasibility only depends on A + A^T restricted to ker(B^T). The saddle
# matrix gives the same answer through its inertia.

# %%
rep = is_dissipatable(pair)
print(rep.feasible, rep.margin)
print(saddle_inertia(pair))

# %% [markdown]
# ## Closed-form feedbacks
#
# These are strictly dissipating but not small.

# %%
spec = constructors.spectral_feedback(pair)
block = constructors.block_parametrized_feedback(pair, constructors.random_block_H2(pair, seed=3))
for res in (spec, block):
    print(f"{res.method:10s} ||K||_F = {res.norm_fro:.4f}  lambda_max = {res.lambda_max:.4f}")

# scaling the spectral feedback down to the boundary
weak = constructors.shrink_to_weak(pair, spec.K)
print("shrunk:", weak.norm_fro, weak.classification.value)

# %% [markdown]
# ## Minimal weak feedback
#
# GL(2) drives the two rightmost eigenvalues of Sym(A - BK) to zero together,
# which gives a noticeably smaller K than shrinking.

# %%
res, trace = outer_solve(pair, m=2)
print(res.status, res.norm_fro, res.norm_2)
print(res.eigenvalues)
for it in trace.iterates[-4:]:
    print(f"eps={it['eps']:.6f} f={it['f']:.3e}")

# %% [markdown]
# With two zero eigenvalues the field of values of A - BK touches the
# imaginary axis along a segment rather than at a point.

# %%
seg = fov.flat_segment(pair, res.K)
b = fov.fov_boundary(pair.closed_loop(res.K))
print("sigma =", seg.sigma, "multiplicity =", seg.multiplicity)
print("abscissa =", b.abscissa)
# a vertical segment [-i sigma, i sigma] has support sigma*|sin(theta)| in
# direction theta, so support/sin(theta) tends to sigma as theta -> 0
print(b.support[1:4] / np.sin(b.theta[1:4]))
