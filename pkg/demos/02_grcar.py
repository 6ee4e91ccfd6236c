# %% [markdown]
# # Shifted Grcar matrices
#
# A = -grcar(n) - shift*I has a handful of positive eigenvalues in its
# symmetric part. B is built from their eigenvectors, so q equals that count.

# %%
import time

from dissipator import bench, outer_solve
from dissipator.gradient_flow import limit_structure_check

for shift, n, m in bench.TABLE3_ROWS[:8]:
    pair = bench.grcar_pair(n, shift, seed=1)
    t = time.perf_counter()
    res, trace = outer_solve(pair, m=m, variant="plus")
    ls = limit_structure_check(pair, res)
    print(f"shift={shift:<5} n={n:<4} m={m:<3} {res.status:10s} ||K||_F={res.norm_fro:.5f} "
          f"rank={ls.rank} m_eff={ls.m_effective} {time.perf_counter() - t:5.1f}s")

# %% [markdown]
# The rank of K matches the number of eigenvalues sitting at zero, and its
# row space is spanned by B^T times the corresponding eigenvectors.
