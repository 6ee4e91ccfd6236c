# %% [markdown]
# # Clustered positive eigenvalues
#
# Here the positive eigenvalues of Sym(A) come in close pairs. The plain
# functional also penalizes eigenvalues that have already gone negative,
# the plus variant only the positive ones. With B spanning the positive
# eigenvectors both reach the same feedback; plain GL stalls when one of
# the m rightmost eigenvalues cannot be moved through B, and then reports
# it as uncontrollable.

# %%
from dissipator import bench, outer_solve

for q, delta, _ in bench.TABLE4_ROWS:
    pair = bench.clustered_pair(20, q, delta, seed=1)
    row = [f"q={q} delta={delta:<6g}"]
    for variant in ("plain", "plus"):
        res, trace = outer_solve(pair, m=q, variant=variant)
        row.append(f"{variant}: {res.status:9s} {res.norm_fro:8.4f}")
    print("  ".join(row))

# %% [markdown]
# Overestimating m is harmless for the plus variant: the extra directions
# carry no weight once their eigenvalues are negative.

# %%
from dissipator.gradient_flow import limit_structure_check

pair = bench.clustered_pair(20, 2, 1e-3, seed=1)
res, _ = outer_solve(pair, m=4, variant="plus")
print(limit_structure_check(pair, res))
