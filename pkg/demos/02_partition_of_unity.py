# %% [markdown]
# # Partitions, bumps and the boundary detector
#
# The approximator splits the cube into fine cells. Near cell faces the
# indicator layers are not sharp, so the construction runs 2^d shifted
# copies and blends them with bump functions that sum to one.

# %%
import numpy as np

from requ_forge.approximator import boundary_detector, bump_net
from requ_forge.network import realize
from requ_forge.partition import build_partitions, shell_width

# %% [markdown]
# Locating a point: coarse cell j, offset i, and the fine cube it falls in.

# %%
pp = build_partitions(3, 2)
print(pp.locate([0.1, -0.4]))
print(pp.locate([0.1, -0.4], level=1))

# %% [markdown]
# Bumps from the four shifted partitions in 2-D add up to one everywhere.

# %%
rng = np.random.default_rng(1)
X = rng.uniform(-0.5, 0.5, (2000, 2))
total = sum(realize(bump_net(build_partitions(3, 2, k)), X)[:, 0] for k in range(1, 5))
print("max |sum - 1| =", np.max(np.abs(total - 1)))

# %% [markdown]
# The detector is 0 deep inside fine cubes and 1 on their faces.

# %%
pp = build_partitions(3, 1)
det = boundary_detector(pp, r=2)
delta = shell_width(3, 2)
corner = pp.fine_corner(1, 1)[0]
for x in (corner, corner + delta / 2, corner + 2 * delta, corner + pp.fine_side / 2):
    print(f"x={x:+.6f}  detector={realize(det, [[x]])[0, 0]:.3f}")
