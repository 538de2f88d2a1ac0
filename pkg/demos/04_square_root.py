# %% [markdown]
# # A square-root network
#
# sqrt is not smooth at 0, so it needs a different trick: a fixed number
# of Newton-like iterations, each built from exact products. The error is
# at most eps on [0, t] and depth grows linearly in the iteration count.

# %%
import numpy as np

from requ_forge.gadgets import sqrt_iterations, sqrt_net
from requ_forge.network import complexity, realize

# %%
for t, eps in ((1, 0.1), (4, 0.01), (2, 0.001)):
    n = sqrt_iterations(t, eps)
    net = sqrt_net(t, eps)
    x = np.linspace(0, t, 10_001)
    err = np.max(np.abs(realize(net, x[:, None])[:, 0] - np.sqrt(x)))
    print(f"t={t} eps={eps}: n={n}, hidden={complexity(net).hidden_layers}, err={err:.3g}")

# %% [markdown]
# The worst point is x = 0, where the iterates approach eps from below.

# %%
net = sqrt_net(1, 0.1)
print(realize(net, [[0.0], [0.01], [0.25], [1.0]])[:, 0])
