# %% [markdown]
# # Approximating a smooth function end to end
#
# Build the full network for a Gaussian bump in 2-D, compare its depth and
# width with the predicted budget, and measure the error on random points.

# %%
import numpy as np

from requ_forge.approximator import full_approximator
from requ_forge.cli import sample_points
from requ_forge.network import realize
from requ_forge.taylor import registry_function

# %%
f = registry_function("exp_neg_sq", d=2, r=2)
rep = full_approximator(f, eps=0.25)
m = rep.measured
print(f"M={rep.spec.M}  hidden layers {m.hidden_layers} (budget {rep.predicted_L})")
print(f"width {m.max_width} (budget {rep.predicted_N})  nonzeros {m.nonzero_weights}")

# %% [markdown]
# Error on 10^4 points of [-1/2, 1/2)^2.

# %%
X = sample_points(10_000, 2, seed=7, half_width=0.5)
err = np.abs(realize(rep.network, X)[:, 0] - f(X))
print(f"max error {err.max():.4f}, mean {err.mean():.4f}, target 0.25")

# %% [markdown]
# A 1-D slice shows the fit is much tighter than the target.

# %%
x = np.linspace(-0.5, 0.5, 11)
S = np.column_stack([x, np.zeros_like(x)])
for xi, fi, pi in zip(x, f(S), realize(rep.network, S)[:, 0]):
    print(f"{xi:+.2f}  f={fi:.5f}  net={pi:.5f}")
