# %% [markdown]
# # Exact building blocks
#
# With the squared ReLU, products and low-degree polynomials are not
# approximated: they come out exact up to float rounding. This walk-through
# builds a few blocks and checks them on random inputs.

# %%
import numpy as np

from requ_forge.calculus import identity_net
from requ_forge.gadgets import polynomial_net, product2, product_d
from requ_forge.network import complexity, realize

rng = np.random.default_rng(0)

# %% [markdown]
# A product of two numbers needs one hidden layer of width 4.

# %%
net = product2()
X = rng.uniform(-5, 5, (5, 2))
print(np.column_stack([X, realize(net, X)[:, 0], X[:, 0] * X[:, 1]]))
print(complexity(net))

# %% [markdown]
# Products of d numbers pair up factors in a binary tree, so depth grows
# like log2(d).

# %%
for d in (2, 3, 4, 8, 16):
    c = complexity(product_d(d))
    X = rng.uniform(-1, 1, (1000, d))
    err = np.max(np.abs(realize(product_d(d), X)[:, 0] - X.prod(axis=1)))
    print(f"d={d:2d}  hidden={c.hidden_layers}  width={c.max_width:3d}  err={err:.1e}")

# %% [markdown]
# The identity is exact on [-s, s] with one hidden layer. It is what carries
# values through layers while other branches are still computing.

# %%
t = np.linspace(-3, 3, 7)
print(realize(identity_net(3.0), t[:, None])[:, 0])

# %% [markdown]
# A weighted polynomial network reads x and one coefficient per monomial
# and returns sum_k w_k y_k x^k. Here 1 - 2x + 3x^2 with all y_k = 1.

# %%
net = polynomial_net(2, [1.0, -2.0, 3.0], 3.0, d=1)
x = np.linspace(-1, 1, 5)
X = np.column_stack([x, np.ones((5, 3))])
print(realize(net, X)[:, 0], 1 - 2 * x + 3 * x ** 2)
