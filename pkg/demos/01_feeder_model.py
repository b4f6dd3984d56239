# %% [markdown]
# # Feeder model: recursive sweep and compact form
#
# A radial feeder with N customers is described by main-line segment
# impedances (R, X), service-line impedances (R', X') and inverter ratings.
# Squared voltages follow a linear recursion from the substation outwards.
# The same map can be written as `y = H q_g + phi + y0` with
# `y = v_bar^2 - v^2`, which is what the controller design works with.

# %%
import numpy as np

from droopreg import Injections, build_H, builtin_cigre, forward_sweep, output_map
from droopreg.feeder import compact_form, mat_inf_norm

feeder = builtin_cigre().feeder_params()
print("customers:", feeder.N)
print("segment reactances:", feeder.X)

# %% [markdown]
# Push 1 kvar out of customer 3's inverter and watch every customer's voltage rise.
# Customers further down the line see more of the effect through the shared segments.

# %%
inj = Injections.zeros(feeder.N)
inj.q_g[2] = 1000.0
flows = forward_sweep(feeder, inj, v0=230.0)
print("customer voltages [V]:", np.round(flows.v_cust, 4))

# %% [markdown]
# The compact form reproduces the sweep. The column of `H` for customer 3
# is the sensitivity we just measured (in squared volts, with a sign flip).

# %%
rng = np.random.default_rng(0)
inj = Injections(*(rng.uniform(-1500, 1500, feeder.N) for _ in range(4)))
y_sweep = feeder.v_bar**2 - forward_sweep(feeder, inj, 231.0).v_cust ** 2
y_compact = output_map(compact_form(feeder, inj.rho, inj.q_c, 231.0), inj.q_g)
print("max |difference| [V^2]:", np.max(np.abs(y_sweep - y_compact)))

H = build_H(feeder)
print("H =\n", np.round(H, 5))
print("|H|_inf =", round(mat_inf_norm(H), 5))
