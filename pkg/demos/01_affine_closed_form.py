# %% [markdown]
# # Information lost by binning a linear ramp
#
# On [0, 1] the mean data function gbar(a) = t0 + t1 a is the simplest model
# with something to lose.  At t = (1, 0) every quantity has a closed form:
# F_LM = [[1, 1/2], [1/2, 1/3]], and one bin keeps only the total count,
# so the slope direction loses 1/3 - 1/4 = 1/12.

# %%
import numpy as np

from binloss import affine_1d_model, build_rule, fim_binned, fim_list_mode, loss_quadform, uniform_grid

model = affine_1d_model()
theta = np.array([1.0, 0.0])
slope = np.array([0.0, 1.0])

scheme = uniform_grid(model.space, [1])
rule = build_rule(model.space, scheme)
print("F_LM =\n", fim_list_mode(model, theta, rule))
print("F_B  =\n", fim_binned(model, theta, scheme, rule))

# %% [markdown]
# Halving the bin width quarters the loss: inside each bin the ramp's
# log-gradient deviates linearly from its bin average, and the squared
# deviation integrates to (dx)^2 / 12 per unit count.

# %%
for m in (1, 2, 4, 8, 16):
    s = uniform_grid(model.space, [m])
    rep = loss_quadform(model, theta, slope, s, build_rule(model.space, s))
    print(f"M={m:3d}  loss={rep.loss_per_bin_total:.12f}  1/(12 M^2)={1 / (12 * m * m):.12f}")

# %% [markdown]
# The three routes to the loss (matrix difference, null-component norm and
# per-bin integrals) agree to roundoff.

# %%
rep = loss_quadform(model, theta, slope, uniform_grid(model.space, [4]),
                    build_rule(model.space, uniform_grid(model.space, [4])))
print("routes:", rep.routes, " max disagreement:", rep.max_disagreement())
