# %% [markdown]
# # Splitting a perturbation into what the bins see and what they miss
#
# A parameter change moves the mean data function by gamma = dtheta . grad gbar.
# Binning keeps B gamma; the weighted pseudoinverse maps it back to
# gamma_1 = B+ B gamma.  The rest, gamma_0, integrates to zero in every bin,
# and its 1/gbar-weighted norm is exactly the information lost.

# %%
import numpy as np

from binloss import build_rule, gaussian_mixture_model, loss_quadform, rebin_rule, uniform_grid
from binloss.binning import apply_binning, decompose, weighted_inner
from binloss.model import G1_THETA, evaluate_on_rule

model = gaussian_mixture_model()
theta = G1_THETA  # amplitude 5, centre 0.5, width 0.1, background 0.2
delta = np.array([0.0, 1.0, 0.0, 0.0])  # shift the bump

scheme = uniform_grid(model.space, [8])
rule = build_rule(model.space, scheme, 8)
gbar, grad = evaluate_on_rule(model, theta, rule)
gamma = grad @ delta
g1, g0 = decompose(gamma, gbar, rule)

print("B gamma_0          :", np.max(np.abs(apply_binning(scheme, rule, g0))))
print("<gamma_1, gamma_0> :", weighted_inner(g1, g0, gbar, rule))
print("|gamma_0|^2        :", weighted_inner(g0, g0, gbar, rule))
print("loss (matrices)    :", loss_quadform(model, theta, delta, scheme, rule).loss_direct)

# %% [markdown]
# Refining nested grids on one shared node set shows the loss falling, and
# once the bins are narrower than the bump each halving divides it by about 4.

# %%
counts = [1, 2, 4, 8, 16, 32, 64]
fine = build_rule(model.space, uniform_grid(model.space, [counts[-1]]))
prev = None
for m in counts:
    s = uniform_grid(model.space, [m])
    loss = loss_quadform(model, theta, delta, s, rebin_rule(fine, s)).loss_per_bin_total
    ratio = "" if prev is None else f"  ratio {prev / loss:6.3f}"
    print(f"M={m:3d}  loss={loss:.6e}{ratio}")
    prev = loss
