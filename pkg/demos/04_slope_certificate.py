# %% [markdown]
# # Checking a droop curve's slope certificate
#
# The stability argument needs every difference quotient of the droop curve
# to lie in `[0, d]`. `slope_of` returns the steeper ramp, which is the
# smallest valid `d`. The gentler ramp only works when both ramps match.

# %%
from droopreg import DroopSpec, droop_eval, min_ramp_slope, slope_of, verify_slope_restriction

spec = DroopSpec(w_min=-100.0, w_m=0.0, w_n=0.0, w_max=400.0, Q_bar=200.0)
print("steeper ramp:", slope_of(spec), " gentler ramp:", min_ramp_slope(spec))
print("certificate with steeper ramp:", verify_slope_restriction(spec, slope_of(spec)))
print("certificate with gentler ramp:", verify_slope_restriction(spec, min_ramp_slope(spec)))

# %% [markdown]
# Breakpoints belong to the segment on their left, so the curve is
# continuous and the value at `w_max` is the full rating.

# %%
for w in (-200.0, -100.0, -50.0, 0.0, 200.0, 400.0, 800.0):
    print(f"K({w:7.1f}) = {float(droop_eval(spec, w)) + 0.0:8.2f}")
