# %% [markdown]
# # Designing droop slopes window by window
#
# The load bounds change at known instants. For each window the design
# computes a worst-case disturbance level, checks that it leaves room inside
# the voltage band and returns the largest droop slope that keeps every
# customer inside the band. Each inverter then gets a symmetric droop curve
# that saturates at its rating.

# %%
from droopreg import builtin_cigre, design_all_windows, slope_of

cfg = builtin_cigre()
feeder = cfg.feeder_params()
schedule = cfg.window_schedule()
result = design_all_windows(feeder, schedule, cfg.delta_volts(), cfg.substation_profile(), cfg.tau_array())
print(result.to_text())

# %% [markdown]
# The slope drops from window to window: the bound decays with the update
# time and the middle window has the widest load bounds.
# A single design from the largest bounds, the "non-adaptive" baseline, gives one slope for the whole run.

# %%
fixed = design_all_windows(
    feeder, schedule.non_adaptive(), cfg.delta_volts(), cfg.substation_profile(), cfg.tau_array()
)
print("non-adaptive slope:", round(fixed.d[0], 5))

# %% [markdown]
# Every synthesized curve has exactly the designed slope.

# %%
for k, specs in enumerate(result.specs):
    print(k, [round(slope_of(s), 6) for s in specs], "w_max:", [round(s.w_max) for s in specs])

# %% [markdown]
# Widening the reactive-load bound eventually makes a window infeasible.
# With `strict=False` the report shows by how much.

# %%
from droopreg import WindowSchedule

wide = WindowSchedule([0, 100], [5000], [460])
print(design_all_windows(feeder, wide, 23.0, cfg.substation_profile(), 100.0, strict=False).to_text())
