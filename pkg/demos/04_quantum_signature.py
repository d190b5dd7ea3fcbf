"""Fast cycles: global coherence keeps the engine alive.

The shortcut cycles park their coherence at zero at every corner (branch
coherence).  The constant-speed cycle never lets it vanish (global
coherence), and at short cycle times that stored coherence is what keeps the
power positive: the shortcut engines cannot even close a cycle there, and at
their shortest feasible times they run as dissipators.
"""

import numpy as np

from carnotlab import (InfeasibleStroke, analyze_cycle, get_preset,
                       run_to_limit_cycle)

TAU_FAST = 8.0

print(f"--- constant-speed (global-coherence) cycle at tau = {TAU_FAST} ---")
res = run_to_limit_cycle(get_preset("endo-global", cycle_time=TAU_FAST))
led = analyze_cycle(res)
print(f"mode {led.operational_mode}, power {led.power:+.3e}, "
      f"efficiency {led.efficiency:+.4f}")
print("corner coherences:",
      np.array2string(res.corner_coherences(), precision=4))
coh_min = min(min(t.coherences()) for t in res.trajectories)
print(f"coherence never vanishes along the cycle: min = {coh_min:.4f}")

print(f"\n--- shortcut cycles at tau = {TAU_FAST} ---")
for name in ("carnot-shortcut", "endo-shortcut"):
    try:
        run_to_limit_cycle(get_preset(name, cycle_time=TAU_FAST))
    except InfeasibleStroke as err:
        print(f"{name}: cannot run ({err})")

print("\n--- shortcut cycles at their shortest feasible times ---")
for name, tau in (("carnot-shortcut", 16.0), ("endo-shortcut", 18.0)):
    led = analyze_cycle(run_to_limit_cycle(get_preset(name, cycle_time=tau)))
    print(f"{name} at tau={tau:g}: mode {led.operational_mode}, "
          f"power {led.power:+.3e}")

print("\n--- branch coherence in the slow regime ---")
res = run_to_limit_cycle(get_preset("carnot-shortcut", cycle_time=250.0))
print("shortcut corner coherences at tau=250:",
      np.array2string(res.corner_coherences(), precision=2))
print("(coherence is created inside each stroke and fully retired at the "
      "corners)")
