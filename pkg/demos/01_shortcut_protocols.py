"""Build one protocol of each family and look at what the drive does.

The three stroke families:

* a transitionless ramp (unitary stroke) that parks all populations at a new
  frequency with zero residual coherence,
* an equilibration ramp (open stroke) that carries a Gibbs state to the Gibbs
  state of a different frequency at the same bath temperature,
* the constant adiabatic-speed drive w(t) = w_i / (1 - mu w_i t).
"""

import numpy as np

from carnotlab import (BathSpec, build_constant_mu_protocol, build_sta_protocol,
                       build_ste_protocol, propagate_open, propagate_unitary,
                       thermal_observable_vector)
from carnotlab.protocols import save_protocol

# --- transitionless ramp: 5 -> 10 in five time units --------------------
sta, ermakov = build_sta_protocol(5.0, 10.0, 5.0)
v0 = thermal_observable_vector(5.0, 5.0)
traj = propagate_unitary(v0, sta)
vf = traj.final_vector
print("transitionless ramp 5 -> 10:")
print(f"  initial energy {v0.h:.6f}, final {vf.h:.6f} (exactly doubled)")
print(f"  residual coherence {np.hypot(vf.l, vf.c):.2e} (frictionless)")
print(f"  work = {traj.work:.6f}, heat = {traj.heat:.2e}")

# --- equilibration ramp: 10 -> 8 against the hot bath --------------------
bath = BathSpec(temperature=8.0, coupling=0.05)
ste, solution = build_ste_protocol(10.0, 8.0, 20.0, bath)
t, w, wd, mu = ste.sample(9)
print("\nequilibration ramp 10 -> 8 at T = 8 (20 time units):")
print("     t      omega      mu")
for ti, wi, mi in zip(t, w, mu):
    print(f"  {ti:6.2f}  {wi:8.4f}  {mi:+.5f}")
traj = propagate_open(thermal_observable_vector(10.0, 8.0), ste, bath)
tgt = thermal_observable_vector(8.0, 8.0)
print(f"  endpoint energy {traj.final_vector.h:.6f} vs Gibbs target {tgt.h:.6f}")

# --- constant-speed drive -------------------------------------------------
cmu = build_constant_mu_protocol(9.6875, 7.75, -0.02)
print(f"\nconstant-speed drive 9.6875 -> 7.75 at mu = -0.02:")
print(f"  duration {cmu.duration:.4f} time units; "
      f"mu spread {np.ptp(cmu.sample(101)[3]):.2e} (exactly constant)")

save_protocol(ste, "ste_protocol.csv", "ste_protocol.json")
print("\nwrote ste_protocol.csv / ste_protocol.json")
