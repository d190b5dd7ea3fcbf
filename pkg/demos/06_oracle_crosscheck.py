"""Cross-check the 4x4 moment propagator against a full density matrix.

The moment dynamics close on four operators, so one open stroke is a 4x4
linear ODE.  The same stroke integrated as a 60x60 density matrix with the
frozen dressed-mode jump operators must give the same moment trajectories;
agreement is at integrator precision for constant-speed drives.
"""

import numpy as np

from carnotlab import BathSpec, propagate_open, thermal_observable_vector
from carnotlab.fock_oracle import gaussian_fock_state, integrate_lindblad
from carnotlab.protocols import build_constant_mu_protocol

bath = BathSpec(temperature=5.0, coupling=0.05)
protocol = build_constant_mu_protocol(6.0, 5.0, -0.25)
v0 = thermal_observable_vector(6.0, 5.0)

times, h, l, c = integrate_lindblad(
    gaussian_fock_state(v0, 6.0, 60), protocol, bath=bath, n_samples=9)
traj = propagate_open(v0, protocol, bath, n_samples=9)

print("      t      <H> (matrix)    <H> (moments)   |diff|")
for i, t in enumerate(times):
    print(f"  {t:7.4f}   {h[i]:.10f}   {traj.vectors[i, 0]:.10f}   "
          f"{abs(h[i] - traj.vectors[i, 0]):.1e}")
scale = np.max(np.abs(h))
print(f"\nworst relative deviation over (h, l, c): "
      f"{max(np.max(np.abs(traj.vectors[:, 0] - h)), np.max(np.abs(traj.vectors[:, 1] - l)), np.max(np.abs(traj.vectors[:, 2] - c))) / scale:.2e}")
