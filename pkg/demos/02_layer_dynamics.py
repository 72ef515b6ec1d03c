"""
Slow motion of the layers
=========================

The layer ODEs reduce the PDE to N+1 positions. This script shows the
rigid drift of two layers under the mass-conserving law, conservation of
the phase lengths, and how the hyperbolic system approaches the parabolic
one as tau goes to zero.
"""

import numpy as np

from hypmac import LayerState, OdeModel, forcing, integrate_layers, tau_limit_study

eps = 0.05

# %% two layers drift together, toward the side with the shorter outer gap
mac = OdeModel("MAC", eps, rho=0.5)
h = np.array([0.2, 0.7])
print("velocities at", h, forcing(h, mac))

traj = integrate_layers(h, mac, t_end=2e4, cadence=1e3)
for t, row in zip(traj.t, traj.h):
    print(f"t = {t:8.0f}  h = {row}")
print("collided:", traj.collided, traj.t_collision)

# %% more layers: L+ and L- stay fixed
h = np.array([0.12, 0.33, 0.5, 0.8])
traj = integrate_layers(h, OdeModel("MAC", eps, rho=0.5), t_end=200.0)
Lp, Lm = traj.lengths()
print("spread of L+ along the run:", Lp.max() - Lp.min())

# the hyperbolic law needs a starting velocity; 'projected' keeps L+ exact
hyp = OdeModel("HYP_MAC", eps, tau=0.1, rho=0.5)
traj = integrate_layers(LayerState(h=h), hyp, t_end=200.0, hdot_policy="projected")
Lp, Lm = traj.lengths()
print("spread of L+ (hyperbolic, projected start):", Lp.max() - Lp.min())

# %% tau -> 0: the distance to the parabolic trajectory halves with tau
table = tau_limit_study([0.2, 0.1, 0.05, 0.025])
print(table.to_text())
