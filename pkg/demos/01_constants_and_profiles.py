"""
Double-well constants and metastable profiles
=============================================

Walks through the quantities everything else is built on: the transition
energy c_F, the wave constants A and K, standing waves on a gap of given
length, and the profile u^h glued from them.
"""

import numpy as np

from hypmac import (Damping, Potential, alpha_beta, build_profile, damping_average,
                    renormalized_energy, solve_standing_wave, transition_energy, wave_constants)

F = Potential.quartic()

# c_F = int sqrt(2F) over [-1, 1]; for the quartic it is 2 sqrt(2) / 3
c_F = transition_energy(F)
A_plus, A_minus, K_plus, K_minus = wave_constants(F)
print("c_F    ", c_F, 2 * np.sqrt(2) / 3)
print("A, K   ", A_plus, K_plus)

# a relaxation damping g = 1 + tau F'' averages to gamma = 1 - 0.4 tau
for tau in (0.05, 0.1, 0.2):
    print("gamma at tau =", tau, damping_average(F, Damping.relaxation(F, tau)))

# %% standing waves: the plateau sits beta below the well, alpha ~ beta^2
eps = 0.05
for length in (0.4, 0.6, 0.8):
    w = solve_standing_wave(length, eps, 1, F)
    print(f"gap {length}: phi(0) = {w.phi0:.12f}  beta = {w.beta:.3e}  alpha = {w.alpha:.3e}")

# the closed-form approximation improves quickly as eps / gap shrinks
for r in (0.08, 0.06, 0.05, 0.04):
    exact = alpha_beta(1.0, r, 1, F)
    asym = alpha_beta(1.0, r, 1, F, mode="asymptotic")
    print(f"r = {r}: beta relative error {abs(asym.beta - exact.beta) / exact.beta:.2e}")

# %% a three-layer profile
prof = build_profile((0.25, 0.5, 0.75), 0.02, F, n=1024)
print("profile mass      ", prof.mass)
print("energy / c_F      ", renormalized_energy(prof.u, None, 0.02, 0.0, F) / c_F)
print("alphas            ", prof.alpha)

# gnuplot: plot 'profile.csv' using 1:2 with lines
prof.to_csv("profile.csv")
