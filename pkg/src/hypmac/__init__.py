"""Hyperbolic mass-conserving Allen-Cahn dynamics: constants, metastable
profiles, a method-of-lines simulator and layer-motion ODEs."""

from .config import RunConfig, emit_config, parse_config
from .errors import *  # noqa: F401,F403
from .experiments import (asymptotics_sweep, compare_pde_ode, metastability_sweep,
                          tau_limit_study)
from .layers import (LayerState, OdeModel, alphas_for_gaps, forcing, integrate_layers,
                     leading_S, leading_S_inv, lengths_Lpm, rhs, sigma_term)
from .pde import (Grid, PdeState, energy_of, mass_of, run_simulation, semidiscrete_rhs, step,
                  track_layers)
from .potential import (Damping, ModelParams, Potential, damping_average, rate_constant,
                        transition_energy, validate_damping, validate_potential,
                        wave_constants)
from .profile import (LayerVector, alpha_beta, build_profile, half_period, renormalized_energy,
                      solve_mass_constraint, solve_standing_wave)

__version__ = "0.1.0"
