"""Layer-motion ODEs for the Allen-Cahn family and their integration.

Gaps follow the convention ``l_j = h_j - h_{j-1}`` for ``j = 1..N+2`` with the
reflected boundary gaps ``l_1 = 2 h_1`` and ``l_{N+2} = 2 (1 - h_{N+1})``;
``alpha[j-1]`` belongs to gap ``l_j``.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InadmissibleLayers, StepFailure
from .potential import Damping, Potential, damping_average, transition_energy
from .profile import (RHO_DEFAULT, LayerVector, alpha_beta_asymptotic,
                      branch_constants, gap_signs, layer_gaps,
                      solve_standing_wave, write_columns)

log = logging.getLogger(__name__)

KINDS = ("AC", "MAC", "HYP_AC", "HYP_MAC", "CH_N3")
HYPERBOLIC = ("HYP_AC", "HYP_MAC")


def alphas_for_gaps(h, eps, p, mode="asymptotic"):
    """alpha^1..alpha^{N+2} for the gaps of ``h``.

    The asymptotic formula is used as a model here, for any ratio eps/l; the
    r < r0 validity window is enforced only by ``profile.alpha_beta``.
    """
    gaps = layer_gaps(h.h if isinstance(h, LayerVector) else h)
    signs = gap_signs(gaps.size)
    if mode == "asymptotic":
        out = np.empty_like(gaps)
        for s in (1, -1):
            sel = signs == s
            if np.any(sel):
                A, K = branch_constants(p, s)
                out[sel] = alpha_beta_asymptotic(eps / gaps[sel], A, K)[0]
        return out
    if mode == "exact":
        return np.array([solve_standing_wave(l, eps, s, p).alpha for l, s in zip(gaps, signs)])
    raise ValueError(f"unknown alpha mode {mode!r}")


def sigma_term(alpha, N=None):
    """(1/(N+1)) * sum_{i=1}^{N+1} (-1)^i (alpha^{i+1} - alpha^i)."""
    alpha = np.asarray(alpha, dtype=float)
    if N is None:
        N = alpha.size - 2
    if alpha.size != N + 2:
        raise ValueError(f"expected {N + 2} alphas, got {alpha.size}")
    signs = np.array([(-1) ** i for i in range(1, N + 2)])
    return float(np.dot(signs, np.diff(alpha)) / (N + 1))


@lru_cache(maxsize=None)
def _mac_coefficients(N):
    """Integer matrix C with MAC bracket_j = (C @ alpha)_j / (N + 1).

    Summing alpha with integer weights avoids the cancellation in
    alpha^{j+1} - alpha^j + (-1)^{j+1} Sigma when one alpha dominates.
    """
    D = np.zeros((N + 1, N + 2))
    D[np.arange(N + 1), np.arange(N + 1)] = -1.0
    D[np.arange(N + 1), np.arange(1, N + 2)] = 1.0
    signs = np.array([(-1.0) ** i for i in range(1, N + 2)])
    alt = -signs  # (-1)^{j+1}
    C = (N + 1) * D + np.outer(alt, signs @ D)
    C.setflags(write=False)
    return C


def lengths_Lpm(h):
    """(L_+, L_-): total length where the profile sits near +1 and near -1."""
    gaps = layer_gaps(h.h if isinstance(h, LayerVector) else h)
    weights = np.ones_like(gaps)
    weights[0] = weights[-1] = 0.5
    plus = gap_signs(gaps.size) > 0
    return float(np.dot(weights[plus], gaps[plus])), float(np.dot(weights[~plus], gaps[~plus]))


def lplus_gradient(n_layers):
    """Constant gradient of L_+ with respect to h (L_+ is affine in h)."""
    # Jacobian of the gaps l_1..l_{N+2} with respect to h_1..h_{N+1}
    J = np.zeros((n_layers + 1, n_layers))
    J[0, 0] = 2.0
    for j in range(1, n_layers):
        J[j, j] = 1.0
        J[j, j - 1] = -1.0
    J[-1, -1] = -2.0
    weights = np.ones(n_layers + 1)
    weights[0] = weights[-1] = 0.5
    plus = gap_signs(n_layers + 1) > 0
    return (weights * plus) @ J


def leading_S(N, eps, c_F):
    i = np.arange(1, N + 1)
    S = (-1.0) ** (i[:, None] + i[None, :])
    np.fill_diagonal(S, 2.0)
    return c_F / eps * S


def leading_S_inv(N, eps, c_F):
    i = np.arange(1, N + 1)
    S = (-1.0) ** (i[:, None] + i[None, :] + 1)
    np.fill_diagonal(S, float(N))
    return eps / ((N + 1) * c_F) * S


@dataclass(frozen=True)
class OdeModel:
    kind: str
    eps: float
    tau: float = 0.0
    gamma: float = 1.0
    potential: Potential = field(default_factory=Potential.quartic)
    alpha_mode: str = "asymptotic"
    rho: float = RHO_DEFAULT
    c_F: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ODE model {self.kind!r}; expected one of {KINDS}")
        if self.kind in HYPERBOLIC and not self.tau > 0:
            raise ValueError(f"{self.kind} needs tau > 0")
        if self.c_F is None:
            object.__setattr__(self, "c_F", transition_energy(self.potential))

    @classmethod
    def from_damping(cls, kind, eps, tau=0.0, potential=None, damping=None, **kw):
        potential = potential or Potential.quartic()
        damping = damping or Damping.one()
        return cls(kind=kind, eps=eps, tau=tau, gamma=damping_average(potential, damping),
                   potential=potential, **kw)

    @property
    def hyperbolic(self):
        return self.kind in HYPERBOLIC

    @property
    def collision_gap(self):
        return self.eps / self.rho

    def parabolic(self):
        """The first-order model whose right-hand side this model shares."""
        return replace(self, kind={"HYP_AC": "AC", "HYP_MAC": "MAC"}.get(self.kind, self.kind),
                       tau=0.0)


@dataclass
class LayerState:
    h: np.ndarray
    hdot: Optional[np.ndarray] = None
    t: float = 0.0


def forcing(h, model):
    """Right-hand side of the layer system: h' for first-order models, and
    tau h'' + gamma h' for the hyperbolic ones."""
    h = np.asarray(h, dtype=float)
    N = h.size - 1
    alpha = alphas_for_gaps(h, model.eps, model.potential, model.alpha_mode)
    d = np.diff(alpha)  # alpha^{j+1} - alpha^j, j = 1..N+1
    kind = model.kind
    if kind in ("AC", "HYP_AC"):
        return model.eps / model.c_F * d
    if kind in ("MAC", "HYP_MAC"):
        return model.eps / (model.c_F * (N + 1)) * (_mac_coefficients(N) @ alpha)
    if kind == "CH_N3":
        if h.size != 3:
            raise ValueError("CH_N3 needs exactly three layers")
        a = alpha
        left = (a[2] - a[0]) / (4.0 * (h[1] - h[0]))
        right = (a[3] - a[1]) / (4.0 * (h[2] - h[1]))
        return np.array([left, left + right, right])
    raise ValueError(kind)


def rhs(state, model):
    """h' (first-order models) or the pair (h', h'') (hyperbolic models)."""
    h = state.h if isinstance(state, LayerState) else state
    check_admissible(h, model)
    R = forcing(h, model)
    if not model.hyperbolic:
        return R
    hdot = np.asarray(state.hdot, dtype=float)
    return hdot, (R - model.gamma * hdot) / model.tau


def check_admissible(h, model):
    h = np.asarray(h, dtype=float)
    if not (h[0] > 0 and h[-1] < 1 and np.all(np.diff(h) > 0)):
        raise InadmissibleLayers(f"layers out of order or outside (0, 1): {h}")
    gaps = layer_gaps(h)
    if np.any(gaps <= model.collision_gap):
        raise InadmissibleLayers(
            f"min gap {gaps.min():.6g} does not exceed collision gap {model.collision_gap:.6g}")


def initial_velocity(h, model, policy="quasi-static"):
    """Starting velocity for the hyperbolic models.

    ``quasi-static`` takes the first-order right-hand side divided by gamma;
    ``projected`` additionally removes the component that changes L_+ so the
    layer dynamics starts mass compatible.
    """
    if isinstance(policy, (list, tuple, np.ndarray)):
        return np.asarray(policy, dtype=float)
    hdot = forcing(h, model) / model.gamma
    if policy == "quasi-static":
        return hdot
    if policy == "projected":
        c = lplus_gradient(len(h))
        return hdot - np.dot(c, hdot) / np.dot(c, c) * c
    if policy == "zero":
        return np.zeros(len(h))
    raise ValueError(f"unknown initial velocity policy {policy!r}")


@dataclass
class Trajectory:
    t: np.ndarray
    h: np.ndarray
    hdot: Optional[np.ndarray]
    model: OdeModel
    collided: bool = False
    t_collision: Optional[float] = None

    @property
    def final(self):
        return self.h[-1]

    def lengths(self):
        L = np.array([lengths_Lpm(row) for row in self.h])
        return L[:, 0], L[:, 1]

    def psi(self):
        m = self.model
        return np.array([np.sum(np.diff(alphas_for_gaps(row, m.eps, m.potential, m.alpha_mode)) ** 2)
                         for row in self.h])

    def at(self, times):
        """Layer positions linearly interpolated at ``times`` (within the record)."""
        times = np.asarray(times, dtype=float)
        return np.column_stack([np.interp(times, self.t, col) for col in self.h.T])

    def to_csv(self, path):
        n = self.h.shape[1]
        names = ["t"] + [f"h_{j}" for j in range(1, n + 1)]
        cols = [self.t] + list(self.h.T)
        if self.hdot is not None:
            names += [f"hdot_{j}" for j in range(1, n + 1)]
            cols += list(self.hdot.T)
        Lp, Lm = self.lengths()
        names += ["L_plus", "L_minus", "Psi"]
        cols += [Lp, Lm, self.psi()]
        write_columns(path, names, cols)


def integrate_layers(initial, model, t_end, tol=1e-9, cadence=None, hdot_policy="quasi-static"):
    """Integrate the layer system with an adaptive Dormand-Prince 5(4) pair.

    Stops early, flagging the trajectory, when a gap reaches the collision
    gap eps/rho.
    """
    if not isinstance(initial, LayerState):
        initial = LayerState(h=np.asarray(initial, dtype=float))
    h0 = np.asarray(initial.h, dtype=float)
    check_admissible(h0, model)
    n = h0.size
    if model.kind == "CH_N3" and n != 3:
        raise ValueError("CH_N3 needs exactly three layers")
    t0 = float(initial.t)
    if cadence is None:
        cadence = (t_end - t0) / 200.0
    t_eval = np.arange(t0, t_end, cadence)
    t_eval = np.append(t_eval, t_end) if t_eval[-1] < t_end else t_eval

    if model.hyperbolic:
        hdot0 = initial.hdot if initial.hdot is not None else initial_velocity(h0, model, hdot_policy)
        y0 = np.concatenate([h0, hdot0])

        def fun(_, y):
            R = forcing(y[:n], model)
            return np.concatenate([y[n:], (R - model.gamma * y[n:]) / model.tau])
    else:
        y0 = h0

        def fun(_, y):
            return forcing(y, model)

    def collision(_, y):
        h = y[:n]
        if np.any(np.diff(h) <= 0):
            return -1.0
        return float(np.min(layer_gaps(h)) - model.collision_gap)

    collision.terminal = True
    collision.direction = -1

    sol = solve_ivp(fun, (t0, t_end), y0, method="RK45", t_eval=t_eval, rtol=tol,
                    atol=tol * 1e-3, events=collision)
    if sol.status == -1:
        raise StepFailure(sol.message)
    collided = sol.status == 1
    t = sol.t
    Y = sol.y.T
    t_col = None
    if collided:
        t_col = float(sol.t_events[0][0])
        t = np.append(t, t_col)
        Y = np.vstack([Y, sol.y_events[0][0]])
        log.info("layers collided at t = %.6g", t_col)
    return Trajectory(t=t, h=Y[:, :n], hdot=Y[:, n:] if model.hyperbolic else None,
                      model=model, collided=collided, t_collision=t_col)
