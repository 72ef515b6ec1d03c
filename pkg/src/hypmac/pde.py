"""Method-of-lines solver for the Allen-Cahn family on [0, 1] with Neumann ends.

Models::

    AC       u_t = eps^2 u_xx + f(u)
    MAC      u_t = eps^2 u_xx + f(u) - <f(u)>
    HYP_AC   tau u_tt + g(u) u_t = eps^2 u_xx + f(u)
    HYP_MAC  tau u_tt + g(u) u_t + <(1 - g(u)) u_t> = eps^2 u_xx + f(u) - <f(u)>

where <.> is the trapezoid mean over the grid. The Laplacian uses reflected
ghost nodes. With trapezoid weights both the mean-free forcing and the
discrete Laplacian integrate to zero exactly, so the discrete mass obeys the
same law as the continuous one, and the discrete energy of :func:`energy_of`
is dissipated exactly by the semi-discrete system.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import UnstableStep
from .potential import VALIDATION_GRID, ModelParams
from .profile import gradient_energy, trapezoid_weights, write_columns

log = logging.getLogger(__name__)

MODELS = ("AC", "MAC", "HYP_AC", "HYP_MAC")
BLOWUP = 1e6


@dataclass(frozen=True)
class Grid:
    n: int

    def __post_init__(self):
        if self.n < 64:
            raise ValueError(f"grid needs n >= 64 cells, got {self.n}")

    @property
    def x(self):
        return np.linspace(0.0, 1.0, self.n + 1)

    @property
    def dx(self):
        return 1.0 / self.n

    @property
    def weights(self):
        return trapezoid_weights(self.n)


@dataclass
class PdeState:
    u: np.ndarray
    v: Optional[np.ndarray] = None
    t: float = 0.0

    @property
    def grid(self):
        return Grid(len(self.u) - 1)


def is_hyperbolic(model):
    if model not in MODELS:
        raise ValueError(f"unknown PDE model {model!r}; expected one of {MODELS}")
    return model.startswith("HYP")


def laplacian(u, dx):
    L = np.empty_like(u)
    L[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    L[0] = 2.0 * (u[1] - u[0])
    L[-1] = 2.0 * (u[-2] - u[-1])
    return L / (dx * dx)


def _make_rhs(model, params, n):
    """Closure (u, v) -> (u_t, v_t) on a grid of n cells; v_t is None if parabolic."""
    eps2 = params.eps ** 2
    dx = 1.0 / n
    w = trapezoid_weights(n)
    f = params.potential.f
    g = params.damping.g
    tau = params.tau

    if model == "AC":
        return lambda u, v: (eps2 * laplacian(u, dx) + f(u), None)
    if model == "MAC":
        def rhs(u, v):
            fu = f(u)
            return eps2 * laplacian(u, dx) + fu - np.dot(w, fu), None
        return rhs
    if not tau > 0:
        raise ValueError(f"{model} needs tau > 0")
    if model == "HYP_AC":
        return lambda u, v: (v, (eps2 * laplacian(u, dx) + f(u) - g(u) * v) / tau)

    def rhs(u, v):
        fu = f(u)
        gv = g(u) * v
        nonlocal_ = np.dot(w, fu) + np.dot(w, v - gv)
        return v, (eps2 * laplacian(u, dx) + fu - gv - nonlocal_) / tau
    return rhs


def semidiscrete_rhs(state, model, params):
    """Time derivatives (u_t, v_t) of the semi-discrete system; v_t is None for
    the parabolic models."""
    hyp = is_hyperbolic(model)
    rhs = _make_rhs(model, params, len(state.u) - 1)
    return rhs(np.asarray(state.u, dtype=float),
               np.asarray(state.v, dtype=float) if hyp else None)


def stable_dt(model, params, n):
    """Largest step allowed by the explicit RK4 stability policy."""
    dx = 1.0 / n
    eps2 = params.eps ** 2
    fprime = np.abs(params.potential.df(VALIDATION_GRID)).max()
    if not is_hyperbolic(model):
        return 0.4 * dx * dx / eps2 / (1.0 + dx * dx * fprime / eps2)
    tau = params.tau
    g_max = params.damping.max_value()
    return 0.5 * min(dx * math.sqrt(tau) / params.eps, tau / g_max, math.sqrt(tau / fprime))


def _rk4(rhs, u, v, dt, k1=None):
    ku1, kv1 = k1 if k1 is not None else rhs(u, v)
    if v is None:
        ku2, _ = rhs(u + 0.5 * dt * ku1, None)
        ku3, _ = rhs(u + 0.5 * dt * ku2, None)
        ku4, _ = rhs(u + dt * ku3, None)
        return u + dt / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4), None
    ku2, kv2 = rhs(u + 0.5 * dt * ku1, v + 0.5 * dt * kv1)
    ku3, kv3 = rhs(u + 0.5 * dt * ku2, v + 0.5 * dt * kv2)
    ku4, kv4 = rhs(u + dt * ku3, v + dt * kv3)
    return (u + dt / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4),
            v + dt / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4))


def _check_finite(u, v, t):
    big = np.max(np.abs(u))
    if v is not None:
        big = max(big, np.max(np.abs(v)))
    if not np.isfinite(big) or big > BLOWUP:
        raise UnstableStep(f"solution blew up at t = {t:.6g} (max |field| = {big:.3e})")


def step(state, model, params, dt):
    """One classical RK4 step."""
    hyp = is_hyperbolic(model)
    rhs = _make_rhs(model, params, len(state.u) - 1)
    u = np.asarray(state.u, dtype=float)
    v = np.asarray(state.v, dtype=float) if hyp else None
    u, v = _rk4(rhs, u, v, dt)
    _check_finite(u, v, state.t + dt)
    return PdeState(u=u, v=v, t=state.t + dt)


def track_layers(u, x):
    """Zero crossings of u, linearly interpolated between nodes, ascending."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    exact = x[u == 0.0]
    i = np.nonzero(u[:-1] * u[1:] < 0.0)[0]
    cross = x[i] - u[i] * (x[i + 1] - x[i]) / (u[i + 1] - u[i])
    return np.sort(np.concatenate([exact, cross]))


def mass_of(state):
    return float(np.dot(trapezoid_weights(len(state.u) - 1), state.u))


def energy_of(state, params, method="fd"):
    """E = int [tau/2 v^2 + eps^2/2 u_x^2 + F(u)] dx.

    The default ``fd`` gradient (squared forward differences) is the discrete
    energy that the scheme dissipates; ``spectral`` is more accurate for
    comparing with the continuous functional.
    """
    u = np.asarray(state.u, dtype=float)
    w = trapezoid_weights(u.size - 1)
    E = 0.5 * params.eps ** 2 * gradient_energy(u, method) + np.dot(w, params.potential.F(u))
    if state.v is not None and params.tau > 0:
        E += 0.5 * params.tau * np.dot(w, np.asarray(state.v) ** 2)
    return float(E)


@dataclass
class Diagnostics:
    t: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    cum_dissipation: list = field(default_factory=list)
    layers: list = field(default_factory=list)
    max_speed: list = field(default_factory=list)
    n_layers: int = 0
    collided: bool = False
    t_collision: Optional[float] = None
    dt: float = 0.0

    def finish(self):
        for name in ("t", "mass", "energy", "cum_dissipation", "max_speed"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.layers = np.array(self.layers, dtype=float).reshape(len(self.t), self.n_layers)
        return self

    def to_csv(self, path):
        names = ["t", "mass", "energy", "cum_dissipation"]
        names += [f"layer_{j}" for j in range(1, self.n_layers + 1)] + ["max_speed"]
        cols = [self.t, self.mass, self.energy, self.cum_dissipation]
        cols += list(np.asarray(self.layers).T) + [self.max_speed]
        write_columns(path, names, cols)


def write_state_csv(state, path):
    x = state.grid.x
    v = state.v if state.v is not None else np.zeros_like(state.u)
    write_columns(path, ["x", "u", "v"], [x, state.u, v])


def run_simulation(u0, u1, model, params, t_end, cadence, dt=None, track=True,
                   collision_cells=2.0):
    """Integrate from (u0, u1) to t_end, recording diagnostics every ``cadence``.

    Returns ``(diagnostics, final_state)``. The run stops early, with
    ``diagnostics.collided`` set, when two tracked layers come within
    ``collision_cells`` grid spacings or the number of layers changes.
    """
    hyp = is_hyperbolic(model)
    u = np.array(u0, dtype=float)
    n = u.size - 1
    grid = Grid(n)
    x, w = grid.x, grid.weights
    v = None
    if hyp:
        if u1 is None:
            u1 = np.zeros_like(u)
        v = np.array(u1, dtype=float)
        if model == "HYP_MAC" and abs(np.dot(w, v)) > 1e-14:
            log.warning("initial velocity has mean %.3e: mass is not conserved", np.dot(w, v))
    rhs = _make_rhs(model, params, n)

    frames = max(1, int(round(t_end / cadence)))
    cadence = t_end / frames
    dt_max = stable_dt(model, params, n) if dt is None else dt
    per_frame = max(1, int(math.ceil(cadence / dt_max - 1e-9)))
    dt = cadence / per_frame

    diag = Diagnostics(dt=dt)
    state = PdeState(u=u, v=v, t=0.0)
    k1 = rhs(u, v)
    ut_sq = np.dot(w, (v if hyp else k1[0]) ** 2)
    cum = 0.0
    prev_layers = track_layers(u, x) if track else np.zeros(0)
    diag.n_layers = prev_layers.size

    def record(t, layers, speed):
        diag.t.append(t)
        diag.mass.append(mass_of(state))
        diag.energy.append(energy_of(state, params))
        diag.cum_dissipation.append(cum)
        diag.layers.append(layers if layers.size == diag.n_layers else np.full(diag.n_layers, np.nan))
        diag.max_speed.append(speed)

    record(0.0, prev_layers, 0.0)
    t = 0.0
    for frame in range(1, frames + 1):
        for _ in range(per_frame):
            u, v = _rk4(rhs, u, v, dt, k1)
            t += dt
            _check_finite(u, v, t)
            k1 = rhs(u, v)
            new_sq = np.dot(w, (v if hyp else k1[0]) ** 2)
            cum += 0.5 * dt * (ut_sq + new_sq)
            ut_sq = new_sq
        t = frame * cadence
        state = PdeState(u=u, v=v, t=t)
        if not track:
            record(t, np.zeros(0), 0.0)
            continue
        layers = track_layers(u, x)
        speed = np.nan
        if layers.size == prev_layers.size and layers.size:
            speed = float(np.max(np.abs(layers - prev_layers)) / cadence)
        record(t, layers, speed)
        lost = layers.size != diag.n_layers
        close = layers.size > 1 and np.min(np.diff(layers)) < collision_cells * grid.dx
        if lost or close:
            diag.collided = True
            diag.t_collision = t
            log.info("layer collision at t = %.6g", t)
            break
        prev_layers = layers
    return diag.finish(), state
