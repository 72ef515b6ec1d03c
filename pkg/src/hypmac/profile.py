"""Standing waves and the metastable multi-layer profiles built from them.

A standing wave solves ``eps^2 phi'' + f(phi) = 0`` on ``[-l/2, l/2]`` with
zero boundary values and a sign fixed by its branch. Waves are parametrised
by the deviation ``beta = 1 - |phi(0)|`` of their extremum from the nearby
well rather than by ``phi(0)`` itself: for short diffusion lengths ``beta``
falls far below machine epsilon relative to 1.

Two substitutions make every integral here smooth. With ``phi = phi0 - s^2``
the first-integral quadrature loses its inverse square-root endpoint
singularity; with ``s = sqrt(2 beta) sinh(w)`` the remaining peak of width
``sqrt(beta)`` near the extremum is stretched to unit scale.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from numpy.polynomial import Chebyshev
from scipy.fft import dct
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (AsymptoticRangeError, BracketFailure, InadmissibleLayers,
                     NoRoot, NoSolution, SingularQuadrature)
from .potential import Potential, wave_constants
from .quadrature import _nodes, gauss_legendre

R0_DEFAULT = 0.1
RHO_DEFAULT = 0.25  # collision gap eps / rho = 4 eps


# ---------------------------------------------------------------------------
# standing waves

def _mean_reaction_stable(q, beta, s2):
    # int_0^1 f(1 - beta - s2 t) dt, finite as s2 -> 0
    x, w = _nodes(8)
    t = 0.5 * (x + 1.0)
    vals = q.f_near_plus(beta + s2[..., None] * t)
    return 0.5 * np.sum(w * vals, axis=-1)


def _stretch(beta):
    return math.sqrt(2.0 * beta)


def _w_max(beta):
    return math.asinh(math.sqrt(1.0 - beta) / _stretch(beta))


def _speed_integrand(q, beta, eps):
    """dx/dw along the wave from its extremum (w = 0) to its zero (w = w_max)."""
    c = _stretch(beta)

    def G(w):
        w = np.asarray(w, dtype=float)
        s = c * np.sinh(w)
        fbar = _mean_reaction_stable(q, beta, s * s)
        return eps * math.sqrt(2.0) * c * np.cosh(w) / np.sqrt(fbar)

    return G


def _half_length(q, beta, eps, tol=None):
    if not 0.0 < beta < 1.0:
        raise ValueError(f"extremum deviation must lie in (0, 1), got {beta}")
    if tol is None:
        # tiny amplitudes: f(phi) ~ phi carries relative noise eps_mach / phi
        tol = 1e-13 if beta < 0.9 else 1e-10
    G = _speed_integrand(q, beta, eps)
    return gauss_legendre(G, 0.0, _w_max(beta), tol=tol, error=SingularQuadrature)


def half_period(phi0, p, eps, sign=1):
    """Distance from the extremum ``phi0`` of a standing wave to its zero."""
    if not 0.0 < sign * phi0 < 1.0:
        raise ValueError(f"sign * phi0 must lie in (0, 1), got {sign * phi0}")
    return _half_length(p.branch(sign), 1.0 - sign * phi0, eps)


def half_period_from_deviation(beta, p, eps, sign=1):
    """Same as :func:`half_period`, parametrised by ``beta = 1 - sign*phi0``."""
    return _half_length(p.branch(sign), beta, eps)


def minimal_half_period(p, eps):
    """Limit of the half period as the wave amplitude goes to zero."""
    fp0 = float(p.df(0.0))
    if fp0 <= 0:
        return 0.0
    return 0.5 * math.pi * eps / math.sqrt(fp0)


@dataclass
class StandingWave:
    length: float
    eps: float
    sign: int
    beta: float
    potential: Potential = field(repr=False)
    _X: Chebyshev = field(repr=False, default=None)
    _G: Chebyshev = field(repr=False, default=None)
    _w_top: float = field(repr=False, default=0.0)
    _tail: object = field(repr=False, default=None)
    _tail_reach: float = field(repr=False, default=0.0)

    @property
    def phi0(self):
        return self.sign * (1.0 - self.beta)

    @property
    def alpha(self):
        """F(phi0), the value of F at the extremum."""
        q = self.potential.branch(self.sign)
        return float(q.height_near_plus(self.beta))

    @property
    def ratio(self):
        return self.eps / self.length

    def deviation(self, x):
        """1 - sign*phi(x) for |x| <= length/2, accurate when tiny."""
        x = np.abs(np.asarray(x, dtype=float))
        w = self._invert(np.minimum(x, 0.5 * self.length))
        s = _stretch(self.beta) * np.sinh(w)
        return self.beta + s * s

    def _invert(self, x):
        X, G = self._X, self._G
        w_tab = np.linspace(0.0, self._w_top, 513)
        w = np.interp(x, X(w_tab), w_tab)
        for _ in range(30):
            step = (X(w) - x) / G(w)
            w = np.clip(w - step, 0.0, self._w_top)
            if np.all(np.abs(step) <= 1e-15 * max(1.0, self._w_top)):
                break
        return w

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        half = 0.5 * self.length
        out = np.empty_like(ax)
        inside = ax <= half
        out[inside] = self.sign * (1.0 - self.deviation(ax[inside]))
        if np.any(~inside):
            d = ax[~inside] - half
            if np.max(d) > self._tail_reach * (1 + 1e-12):
                raise ValueError("standing wave evaluated too far beyond its zeros")
            out[~inside] = self._tail.sol(d)[0]
        return out if out.ndim else float(out)


def _build_wave(length, eps, sign, p, beta, tail_reach):
    q = p.branch(sign)
    G = _speed_integrand(q, beta, eps)
    w_top = _w_max(beta)
    deg = 32
    while True:
        Gc = Chebyshev.interpolate(G, deg, domain=[0.0, w_top])
        tail = np.max(np.abs(Gc.coef[-4:]))
        if tail <= 1e-15 * np.max(np.abs(Gc.coef)) or deg >= 1024:
            break
        deg *= 2
    X = Gc.integ(lbnd=0.0)
    # continuation past the zero: eps^2 psi'' = -f(psi) with the slope at the zero
    # fixed by the first integral eps^2 psi'^2 / 2 = F(0) - F(phi0)
    drop = gauss_legendre(q.f_near_plus, beta, 1.0, tol=1e-14)
    slope = math.sqrt(2.0 * max(drop, 0.0)) / eps
    f = p.f

    def ode(_, y):
        return [y[1], -f(y[0]) / eps ** 2]

    tail = solve_ivp(ode, (0.0, tail_reach), [0.0, -sign * slope], method="DOP853",
                     rtol=1e-12, atol=1e-14, dense_output=True)
    return StandingWave(length=length, eps=eps, sign=sign, beta=beta, potential=p,
                        _X=X, _G=Gc, _w_top=w_top, _tail=tail, _tail_reach=tail_reach)


def _solve_deviation(length, eps, sign, p):
    q = p.branch(sign)
    target = 0.5 * length
    hp_min = minimal_half_period(p, eps)
    if target <= hp_min:
        raise NoSolution(
            f"no standing wave: l/2 = {target:.6g} <= minimal half period {hp_min:.6g} (eps = {eps})")

    def resid(y):
        return _half_length(q, math.exp(y), eps) - target

    y_hi = math.log1p(-1e-9)
    if resid(y_hi) > 0:
        raise NoSolution(f"no standing wave of length {length} at eps = {eps}")
    y_lo = math.log(0.5)
    while resid(y_lo) < 0:
        y_lo -= 5.0
        if y_lo < math.log(1e-300):
            raise BracketFailure(f"could not bracket the extremum for l = {length}, eps = {eps}")
    y = brentq(resid, y_lo, y_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    return math.exp(y)


@lru_cache(maxsize=4096)
def _cached_wave(length, eps, sign, p, tail_reach):
    beta = _solve_deviation(length, eps, sign, p)
    return _build_wave(length, eps, sign, p, beta, tail_reach)


def solve_standing_wave(length, eps, sign, p):
    """Standing wave of the given length and sign (+1 positive, -1 negative)."""
    sign = 1 if sign > 0 else -1
    return _cached_wave(float(length), float(eps), sign, p, 1.5 * float(eps))


# ---------------------------------------------------------------------------
# alpha / beta

@dataclass(frozen=True)
class AlphaBeta:
    r: float
    alpha: float
    beta: float
    mode: str


def alpha_beta_asymptotic(r, A, K):
    """Leading-order alpha and beta for ratio r and wave constants (A, K)."""
    r = np.asarray(r, dtype=float)
    return 0.5 * K * K * A * A * np.exp(-A / r), K * np.exp(-0.5 * A / r)


@lru_cache(maxsize=64)
def _constants(p):
    return wave_constants(p)


def branch_constants(p, sign):
    A_plus, A_minus, K_plus, K_minus = _constants(p)
    return (A_plus, K_plus) if sign > 0 else (A_minus, K_minus)


def alpha_beta(length, eps, sign, p, mode="exact", r0=R0_DEFAULT):
    r = eps / length
    if mode == "exact":
        wave = solve_standing_wave(length, eps, sign, p)
        return AlphaBeta(r=r, alpha=wave.alpha, beta=wave.beta, mode="exact")
    if mode == "asymptotic":
        if not 0 < r < r0:
            raise AsymptoticRangeError(f"r = eps/l = {r:.4g} is outside (0, r0 = {r0})")
        A, K = branch_constants(p, sign)
        a, b = alpha_beta_asymptotic(r, A, K)
        return AlphaBeta(r=r, alpha=float(a), beta=float(b), mode="asymptotic")
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# layer vectors

@dataclass(frozen=True)
class LayerVector:
    h: tuple

    def __init__(self, h):
        object.__setattr__(self, "h", tuple(float(v) for v in np.ravel(h)))

    @property
    def array(self):
        return np.array(self.h)

    @property
    def N(self):
        return len(self.h) - 1

    @property
    def ghosts(self):
        return -self.h[0], 2.0 - self.h[-1]

    @property
    def gaps(self):
        return layer_gaps(self.array)

    @property
    def min_gap(self):
        return float(np.min(self.gaps))

    @property
    def midpoints(self):
        h = self.array
        return np.concatenate([[0.0], 0.5 * (h[1:] + h[:-1]), [1.0]])

    def check(self, eps, rho=RHO_DEFAULT):
        h = self.array
        if h.size == 0:
            raise InadmissibleLayers("at least one layer is required")
        if not (h[0] > 0 and h[-1] < 1 and np.all(np.diff(h) > 0)):
            raise InadmissibleLayers(f"layers must satisfy 0 < h_1 < ... < h_N+1 < 1, got {self.h}")
        gaps = self.gaps
        if np.any(gaps <= eps / rho):
            j = int(np.argmin(gaps)) + 1
            raise InadmissibleLayers(
                f"gap l_{j} = {gaps[j - 1]:.6g} does not exceed eps/rho = {eps / rho:.6g}")
        return self

    def to_json(self):
        return json.dumps(list(self.h))

    @classmethod
    def from_json(cls, text):
        return cls(json.loads(text))


def layer_gaps(h):
    """l_1 = 2 h_1, l_j = h_j - h_{j-1}, l_{N+2} = 2 (1 - h_{N+1})."""
    h = np.asarray(h, dtype=float)
    return np.concatenate([[2.0 * h[0]], np.diff(h), [2.0 * (1.0 - h[-1])]])


def gap_signs(count):
    """Sign (-1)^j of the profile on gaps j = 1..count."""
    return np.array([(-1) ** j for j in range(1, count + 1)])


# ---------------------------------------------------------------------------
# metastable profiles

def cutoff(y):
    """C^2 quintic smoothstep: 0 for y <= -1, 1 for y >= 1."""
    t = np.clip(0.5 * (np.asarray(y, dtype=float) + 1.0), 0.0, 1.0)
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


@dataclass
class MetastableProfile:
    layers: Optional[LayerVector]
    eps: float
    x: np.ndarray
    u: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    mode: str = "exact"
    waves: list = field(default_factory=list, repr=False)
    constant: Optional[float] = None

    @classmethod
    def constant_state(cls, c, n=512):
        x = np.linspace(0.0, 1.0, n + 1)
        return cls(layers=None, eps=float("nan"), x=x, u=np.full_like(x, float(c)),
                   alpha=np.zeros(0), beta=np.zeros(0), constant=float(c))

    @property
    def mass(self):
        return profile_mass(self)

    @property
    def psi(self):
        return float(np.sum(np.diff(self.alpha) ** 2))

    def __call__(self, x):
        if self.constant is not None:
            return np.full_like(np.asarray(x, dtype=float), self.constant)
        return _evaluate_profile(self.layers, self.eps, self.waves, x)

    def to_csv(self, path):
        write_columns(path, ["x", "u"], [self.x, self.u])


def _evaluate_profile(layers, eps, waves, x):
    x = np.asarray(x, dtype=float)
    h = layers.array
    centers = layers.midpoints
    j = np.clip(np.searchsorted(centers, x, side="right") - 1, 0, len(h) - 1)
    out = np.empty_like(x)
    for k in range(len(h)):
        sel = j == k
        if not np.any(sel):
            continue
        xs = x[sel]
        chi = cutoff((xs - h[k]) / eps)
        left, right = waves[k], waves[k + 1]
        val = np.zeros_like(xs)
        use_l = chi < 1.0
        use_r = chi > 0.0
        val[use_l] += (1.0 - chi[use_l]) * left(xs[use_l] - centers[k])
        val[use_r] += chi[use_r] * right(xs[use_r] - centers[k + 1])
        out[sel] = val
    return out


def build_profile(h, eps, p, n=1024, rho=RHO_DEFAULT):
    """Metastable profile u^h sampled on n+1 uniform nodes of [0, 1]."""
    layers = h if isinstance(h, LayerVector) else LayerVector(h)
    layers.check(eps, rho)
    gaps = layers.gaps
    signs = gap_signs(len(gaps))
    waves = [solve_standing_wave(l, eps, s, p) for l, s in zip(gaps, signs)]
    x = np.linspace(0.0, 1.0, n + 1)
    u = _evaluate_profile(layers, eps, waves, x)
    return MetastableProfile(
        layers=layers, eps=eps, x=x, u=u,
        alpha=np.array([w.alpha for w in waves]),
        beta=np.array([w.beta for w in waves]),
        mode="exact", waves=waves)


def barrier_psi(h, eps, p, mode="exact"):
    """Sum over j of (alpha^{j+1} - alpha^j)^2."""
    from .layers import alphas_for_gaps
    alpha = alphas_for_gaps(h, eps, p, mode=mode)
    return float(np.sum(np.diff(alpha) ** 2))


def trapezoid_weights(n):
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    return w


def profile_mass(profile):
    n = len(profile.u) - 1
    return float(np.dot(trapezoid_weights(n), profile.u))


def solve_mass_constraint(xi, M, eps, p, n=4096, rho=RHO_DEFAULT, tol=1e-8):
    """Find h_{N+1} so that the profile with layers (xi, h_{N+1}) has mass M."""
    xi = [float(v) for v in np.ravel(xi)]
    gap = eps / rho
    lo = (xi[-1] if xi else 0.0) + gap * (1 + 1e-9)
    if not xi:
        lo = 0.5 * gap * (1 + 1e-9)
    hi = 1.0 - 0.5 * gap * (1 + 1e-9)
    if lo >= hi:
        raise InadmissibleLayers(f"no admissible position for the last layer after {xi}")

    def excess(last):
        return profile_mass(build_profile(xi + [last], eps, p, n=n, rho=rho)) - M

    a, b = excess(lo), excess(hi)
    if a * b > 0:
        raise NoRoot(f"mass {M} is not reachable with fixed layers {xi} "
                     f"(range {min(a, b) + M:.6g} .. {max(a, b) + M:.6g})")
    last = brentq(excess, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    layers = LayerVector(xi + [last])
    if abs(excess(last)) > tol:
        raise NoRoot(f"mass constraint met only to {abs(excess(last)):.3e}")
    return layers


# ---------------------------------------------------------------------------
# energy

def gradient_energy(u, method="spectral"):
    """Approximate int_0^1 u_x^2 dx for nodal samples on a uniform grid of [0, 1].

    ``spectral`` differentiates the even (cosine) interpolant, which matches the
    Neumann boundary conditions; ``fd`` sums squared forward differences, the
    form that the finite-difference Laplacian dissipates exactly.
    """
    u = np.asarray(u, dtype=float)
    n = u.size - 1
    if method == "fd":
        return float(np.sum(np.diff(u) ** 2) * n)
    if method == "spectral":
        c = dct(u, type=1) / n
        k = np.arange(n + 1) * np.pi
        c[-1] *= 0.5
        return float(0.5 * np.sum((c[1:] * k[1:]) ** 2))
    raise ValueError(f"unknown method {method!r}")


def renormalized_energy(u, v, eps, tau, p, method="spectral"):
    """E/eps: int [tau/(2 eps) v^2 + eps/2 u_x^2 + F(u)/eps] dx."""
    u = np.asarray(u, dtype=float)
    w = trapezoid_weights(u.size - 1)
    total = 0.5 * eps * gradient_energy(u, method) + np.dot(w, p.F(u)) / eps
    if v is not None and tau > 0:
        v = np.asarray(v, dtype=float)
        total += tau / (2.0 * eps) * np.dot(w, v * v)
    return float(total)


# ---------------------------------------------------------------------------
# csv helpers shared with the simulators

def write_columns(path, names, columns):
    columns = [np.asarray(c, dtype=float) for c in columns]
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*columns):
            fh.write(",".join(f"{v:.8g}" for v in row) + "\n")
