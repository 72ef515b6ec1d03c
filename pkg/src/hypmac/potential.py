"""Double-well potentials, damping coefficients and their scalar constants.

A potential ``F`` has wells of equal depth at -1 and +1; the reaction term is
``f = -F'``. Besides plain evaluators, each potential carries ``f`` expressed
in the distance ``b`` from either well, so that quantities which are
exponentially small near the wells (plateau deviations, wave energies) are
computed without catastrophic cancellation.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .errors import (DampingError, DegenerateWell, NegativePotential,
                     NonCriticalWell, WellDepthMismatch)
from .quadrature import fixed_gauss, gauss_legendre

WELL_TOL = 1e-12
VALIDATION_GRID = np.linspace(-1.5, 1.5, 3001)


def _off_wells(grid, radius=1e-6):
    return grid[(np.abs(grid - 1.0) > radius) & (np.abs(grid + 1.0) > radius)]


@dataclass(frozen=True)
class Potential:
    F: Callable
    dF: Callable
    d2F: Callable
    kind: str = "custom"
    coefficients: Optional[Tuple[float, ...]] = None
    # f(1 - b) and f(-1 + b) as functions of the distance b to the well
    f_from_plus: Optional[Callable] = field(default=None, repr=False, compare=False)
    f_from_minus: Optional[Callable] = field(default=None, repr=False, compare=False)

    def f(self, u):
        return -self.dF(u)

    def df(self, u):
        return -self.d2F(u)

    def f_near_plus(self, b):
        if self.f_from_plus is not None:
            return self.f_from_plus(b)
        return self.f(1.0 - b)

    def f_near_minus(self, b):
        if self.f_from_minus is not None:
            return self.f_from_minus(b)
        return self.f(-1.0 + b)

    def height_near_plus(self, b):
        """F(1 - b), integrated from the well so tiny values keep full precision."""
        b = np.asarray(b, dtype=float)
        return fixed_gauss(self.f_near_plus, np.zeros_like(b), b)

    @property
    def is_even(self):
        if self.kind == "quartic":
            return True
        if self.coefficients is not None:
            return all(c == 0.0 for c in self.coefficients[1::2])
        u = VALIDATION_GRID
        return bool(np.allclose(self.F(u), self.F(-u), rtol=1e-13, atol=1e-15))

    def reflected(self):
        """The potential u -> F(-u); its + well plays the role of the - well."""
        F, dF, d2F = self.F, self.dF, self.d2F
        fp, fm = self.f_near_plus, self.f_near_minus
        coeffs = None
        if self.coefficients is not None:
            coeffs = tuple(c * (-1) ** k for k, c in enumerate(self.coefficients))
        return Potential(
            F=lambda u: F(-u),
            dF=lambda u: -dF(-u),
            d2F=lambda u: d2F(-u),
            kind=self.kind if self.kind == "quartic" else "reflected",
            coefficients=coeffs,
            f_from_plus=lambda b: -fm(b),
            f_from_minus=lambda b: -fp(b),
        )

    def branch(self, sign):
        """Potential seen from the well ``sign``; the + well is then the target."""
        return self if sign > 0 else self.reflected()

    @classmethod
    def quartic(cls):
        """F(u) = (u^2 - 1)^2 / 4, written in factored form near the wells."""
        return cls(
            F=lambda u: 0.25 * ((u - 1.0) * (u + 1.0)) ** 2,
            dF=lambda u: u * (u - 1.0) * (u + 1.0),
            d2F=lambda u: 3.0 * u * u - 1.0,
            kind="quartic",
            coefficients=(0.25, 0.0, -0.5, 0.0, 0.25),
            f_from_plus=lambda b: b * (1.0 - b) * (2.0 - b),
            f_from_minus=lambda b: -b * (1.0 - b) * (2.0 - b),
        )

    @classmethod
    def from_coefficients(cls, coefficients):
        """Polynomial potential from ascending coefficients of F."""
        coeffs = tuple(float(c) for c in coefficients)
        P = Polynomial(coeffs)
        dP = P.deriv()
        d2P = dP.deriv()
        # shifted polynomials keep f accurate close to the wells
        fp = -dP(Polynomial([1.0, -1.0]))
        fm = -dP(Polynomial([-1.0, 1.0]))
        return cls(F=P, dF=dP, d2F=d2P, kind="polynomial", coefficients=coeffs,
                   f_from_plus=fp, f_from_minus=fm)

    @classmethod
    def from_callables(cls, F, dF, d2F):
        return cls(F=F, dF=dF, d2F=d2F, kind="custom")

    def scaled(self, lam2):
        """The potential lam2 * F."""
        if self.coefficients is not None:
            return Potential.from_coefficients([lam2 * c for c in self.coefficients])
        F, dF, d2F = self.F, self.dF, self.d2F
        fp, fm = self.f_near_plus, self.f_near_minus
        return Potential(F=lambda u: lam2 * F(u), dF=lambda u: lam2 * dF(u),
                         d2F=lambda u: lam2 * d2F(u), kind="custom",
                         f_from_plus=lambda b: lam2 * fp(b),
                         f_from_minus=lambda b: lam2 * fm(b))


def validate_potential(p):
    wells = np.array([-1.0, 1.0])
    F_w = np.asarray(p.F(wells), dtype=float)
    if np.any(np.abs(F_w) > WELL_TOL):
        raise WellDepthMismatch(f"F(-1), F(1) = {F_w[0]:.3e}, {F_w[1]:.3e}; both must vanish")
    dF_w = np.asarray(p.dF(wells), dtype=float)
    if np.any(np.abs(dF_w) > WELL_TOL):
        raise NonCriticalWell(f"F'(-1), F'(1) = {dF_w[0]:.3e}, {dF_w[1]:.3e}")
    d2F_w = np.asarray(p.d2F(wells), dtype=float)
    if np.any(d2F_w <= WELL_TOL):
        raise DegenerateWell(f"F''(-1), F''(1) = {d2F_w[0]:.3e}, {d2F_w[1]:.3e}; both must be > 0")
    u = _off_wells(VALIDATION_GRID)
    vals = np.asarray(p.F(u), dtype=float)
    bad = vals <= 0.0
    if np.any(bad):
        raise NegativePotential(f"F({u[bad][0]:.4f}) = {vals[bad][0]:.3e} <= 0")
    return p


@dataclass(frozen=True)
class Damping:
    g: Callable
    sigma: float
    kind: str = "one"
    value: Optional[float] = None
    tau: Optional[float] = None

    def __call__(self, u):
        return self.g(u)

    @classmethod
    def one(cls):
        return cls(g=lambda u: np.ones_like(np.asarray(u, dtype=float)), sigma=1.0,
                   kind="one", value=1.0)

    @classmethod
    def constant(cls, c):
        c = float(c)
        if c <= 0:
            raise DampingError(f"constant damping must be positive, got {c}")
        return cls(g=lambda u: np.full_like(np.asarray(u, dtype=float), c), sigma=c,
                   kind="constant", value=c)

    @classmethod
    def relaxation(cls, potential, tau):
        """g(u) = 1 - tau f'(u), the Maxwell-Cattaneo relaxation damping."""
        tau = float(tau)
        fprime_max = float(np.max(potential.df(VALIDATION_GRID)))
        if tau <= 0 or (fprime_max > 0 and tau >= 1.0 / fprime_max):
            raise DampingError(
                f"relaxation damping needs 0 < tau < 1/max f' = {1.0 / fprime_max:.6g}, got {tau}")
        d2F = potential.d2F

        def g(u):
            return 1.0 + tau * d2F(u)

        sigma = float(np.min(g(VALIDATION_GRID)))
        return cls(g=g, sigma=sigma, kind="relaxation", tau=tau)

    @classmethod
    def custom(cls, g, sigma=None):
        if sigma is None:
            sigma = float(np.min(g(VALIDATION_GRID)))
        return validate_damping(cls(g=g, sigma=float(sigma), kind="custom"))

    def max_value(self):
        return float(np.max(self.g(VALIDATION_GRID)))


def validate_damping(d):
    if not d.sigma > 0:
        raise DampingError(f"damping lower bound sigma = {d.sigma} must be positive")
    vals = np.asarray(d.g(VALIDATION_GRID), dtype=float)
    if np.any(vals < d.sigma * (1 - 1e-12)):
        raise DampingError(f"g drops to {vals.min():.6g} below sigma = {d.sigma:.6g}")
    return d


@dataclass(frozen=True)
class ModelParams:
    eps: float
    tau: float
    potential: Potential = field(default_factory=Potential.quartic)
    damping: Damping = field(default_factory=Damping.one)

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.tau >= 0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")


def transition_energy(p, tol=1e-13):
    """c_F: integral of sqrt(2F) over [-1, 1]."""
    return gauss_legendre(lambda s: np.sqrt(2.0 * np.maximum(p.F(s), 0.0)), -1.0, 1.0, tol=tol)


def _log_half_K(p):
    # integral over t in (0,1) of A/sqrt(2F(t)) - 1/(1-t), written in s = 1 - t as
    # (A^2 s^2 - 2R) / (s sqrt(2R) (A s + sqrt(2R))) with R = F(1 - s)
    A2 = float(p.d2F(1.0))
    A = np.sqrt(A2)

    def excess(b):
        # f(1 - b) - A^2 b, integrated to give R(s) - A^2 s^2 / 2
        return p.f_near_plus(b) - A2 * b

    def integrand(s):
        two_R = 2.0 * p.height_near_plus(s)
        num = -2.0 * fixed_gauss(excess, np.zeros_like(s), s)
        root = np.sqrt(two_R)
        return num / (s * root * (A * s + root))

    return gauss_legendre(integrand, 0.0, 1.0, tol=1e-13)


def wave_constants(p):
    """Return (A+, A-, K+, K-) of the standing-wave asymptotics."""
    A_plus = float(np.sqrt(p.d2F(1.0)))
    A_minus = float(np.sqrt(p.d2F(-1.0)))
    K_plus = 2.0 * np.exp(_log_half_K(p))
    K_minus = K_plus if p.is_even else 2.0 * np.exp(_log_half_K(p.reflected()))
    return A_plus, A_minus, float(K_plus), float(K_minus)


def rate_constant(p):
    """A = sqrt(min F''(+-1)), the exponential rate of the slow motion."""
    return float(np.sqrt(min(p.d2F(1.0), p.d2F(-1.0))))


def damping_average(p, d, tol=1e-13):
    """gamma_{F,g}: the sqrt(F)-weighted mean of g over [-1, 1]."""
    def root_F(s):
        return np.sqrt(np.maximum(p.F(s), 0.0))

    num = gauss_legendre(lambda s: root_F(s) * d.g(s), -1.0, 1.0, tol=tol)
    den = gauss_legendre(root_F, -1.0, 1.0, tol=tol)
    return num / den
