"""Experiments: PDE-vs-ODE comparison, slowness slope fits, asymptotics and tau sweeps.

Every driver is deterministic. Sweeps may fan out over a process pool; results
are always reduced in sorted parameter order so serial and parallel runs give
identical reports.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import (AsymptoticRangeError, InsufficientSamples, NoSolution,
                     WindowMismatch)
from .layers import OdeModel, forcing, integrate_layers
from .pde import run_simulation
from .potential import Damping, ModelParams, Potential, rate_constant
from .profile import (R0_DEFAULT, RHO_DEFAULT, alpha_beta, alpha_beta_asymptotic,
                      branch_constants, build_profile, write_columns)

log = logging.getLogger(__name__)

PDE_KIND = {"AC": "AC", "MAC": "MAC", "HYP_AC": "HYP_AC", "HYP_MAC": "HYP_MAC"}


# ---------------------------------------------------------------------------
# picklable stand-ins for potentials and dampings (process-pool workers)

def _portable(potential, damping):
    if potential.kind == "quartic":
        pspec = ("quartic",)
    elif potential.kind == "polynomial":
        pspec = ("polynomial", potential.coefficients)
    else:
        return None
    if damping.kind == "one":
        dspec = ("one",)
    elif damping.kind == "constant":
        dspec = ("constant", damping.value)
    elif damping.kind == "relaxation":
        dspec = ("relaxation", damping.tau)
    else:
        return None
    return pspec, dspec


def _restore(spec):
    pspec, dspec = spec
    p = Potential.quartic() if pspec[0] == "quartic" else Potential.from_coefficients(pspec[1])
    if dspec[0] == "one":
        d = Damping.one()
    elif dspec[0] == "constant":
        d = Damping.constant(dspec[1])
    else:
        d = Damping.relaxation(p, dspec[1])
    return p, d


def _fan_out(fn, jobs, threads):
    """Run fn(**job) for each job, in a pool when allowed; results in job order."""
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_call, [(fn, job) for job in jobs]))
    return [fn(**job) for job in jobs]


def _call(item):
    fn, job = item
    return fn(**job)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if not math.isfinite(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _text_table(names, rows):
    cells = [[str(n) for n in names]] + [[f"{v:.8g}" if isinstance(v, float) else str(v)
                                          for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(names))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


# ---------------------------------------------------------------------------
# PDE vs ODE

@dataclass
class ComparisonReport:
    errors: list
    window: tuple
    t_collision_pde: Optional[float]
    t_collision_ode: Optional[float]
    meta: dict
    t: np.ndarray = field(repr=False, default=None)
    pde_layers: np.ndarray = field(repr=False, default=None)
    ode_layers: np.ndarray = field(repr=False, default=None)

    @property
    def max_error(self):
        return max(self.errors)

    def to_dict(self):
        return _jsonable({"errors": self.errors, "max_error": self.max_error,
                          "window": list(self.window),
                          "t_collision_pde": self.t_collision_pde,
                          "t_collision_ode": self.t_collision_ode, "meta": self.meta})

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_text(self):
        rows = [(j + 1, e) for j, e in enumerate(self.errors)]
        head = (f"window [{self.window[0]:.6g}, {self.window[1]:.6g}]  "
                f"collision pde={self.t_collision_pde} ode={self.t_collision_ode}")
        return head + "\n" + _text_table(["layer", "sup_error"], rows)

    def to_csv(self, path):
        n = self.pde_layers.shape[1]
        names = ["t"] + [f"pde_{j}" for j in range(1, n + 1)] + [f"ode_{j}" for j in range(1, n + 1)]
        write_columns(path, names, [self.t] + list(self.pde_layers.T) + list(self.ode_layers.T))


def compare_pde_ode(h, eps, model="MAC", tau=0.0, potential=None, damping=None, n=512,
                    t_end=50.0, cadence=0.5, tol=1e-9, rho=RHO_DEFAULT, ode_eps=None,
                    alpha_mode="asymptotic"):
    """Run the PDE from u^h (u1 = 0) and the layer ODE from h; compare positions.

    ``ode_eps`` lets the ODE run at a different epsilon (a negative control).
    Both records are truncated to their common window.
    """
    potential = potential or Potential.quartic()
    damping = damping or Damping.one()
    h = np.asarray(h, dtype=float)
    params = ModelParams(eps=eps, tau=tau, potential=potential, damping=damping)
    u0 = build_profile(h, eps, potential, n=n, rho=rho).u
    diag, _ = run_simulation(u0, np.zeros_like(u0), PDE_KIND[model], params, t_end, cadence)

    ode = OdeModel.from_damping(model, ode_eps or eps, tau=tau, potential=potential,
                                damping=damping, rho=rho, alpha_mode=alpha_mode)
    good = np.all(np.isfinite(diag.layers), axis=1)
    hdot = "quasi-static"
    if ode.hyperbolic and good.sum() > 1:
        # launch from the PDE: velocity of the first two tracked frames
        hdot = (diag.layers[1] - diag.layers[0]) / (diag.t[1] - diag.t[0])
    traj = integrate_layers(h, ode, t_end, tol=tol, cadence=cadence, hdot_policy=hdot)

    t_hi = min(diag.t[good][-1], traj.t[-1])
    keep = good & (diag.t <= t_hi + 1e-12)
    if keep.sum() < 2:
        raise WindowMismatch(f"common window [0, {t_hi:.4g}] holds fewer than two frames")
    t = diag.t[keep]
    pde = diag.layers[keep]
    odes = traj.at(t)
    errors = [float(e) for e in np.max(np.abs(pde - odes), axis=0)]
    meta = {"model": model, "eps": eps, "ode_eps": ode_eps or eps, "tau": tau, "N": len(h) - 1,
            "h": h.tolist(), "n": n, "dt": diag.dt, "t_end": t_end, "cadence": cadence,
            "tol": tol, "rho": rho, "alpha_mode": alpha_mode}
    return ComparisonReport(errors=errors, window=(float(t[0]), float(t[-1])),
                            t_collision_pde=diag.t_collision, t_collision_ode=traj.t_collision,
                            meta=meta, t=t, pde_layers=pde, ode_layers=odes)


# ---------------------------------------------------------------------------
# exponential slowness

@dataclass
class SlopeFit:
    eps: list
    speeds: list
    inv_eps: list
    ln_speed: list
    slope: float
    intercept: float
    predicted: float
    deviation: float
    # the same fit for ln(speed / eps), i.e. with the explicit eps prefactor of
    # the layer equations divided out
    slope_reduced: float
    deviation_reduced: float
    method: str
    gap: float
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return _jsonable(asdict(self))

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_text(self):
        rows = list(zip(self.eps, self.inv_eps, self.speeds, self.ln_speed))
        tail = (f"slope {self.slope:.6g} (reduced {self.slope_reduced:.6g}) vs predicted "
                f"{self.predicted:.6g}: deviation {self.deviation:+.4f} "
                f"(reduced {self.deviation_reduced:+.4f})")
        return _text_table(["eps", "1/eps", "speed", "ln_speed"], rows) + "\n" + tail

    def to_csv(self, path):
        write_columns(path, ["eps", "inv_eps", "speed", "ln_speed"],
                      [self.eps, self.inv_eps, self.speeds, self.ln_speed])


def _window_speed(t, speeds, start, stop):
    """Largest finite speed recorded in (start, start + (stop - start) / 4]."""
    t = np.asarray(t)
    speeds = np.asarray(speeds, dtype=float)
    ok = (t > start) & np.isfinite(speeds)
    sel = ok & (t <= start + 0.25 * (stop - start) + 1e-12)
    if not np.any(sel) and np.any(ok):
        # very short run: take the first speed after the start
        sel = t == t[ok][0]
    if not np.any(sel):
        raise InsufficientSamples(f"no finite speed recorded after t = {start:g}")
    return float(np.max(speeds[sel]))


def _initial_field(h, eps, p, n, rho):
    try:
        return build_profile(h, eps, p, n=n, rho=rho).u
    except NoSolution:
        # no standing wave fits some gap: fall back to a product of kinks
        log.info("no metastable profile at eps = %g; using a tanh product", eps)
        x = np.linspace(0.0, 1.0, n + 1)
        A = math.sqrt(float(p.d2F(1.0)))
        u = -np.ones_like(x)
        for hj in h:
            u = u * np.tanh(A * (x - hj) / (2.0 * eps))
        return u


def _pde_speed(eps, h, model, tau, spec, n, t_end, cadence, rho, t_relax):
    p, d = _restore(spec)
    params = ModelParams(eps=eps, tau=tau, potential=p, damping=d)
    u0 = _initial_field(h, eps, p, n, rho)
    diag, _ = run_simulation(u0, np.zeros_like(u0), PDE_KIND[model], params, t_end, cadence)
    run = diag.t_collision if diag.collided else t_end
    return _window_speed(diag.t, diag.max_speed, t_relax, run)


def _ode_speed(eps, h, model, tau, spec, t_end, cadence, rho, tol):
    p, d = _restore(spec)
    ode = OdeModel.from_damping(model, eps, tau=tau, potential=p, damping=d, rho=rho)
    traj = integrate_layers(h, ode, t_end, tol=tol, cadence=cadence)
    if traj.hdot is not None:
        speeds = np.max(np.abs(traj.hdot), axis=1)
    else:
        speeds = np.array([np.max(np.abs(forcing(row, ode))) for row in traj.h])
    run = traj.t_collision if traj.collided else t_end
    return _window_speed(traj.t, speeds, 0.0, run)


def _fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def metastability_sweep(eps_list, h=(0.35, 0.60), method="ode", model="AC", tau=0.0,
                        potential=None, damping=None, n=512, t_end=None, cadence=None,
                        rho=1.0, tol=1e-10, t_relax=1.0, threads=1):
    """Fit ln(max layer speed) against 1/eps and compare with -A * (minimal gap).

    The speed is the largest tracked speed over the first quarter of each run;
    a run ends at t_end or at a collision. PDE runs first spend ``t_relax``
    settling onto the slow manifold, and that phase is not measured.
    """
    eps_list = sorted({float(e) for e in eps_list})
    if len(eps_list) < 3:
        raise InsufficientSamples(f"need at least 3 distinct eps values, got {len(eps_list)}")
    potential = potential or Potential.quartic()
    damping = damping or Damping.one()
    spec = _portable(potential, damping)
    if spec is None:
        raise ValueError("sweeps need a quartic or polynomial potential and a named damping")
    h = [float(v) for v in h]
    if method == "pde":
        t_end = 40.0 if t_end is None else t_end
        cadence = 0.05 if cadence is None else cadence
        jobs = [dict(eps=e, h=h, model=model, tau=tau, spec=spec, n=n, t_end=t_end,
                     cadence=cadence, rho=rho, t_relax=t_relax) for e in eps_list]
        speeds = _fan_out(_pde_speed, jobs, threads)
    elif method == "ode":
        t_end = 0.1 if t_end is None else t_end
        cadence = t_end / 100.0 if cadence is None else cadence
        jobs = [dict(eps=e, h=h, model=model, tau=tau, spec=spec, t_end=t_end,
                     cadence=cadence, rho=rho, tol=tol) for e in eps_list]
        speeds = _fan_out(_ode_speed, jobs, threads)
    else:
        raise ValueError(f"unknown method {method!r}")

    inv = [1.0 / e for e in eps_list]
    ln_speed = [math.log(s) for s in speeds]
    slope, intercept = _fit(inv, ln_speed)
    reduced, _ = _fit(inv, [ls - math.log(e) for ls, e in zip(ln_speed, eps_list)])
    gap = float(np.min(np.diff(h)))
    predicted = -rate_constant(potential) * gap
    return SlopeFit(eps=eps_list, speeds=speeds, inv_eps=inv, ln_speed=ln_speed, slope=slope,
                    intercept=intercept, predicted=predicted,
                    deviation=(slope - predicted) / abs(predicted),
                    slope_reduced=reduced, deviation_reduced=(reduced - predicted) / abs(predicted),
                    method=method, gap=gap,
                    meta={"h": h, "model": model, "tau": tau, "n": n, "t_end": t_end,
                          "cadence": cadence, "rho": rho, "tol": tol,
                          "t_relax": t_relax if method == "pde" else 0.0})


# ---------------------------------------------------------------------------
# asymptotics

@dataclass
class SweepTable:
    names: list
    rows: list
    monotone: Optional[bool] = None
    meta: dict = field(default_factory=dict)

    def column(self, name):
        return np.array([row[self.names.index(name)] for row in self.rows], dtype=float)

    def to_dict(self):
        return _jsonable({"columns": self.names, "rows": self.rows, "monotone": self.monotone,
                          "meta": self.meta})

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_text(self):
        return _text_table(self.names, self.rows)

    def to_csv(self, path):
        write_columns(path, self.names, [self.column(c) for c in self.names])


def asymptotics_sweep(r_list, potential=None, sign=1, r0=R0_DEFAULT):
    """Exact (standing-wave) versus leading-order alpha and beta for each r."""
    potential = potential or Potential.quartic()
    r_list = [float(r) for r in r_list]
    bad = [r for r in r_list if not 0 < r < r0]
    if bad:
        raise AsymptoticRangeError(f"r values {bad} are outside (0, r0 = {r0})")
    A, K = branch_constants(potential, sign)
    rows = []
    for r in r_list:
        exact = alpha_beta(1.0, r, sign, potential, mode="exact")
        a, b = alpha_beta_asymptotic(r, A, K)
        rows.append([r, exact.alpha, float(a), abs(exact.alpha - a) / exact.alpha,
                     exact.beta, float(b), abs(exact.beta - b) / exact.beta])
    names = ["r", "alpha_exact", "alpha_asym", "alpha_rel_err", "beta_exact", "beta_asym",
             "beta_rel_err"]
    order = np.argsort([row[0] for row in rows])[::-1]
    errs = [rows[i][-1] for i in order]
    monotone = bool(all(b < a for a, b in zip(errs, errs[1:])))
    return SweepTable(names=names, rows=rows, monotone=monotone,
                      meta={"sign": sign, "r0": r0, "A": A, "K": K})


# ---------------------------------------------------------------------------
# tau -> 0

def tau_limit_study(taus, h0=(0.3, 0.65), eps=0.1, t_end=150.0, rho=0.5, tol=1e-11,
                    cadence=None, potential=None):
    """Sup-norm distance between HYP_MAC (gamma = 1) and MAC layer trajectories.

    Each hyperbolic run starts from the MAC velocity at h0. A tau of 0 is the
    MAC trajectory itself.
    """
    potential = potential or Potential.quartic()
    cadence = t_end / 200.0 if cadence is None else cadence
    h0 = np.asarray(h0, dtype=float)
    mac = OdeModel("MAC", eps, potential=potential, rho=rho)
    ref = integrate_layers(h0, mac, t_end, tol=tol, cadence=cadence)
    hdot0 = forcing(h0, mac)
    rows = []
    for tau in sorted({float(t) for t in taus}, reverse=True):
        if tau == 0.0:
            rows.append([0.0, 0.0, float("nan")])
            continue
        hyp = OdeModel("HYP_MAC", eps, tau=tau, gamma=1.0, potential=potential, rho=rho)
        traj = integrate_layers(h0, hyp, t_end, tol=tol, cadence=cadence, hdot_policy=hdot0)
        t_hi = min(ref.t[-1], traj.t[-1])
        t = ref.t[ref.t <= t_hi]
        dist = float(np.max(np.abs(traj.at(t) - ref.at(t))))
        ratio = dist / rows[-1][1] if rows and rows[-1][1] > 0 else float("nan")
        rows.append([tau, dist, ratio])
    ratios = [row[2] for row in rows if math.isfinite(row[2])]
    return SweepTable(names=["tau", "distance", "ratio"], rows=rows,
                      monotone=bool(all(b[1] <= a[1] for a, b in zip(rows, rows[1:]))),
                      meta={"h0": h0.tolist(), "eps": eps, "t_end": t_end, "rho": rho,
                            "tol": tol, "gamma": 1.0, "ratios": ratios,
                            "mac_collided": ref.collided})
