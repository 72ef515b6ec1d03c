"""Command-line entry point: ``hypmac <subcommand> --config run.json``.

Exit codes: 0 success (a layer collision is a flagged success), 1 domain
error, 2 configuration error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import REQUIRED, RunConfig, emit_config, load_config, require
from .errors import ConfigError, HypmacError

log = logging.getLogger("hypmac")


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_constants(cfg, out):
    from .potential import damping_average, transition_energy, wave_constants
    p = cfg.build_potential()
    d = cfg.build_damping(p)
    A_p, A_m, K_p, K_m = wave_constants(p)
    result = {"c_F": transition_energy(p), "A_plus": A_p, "A_minus": A_m,
              "K_plus": K_p, "K_minus": K_m, "gamma": damping_average(p, d)}
    for k, v in result.items():
        print(f"{k:8s} {v:.12g}")
    _write_json(out / "constants.json", result)


def cmd_profile(cfg, out):
    from .profile import build_profile, renormalized_energy, solve_mass_constraint
    p = cfg.build_potential()
    h = cfg.layers
    if h is None:
        h = solve_mass_constraint(cfg.xi, cfg.mass, cfg.epsilon, p, rho=cfg.rho).h
    prof = build_profile(h, cfg.epsilon, p, n=cfg.n, rho=cfg.rho)
    prof.to_csv(out / "profile.csv")
    summary = {"layers": list(h), "alpha": prof.alpha.tolist(), "beta": prof.beta.tolist(),
               "mass": prof.mass, "psi": prof.psi,
               "energy": renormalized_energy(prof.u, None, cfg.epsilon, 0.0, p)}
    _write_json(out / "profile.json", summary)
    print(json.dumps(summary, indent=2))


def _initial_velocity(cfg, u0):
    if isinstance(cfg.u1, list):
        return np.asarray(cfg.u1, dtype=float)
    return np.full_like(u0, cfg.u1)


def cmd_simulate(cfg, out):
    from .pde import run_simulation, write_state_csv
    from .profile import build_profile
    params = cfg.params()
    u0 = build_profile(cfg.layers, cfg.epsilon, params.potential, n=cfg.n, rho=cfg.rho).u
    diag, state = run_simulation(u0, _initial_velocity(cfg, u0), cfg.kind, params, cfg.t_end,
                                 cfg.resolved_cadence())
    diag.to_csv(out / "diagnostics.csv")
    write_state_csv(state, out / "final_state.csv")
    summary = {"collided": diag.collided, "t_collision": diag.t_collision, "dt": diag.dt,
               "mass_drift": float(np.max(np.abs(diag.mass - diag.mass[0]))),
               "final_layers": [float(v) for v in diag.layers[-1]]}
    _write_json(out / "simulate.json", summary)
    print(json.dumps(summary, indent=2))


def cmd_layers(cfg, out):
    from .layers import OdeModel, integrate_layers
    p = cfg.build_potential()
    model = OdeModel.from_damping(cfg.kind, cfg.epsilon, tau=cfg.tau, potential=p,
                                  damping=cfg.build_damping(p), alpha_mode=cfg.alpha_mode,
                                  rho=cfg.rho)
    traj = integrate_layers(cfg.layers, model, cfg.t_end, tol=cfg.tol,
                            cadence=cfg.resolved_cadence(), hdot_policy=cfg.hdot0)
    traj.to_csv(out / "trajectory.csv")
    print(f"final layers {np.array2string(traj.final, precision=8)}; "
          f"collided {traj.collided} at {traj.t_collision}")


def cmd_compare(cfg, out):
    from .experiments import compare_pde_ode
    p = cfg.build_potential()
    report = compare_pde_ode(cfg.layers, cfg.epsilon, model=cfg.kind, tau=cfg.tau, potential=p,
                             damping=cfg.build_damping(p), n=cfg.n, t_end=cfg.t_end,
                             cadence=cfg.resolved_cadence(), tol=cfg.tol, rho=cfg.rho,
                             alpha_mode=cfg.alpha_mode)
    report.to_json(out / "comparison.json")
    report.to_csv(out / "comparison.csv")
    (out / "comparison.txt").write_text(report.to_text() + "\n")
    print(report.to_text())


def cmd_sweep_metastability(cfg, out, threads):
    from .experiments import metastability_sweep
    p = cfg.build_potential()
    fit = metastability_sweep(cfg.eps_list, h=cfg.layers, method=cfg.method,
                              model=cfg.kind or "AC", tau=cfg.tau, potential=p,
                              damping=cfg.build_damping(p), n=cfg.n, t_end=cfg.t_end,
                              cadence=cfg.cadence, rho=cfg.rho, tol=cfg.tol,
                              t_relax=cfg.t_relax, threads=threads or cfg.threads)
    fit.to_json(out / "metastability.json")
    fit.to_csv(out / "metastability.csv")
    print(fit.to_text())


def cmd_sweep_asymptotics(cfg, out):
    from .experiments import asymptotics_sweep
    table = asymptotics_sweep(cfg.r_list, cfg.build_potential())
    table.to_json(out / "asymptotics.json")
    table.to_csv(out / "asymptotics.csv")
    print(table.to_text())


def cmd_sweep_tau(cfg, out):
    from .experiments import tau_limit_study
    table = tau_limit_study(cfg.tau_list, h0=cfg.layers, eps=cfg.epsilon, t_end=cfg.t_end,
                            rho=cfg.rho, tol=cfg.tol, cadence=cfg.cadence,
                            potential=cfg.build_potential())
    table.to_json(out / "tau_limit.json")
    table.to_csv(out / "tau_limit.csv")
    print(table.to_text())


COMMANDS = {
    "constants": cmd_constants,
    "profile": cmd_profile,
    "simulate": cmd_simulate,
    "layers": cmd_layers,
    "compare": cmd_compare,
    "sweep-metastability": cmd_sweep_metastability,
    "sweep-asymptotics": cmd_sweep_asymptotics,
    "sweep-tau": cmd_sweep_tau,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="hypmac", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON run configuration",
                        required=bool(REQUIRED[name]))
        sp.add_argument("--out-dir", default=".", help="directory for outputs (default: .)")
        sp.add_argument("--threads", type=int, default=None, help="worker processes for sweeps")
        sp.add_argument("-v", "--verbose", action="store_true")
    return parser


def dispatch(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        require(cfg, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.command == "sweep-metastability":
            cmd_sweep_metastability(cfg, out, args.threads)
        else:
            COMMANDS[args.command](cfg, out)
        _write_json(out / "resolved_config.json", emit_config(cfg))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HypmacError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
