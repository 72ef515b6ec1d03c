"""JSON run configuration: schema check, defaults, consistency, round trip."""

import json
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Union

import numpy as np

from .errors import ConsistencyError, HypmacError, SchemaError
from .potential import Damping, ModelParams, Potential, validate_damping, validate_potential

PDE_MODELS = ("ac", "mac", "hyp-ac", "hyp-mac")
ODE_MODELS = PDE_MODELS + ("ch-n3",)
HDOT_POLICIES = ("quasi-static", "projected", "zero")


def internal_kind(model):
    return model.upper().replace("-", "_")


@dataclass
class RunConfig:
    model: Optional[str] = None
    potential: Union[str, list] = "quartic"
    damping: Union[str, dict] = "one"
    epsilon: Optional[float] = None
    tau: float = 0.0
    N: Optional[int] = None
    layers: Optional[list] = None
    xi: Optional[list] = None
    mass: Optional[float] = None
    hdot0: Union[str, list] = "quasi-static"
    u1: Union[float, list] = 0.0
    n: int = 512
    t_end: Optional[float] = None
    cadence: Optional[float] = None
    tol: float = 1e-9
    rho: float = 0.25
    alpha_mode: str = "asymptotic"
    method: str = "ode"
    eps_list: Optional[list] = None
    r_list: Optional[list] = None
    tau_list: Optional[list] = None
    t_relax: float = 1.0
    threads: int = 1

    # -- derived objects -------------------------------------------------

    def build_potential(self):
        if self.potential == "quartic":
            return Potential.quartic()
        return Potential.from_coefficients(self.potential)

    def build_damping(self, potential=None):
        d = self.damping
        if d == "one":
            return Damping.one()
        if d["kind"] == "constant":
            return Damping.constant(d["value"])
        return Damping.relaxation(potential or self.build_potential(), d.get("tau", self.tau))

    def params(self):
        p = self.build_potential()
        return ModelParams(eps=self.epsilon, tau=self.tau, potential=p,
                           damping=self.build_damping(p))

    @property
    def kind(self):
        return internal_kind(self.model) if self.model else None

    def resolved_cadence(self):
        return self.cadence if self.cadence is not None else self.t_end / 100.0


_TYPES = {
    "model": str, "epsilon": float, "tau": float, "N": int, "mass": float, "n": int,
    "t_end": float, "cadence": float, "tol": float, "rho": float, "alpha_mode": str,
    "method": str, "t_relax": float, "threads": int,
}
_FLOAT_LISTS = ("layers", "xi", "eps_list", "r_list", "tau_list")


def _number(key, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(key, f"expected a number, got {value!r}")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise SchemaError(key, f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(key, f"must be finite, got {value!r}")
    return value


def _float_list(key, value):
    if not isinstance(value, list) or not value:
        raise SchemaError(key, f"expected a nonempty list of numbers, got {value!r}")
    return [_number(key, v, float) for v in value]


def _schema(doc):
    if not isinstance(doc, dict):
        raise SchemaError("<document>", "config must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in doc.items():
        if key not in known:
            raise SchemaError(key, "unknown key")
        if key in _TYPES:
            kind = _TYPES[key]
            if kind is str:
                if not isinstance(value, str):
                    raise SchemaError(key, f"expected a string, got {value!r}")
                out[key] = value
            else:
                out[key] = _number(key, value, kind)
        elif key in _FLOAT_LISTS:
            out[key] = _float_list(key, value)
        elif key == "potential":
            if value == "quartic":
                out[key] = value
            elif isinstance(value, dict) and set(value) == {"coefficients"}:
                out[key] = _float_list("potential", value["coefficients"])
            elif isinstance(value, list):
                out[key] = _float_list("potential", value)
            else:
                raise SchemaError(key, 'expected "quartic" or a list of coefficients')
        elif key == "damping":
            if value == "one":
                out[key] = value
            elif isinstance(value, dict) and value.get("kind") in ("constant", "relaxation"):
                extra = set(value) - {"kind", "value", "tau"}
                if extra:
                    raise SchemaError(key, f"unknown damping field {sorted(extra)[0]!r}")
                d = {"kind": value["kind"]}
                for sub in ("value", "tau"):
                    if sub in value:
                        d[sub] = _number(f"damping.{sub}", value[sub], float)
                if d["kind"] == "constant" and "value" not in d:
                    raise SchemaError("damping.value", "constant damping needs a value")
                out[key] = d
            else:
                raise SchemaError(key, 'expected "one" or {"kind": "constant"|"relaxation", ...}')
        elif key == "hdot0":
            if isinstance(value, str):
                if value not in HDOT_POLICIES:
                    raise SchemaError(key, f"policy must be one of {HDOT_POLICIES}")
                out[key] = value
            else:
                out[key] = _float_list(key, value)
        elif key == "u1":
            out[key] = _float_list(key, value) if isinstance(value, list) else _number(key, value, float)
    return out


def _consistency(cfg):
    if cfg.model is not None and cfg.model not in ODE_MODELS:
        raise ConsistencyError("model", f"unknown model {cfg.model!r}; expected one of {ODE_MODELS}")
    if cfg.tau < 0:
        raise ConsistencyError("tau", "must be nonnegative")
    if cfg.model in ("hyp-ac", "hyp-mac") and not cfg.tau > 0:
        raise ConsistencyError("tau", f"model {cfg.model} needs tau > 0")
    if cfg.epsilon is not None and not cfg.epsilon > 0:
        raise ConsistencyError("epsilon", "must be positive")
    if cfg.n < 64:
        raise ConsistencyError("n", "grid needs at least 64 cells")
    for key in ("t_end", "cadence", "tol", "rho"):
        val = getattr(cfg, key)
        if val is not None and not val > 0:
            raise ConsistencyError(key, "must be positive")
    if cfg.alpha_mode not in ("asymptotic", "exact"):
        raise ConsistencyError("alpha_mode", "must be 'asymptotic' or 'exact'")
    if cfg.method not in ("ode", "pde"):
        raise ConsistencyError("method", "must be 'ode' or 'pde'")
    if cfg.layers is not None:
        h = np.asarray(cfg.layers)
        if cfg.model == "ch-n3" and h.size != 3:
            raise ConsistencyError("layers", "ch-n3 needs exactly three layers")
        if not (h[0] > 0 and h[-1] < 1 and np.all(np.diff(h) > 0)):
            raise ConsistencyError("layers", "must be strictly increasing inside (0, 1)")
        if cfg.epsilon is not None:
            from .profile import layer_gaps
            if np.min(layer_gaps(h)) <= cfg.epsilon / cfg.rho:
                raise ConsistencyError("layers", f"a gap does not exceed eps/rho = {cfg.epsilon / cfg.rho:.6g}")
        if cfg.N is not None and cfg.N != h.size - 1:
            raise ConsistencyError("N", f"N = {cfg.N} but {h.size} layers given")
        if isinstance(cfg.hdot0, list) and len(cfg.hdot0) != h.size:
            raise ConsistencyError("hdot0", "needs one velocity per layer")
    if isinstance(cfg.u1, list) and len(cfg.u1) != cfg.n + 1:
        raise ConsistencyError("u1", f"needs n + 1 = {cfg.n + 1} samples")
    try:
        p = validate_potential(cfg.build_potential())
    except HypmacError as exc:
        raise ConsistencyError("potential", str(exc)) from exc
    try:
        validate_damping(cfg.build_damping(p))
    except HypmacError as exc:
        raise ConsistencyError("damping", str(exc)) from exc


def parse_config(doc):
    """Validated RunConfig from a JSON object (dict) or JSON text."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError("<document>", f"invalid JSON: {exc}") from exc
    cfg = RunConfig(**_schema(doc))
    _consistency(cfg)
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SchemaError("--config", f"cannot read {path}: {exc}") from exc
    return parse_config(text)


def emit_config(cfg):
    """JSON-ready dict; parse_config(emit_config(c)) == c."""
    return {k: v for k, v in asdict(cfg).items() if v is not None}


REQUIRED = {
    "constants": (),
    "profile": ("epsilon",),
    "simulate": ("model", "epsilon", "layers", "t_end"),
    "layers": ("model", "epsilon", "layers", "t_end"),
    "compare": ("model", "epsilon", "layers", "t_end"),
    "sweep-metastability": ("eps_list", "layers"),
    "sweep-asymptotics": ("r_list",),
    "sweep-tau": ("tau_list", "epsilon", "layers", "t_end"),
}


def require(cfg, command):
    for key in REQUIRED[command]:
        if getattr(cfg, key) is None:
            raise SchemaError(key, f"required by '{command}'")
    if command == "profile" and cfg.layers is None and (cfg.xi is None or cfg.mass is None):
        raise SchemaError("layers", "profile needs layers, or xi together with mass")
    if command in ("simulate", "compare") and cfg.model == "ch-n3":
        raise ConsistencyError("model", "ch-n3 exists only as a layer ODE")
