"""Run configuration: parsing, validation and scenario construction."""

from __future__ import annotations

import copy
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chatter import (
    ChatterParams,
    build_chatter_certificate,
    build_chatter_model,
    constant_history,
)
from .core import ConfigurationError, PowerLaw, SystemModel
from .engine import IntegratorConfig
from .events import TriggerConfig
from .lyapunov import LyapunovCertificate, weighted_square_integral

DEFAULTS = {
    "scenario": "chatter",
    "model": {},
    "phi": [1.0, 2.0],
    "certificate": {},
    "trigger": {"sigma": 0.16, "a": 1.0, "b": 0.14, "t0": 0.0},
    "integrator": {"h": 0.005, "t_end": 60.0, "event_time_tol": 1e-9, "zeno_floor": 1e-8},
    "constants": {"L": 1.0, "xi": None, "samples": 10000},
    "checks": {"enforcement_tol": 1e-6, "decrease_rel_tol": 0.02},
    "outputs": {
        "trajectory": "trajectory.csv",
        "events": "events.csv",
        "bounds": "bounds.json",
        "plot": "plots",
    },
    "sweep": {},
    "seed": 0,
}

KNOWN_SECTIONS = set(DEFAULTS)


class ConfigError(ConfigurationError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _merge(base, over):
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    return data


def _num(cfg, section, key, *, positive=False, nonneg=False, allow_none=False):
    name = f"{section}.{key}" if section else key
    val = cfg[section][key] if section else cfg[key]
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(name, f"expected a finite number, got {val!r}")
    if positive and not val > 0:
        raise ConfigError(name, f"must be positive, got {val}")
    if nonneg and val < 0:
        raise ConfigError(name, f"must be non-negative, got {val}")
    return float(val)


@dataclass
class RunConfig:
    raw: dict
    scenario: str
    trigger: dict
    integrator: IntegratorConfig
    constants: dict
    checks: dict
    outputs: dict
    sweep: dict = field(default_factory=dict)
    seed: int = 0

    def trigger_config(self) -> TriggerConfig:
        t = self.trigger
        sq = PowerLaw(1.0, 2.0)
        try:
            return TriggerConfig(sigma=t["sigma"], a=t["a"], b=t["b"], t0=t["t0"], chi=sq, alpha1=sq)
        except ConfigurationError as exc:
            raise ConfigError("trigger", str(exc)) from exc

    def build(self):
        """Return (model, certificate or None) for the configured scenario."""
        return build_scenario(self.raw)

    def with_overrides(self, **kw) -> "RunConfig":
        raw = copy.deepcopy(self.raw)
        for key, val in kw.items():
            if val is None:
                continue
            if key in ("sigma", "a", "b"):
                raw["trigger"][key] = val
            elif key in ("h", "t_end"):
                raw["integrator"][key] = val
            elif key == "seed":
                raw["seed"] = val
        return parse_config(raw)


def parse_config(data: dict | None = None) -> RunConfig:
    data = data or {}
    unknown = set(data) - KNOWN_SECTIONS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration key")
    for key, val in data.items():
        if isinstance(DEFAULTS[key], dict) and not isinstance(val, dict):
            raise ConfigError(key, "expected an object")
    raw = _merge(DEFAULTS, data)

    trig = {k: _num(raw, "trigger", k) for k in ("sigma", "a", "b", "t0")}
    if trig["sigma"] < 0:
        raise ConfigError("trigger.sigma", "must be non-negative")
    if trig["a"] < 0:
        raise ConfigError("trigger.a", "must be non-negative")
    if trig["b"] <= 0:
        raise ConfigError("trigger.b", "must be positive")
    if trig["sigma"] == 0 and trig["a"] == 0:
        raise ConfigError("trigger", "sigma = 0 with a = 0 forces continuous triggering")

    integ = IntegratorConfig(
        h=_num(raw, "integrator", "h", positive=True),
        t_end=_num(raw, "integrator", "t_end", positive=True),
        event_time_tol=_num(raw, "integrator", "event_time_tol", positive=True),
        zeno_floor=_num(raw, "integrator", "zeno_floor", positive=True),
    )
    consts = {"L": _num(raw, "constants", "L", positive=True),
              "xi": _num(raw, "constants", "xi", positive=True, allow_none=True),
              "samples": int(_num(raw, "constants", "samples", positive=True))}
    for key in ("L1", "L2", "L3"):
        if key in raw["constants"]:
            consts[key] = _num(raw, "constants", key, positive=True)
    checks = {k: _num(raw, "checks", k, positive=True) for k in DEFAULTS["checks"]}
    seed = raw["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed", f"expected an integer, got {seed!r}")
    phi = raw["phi"]
    if (not isinstance(phi, list) or not phi
            or any(isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v)
                   for v in phi)):
        raise ConfigError("phi", f"expected a non-empty list of finite numbers, got {phi!r}")
    if raw["scenario"] not in ("chatter", "linear"):
        raise ConfigError("scenario", f"unknown scenario {raw['scenario']!r}")
    for key, val in raw["sweep"].items():
        if key not in ("sigma", "a", "b") or not isinstance(val, list):
            raise ConfigError(f"sweep.{key}", "expected a list under sigma, a or b")
    cfg = RunConfig(raw, raw["scenario"], trig, integ, consts, checks, dict(raw["outputs"]),
                    dict(raw["sweep"]), seed)
    model, _ = cfg.build()
    try:
        integ.validate(model.tau)
    except ConfigurationError as exc:
        raise ConfigError("integrator", str(exc)) from exc
    return cfg


def _matrix(raw, key, shape):
    name = f"model.{key}"
    try:
        m = np.asarray(raw, dtype=float).reshape(shape)
    except (TypeError, ValueError) as exc:
        raise ConfigError(name, f"expected a {shape[0]}x{shape[1]} matrix") from exc
    if not np.all(np.isfinite(m)):
        raise ConfigError(name, "entries must be finite")
    return m


def build_linear_model(spec: dict, phi_value) -> SystemModel:
    """x' = A x(t) + A_delay x(t - tau) + B u,  u = K x."""
    A = np.asarray(spec.get("A", [[0.0]]), dtype=float)
    n = A.shape[0]
    A = _matrix(A, "A", (n, n))
    Ad = _matrix(spec.get("A_delay", np.zeros((n, n))), "A_delay", (n, n))
    B = np.asarray(spec.get("B", np.zeros((n, 1))), dtype=float)
    m = B.shape[1] if B.ndim == 2 else 1
    B = _matrix(B, "B", (n, m))
    K = _matrix(spec.get("K", np.zeros((m, n))), "K", (m, n))
    tau = float(spec.get("tau", 1.0))
    if not tau > 0:
        raise ConfigError("model.tau", "must be positive")

    def rhs(t, seg, u):
        return A @ seg.now + Ad @ seg(-tau) + B @ u

    def feedback(x):
        return K @ x

    phi, dphi = constant_history(phi_value)
    return SystemModel(n, m, rhs, feedback, tau, phi, dphi, name="linear")


def quadratic_certificate(spec: dict, tau: float) -> LyapunovCertificate:
    """V = |x|^2 + delta * int exp(-zeta(t-s)) |x(s)|^2 ds with a given mu."""
    mu = spec["mu"]
    delta = spec.get("delta", 0.0)
    zeta = spec.get("zeta", 1.0)
    sq = PowerLaw(1.0, 2.0)
    # alpha3 must be class K even when V2 vanishes
    coeff = delta * (1 - math.exp(-zeta * tau)) / zeta if delta > 0 else 1e-300

    def V2(t, history):
        if delta == 0:
            return 0.0
        return delta * weighted_square_integral(history, t, tau, zeta)

    return LyapunovCertificate(lambda t, x: float(x @ x), V2, sq, sq, PowerLaw(coeff, 2.0), sq, mu)


def build_scenario(raw: dict):
    phi = raw.get("phi", DEFAULTS["phi"])
    cert_spec = raw.get("certificate", {}) or {}
    if raw.get("scenario", "chatter") == "chatter":
        try:
            params = ChatterParams(**raw.get("model", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError("model", str(exc)) from exc
        if len(phi) != 2:
            raise ConfigError("phi", "chatter needs a 2-vector initial value")
        p, dp = constant_history(phi)
        model = build_chatter_model(params, p, dp)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cert = build_chatter_certificate(params, mu=float(cert_spec.get("mu", 0.28)))
        return model, cert
    spec = raw.get("model", {})
    model = build_linear_model(spec, phi)
    if len(np.atleast_1d(phi)) != model.dim_state:
        raise ConfigError("phi", f"expected {model.dim_state} entries")
    cert = quadratic_certificate(cert_spec, model.tau) if "mu" in cert_spec else None
    return model, cert
