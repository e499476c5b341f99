"""End-to-end certification of one event-triggered run."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import BoundConstants, CheckReport, certify_constants, envelope_check, zeno_check
from .engine import simulate
from .events import enforcement_check
from .lyapunov import decrease_check


@dataclass
class CertificationReport:
    checks: list
    constants: BoundConstants
    result: object = field(repr=False, default=None)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]

    def as_dict(self):
        res = self.result
        gaps = res.gaps
        return {
            "ok": self.ok,
            "failed": self.failed,
            "checks": {c.name: c.as_dict() for c in self.checks},
            "constants": self.constants.as_dict(),
            "run": {
                "events": res.n_events,
                "min_gap": float(gaps.min()) if gaps.size else None,
                "mean_gap": float(gaps.mean()) if gaps.size else None,
                "final_norm": float(res.x_norm[-1]),
            },
        }


def certify(model, trig, cert, icfg, *, L=1.0, xi=None, samples=10_000, seed=0,
            overrides=None, enforcement_tol=1e-6, decrease_rel_tol=0.02, result=None
            ) -> CertificationReport:
    """Simulate (unless ``result`` is given) and run every check."""
    if result is None:
        result = simulate(model, trig, cert, icfg)
    consts = certify_constants(model, trig, cert, L=L, horizon=icfg.t_end, xi=xi,
                               samples=samples, seed=seed, overrides=overrides)
    enf = enforcement_check(result, trig, enforcement_tol)
    dec = decrease_check(cert, result, decrease_rel_tol)
    checks = [
        CheckReport("enforcement", enf.ok, enforcement_tol - enf.max_residual, enf.t_max,
                    enf.as_dict()),
        CheckReport("decrease", dec.ok, -dec.worst_margin, dec.t_worst, dec.as_dict()),
        envelope_check(result, consts, cert.alpha1),
        zeno_check(result, consts),
    ]
    return CertificationReport(checks, consts, result)


def sweep_cell(raw_config: dict, sigma: float, a: float, b: float) -> dict:
    """One grid cell: simulate and summarise.  Takes a plain dict so that it
    can run in a worker process."""
    from .config import parse_config

    cfg = parse_config(raw_config).with_overrides(sigma=sigma, a=a, b=b)
    model, cert = cfg.build()
    trig = cfg.trigger_config()
    result = simulate(model, trig, cert, cfg.integrator)
    enf = enforcement_check(result, trig, cfg.checks["enforcement_tol"])
    gaps = result.gaps
    t_star = float("nan")
    if cert is not None and a > 0 and cert.mu > sigma:
        consts = certify_constants(
            model, trig, cert, L=cfg.constants["L"], horizon=cfg.integrator.t_end,
            xi=cfg.constants["xi"], samples=cfg.constants["samples"], seed=cfg.seed,
            overrides={k: cfg.constants[k] for k in ("L1", "L2", "L3") if k in cfg.constants},
        )
        z = zeno_check(result, consts)
        t_star = z.detail.get("T_star", float("nan"))
    return {
        "sigma": sigma,
        "a": a,
        "b": b,
        "events": result.n_events,
        "min_gap": float(gaps.min()) if gaps.size else float("nan"),
        "T_star": t_star,
        "final_norm": float(result.x_norm[-1]),
        "max_residual": enf.max_residual if enf.applicable else float("nan"),
    }


def sweep_grid(sweep: dict, base: dict) -> list[tuple]:
    sig = sweep.get("sigma", [base["sigma"]])
    aa = sweep.get("a", [base["a"]])
    bb = sweep.get("b", [base["b"]])
    return [(float(s), float(a), float(b)) for s in sig for a in aa for b in bb]


def gaps_summary(result):
    g = result.gaps
    if not g.size:
        return float("nan"), float("nan")
    return float(np.min(g)), float(np.mean(g))
