"""Proof constants, state-norm envelopes and the minimum inter-event time."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import EtcError, FunctionSegment, KFunction, SystemModel, k_eval, k_invert

# b and mu - sigma closer than this are treated as equal (0.28 - 0.16 != 0.12 in binary)
BRANCH_TOL = 1e-12
LIPSCHITZ_INFLATION = 1.25


class CertificationError(EtcError, ValueError):
    """Preconditions of the stability bounds are violated."""


def _is_equal_branch(mu, sigma, b):
    return abs(b - (mu - sigma)) <= BRANCH_TOL * max(1.0, abs(b))


def compute_eta(mu: float, sigma: float, b: float, xi: float | None = None):
    """Decay rate of the attractivity envelope.

    Returns ``(eta, xi_used)``; ``xi_used`` is None unless b == mu - sigma,
    in which case eta = xi (default b/2) with 0 < xi < b.
    """
    if not mu > sigma >= 0:
        raise CertificationError(f"need mu > sigma >= 0, got mu={mu}, sigma={sigma}")
    if not b > 0:
        raise CertificationError(f"need b > 0, got {b}")
    if _is_equal_branch(mu, sigma, b):
        xi = b / 2 if xi is None else xi
        if not 0 < xi < b:
            raise CertificationError(f"xi must lie in (0, b), got {xi}")
        return xi, xi
    return min(b, mu - sigma), None


def compute_Mbar_M(a, L, mu, sigma, b, xi, alpha1: KFunction, alpha2: KFunction,
                   alpha3: KFunction, phi0_norm: float, phi_norm: float):
    """Return (Mbar, M, R) with R = alpha1^{-1}(M)."""
    if not a > 0 or not L > 0:
        raise CertificationError(f"need a > 0 and L > 0, got a={a}, L={L}")
    if _is_equal_branch(mu, sigma, b):
        if xi is None:
            raise CertificationError("b == mu - sigma requires xi")
        denom = abs(mu - sigma - xi)
    else:
        denom = abs(mu - sigma - b)
    if denom == 0:
        raise CertificationError("zero divisor in Mbar")
    Mbar = a * L / denom
    M = k_eval(alpha2, phi0_norm) + k_eval(alpha3, phi_norm) + Mbar
    return Mbar, M, k_invert(alpha1, M)


def attractivity_envelope(consts: "BoundConstants", alpha1: KFunction, t, t0: float = 0.0):
    t = np.asarray(t, dtype=float)
    vals = consts.M * np.exp(-consts.eta * (t - t0))
    out = np.array([k_invert(alpha1, float(v)) for v in np.atleast_1d(vals)])
    return out if t.ndim else float(out[0])


def growth_envelope(phi_norm: float, lam: float, t, t0: float = 0.0):
    with np.errstate(over="ignore"):
        return phi_norm * np.exp(lam * (np.asarray(t, dtype=float) - t0))


def combined_envelope(consts, alpha1, phi_norm, t, t0=0.0):
    return np.minimum(growth_envelope(phi_norm, consts.lam, t, t0),
                      attractivity_envelope(consts, alpha1, t, t0))


# ---------------------------------------------------------------------------
# Lipschitz estimates


@dataclass
class LipschitzEstimate:
    L2: float
    L3: float
    raw_L2: float
    raw_L3: float
    quantiles_L2: dict
    quantiles_L3: dict
    samples: int

    def as_dict(self):
        return asdict(self)


def _ball(rng, n, dim, R):
    v = rng.standard_normal((n, dim))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * (R * rng.random((n, 1)) ** (1.0 / dim))


def _project(v, R):
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(nrm > R, v * (R / np.maximum(nrm, 1e-300)), v)


def _pl_segment(nodes_t, nodes_x, tau):
    def fn(theta):
        return np.array([np.interp(theta, nodes_t, nodes_x[:, j]) for j in range(nodes_x.shape[1])])

    return FunctionSegment(fn, tau)


def estimate_lipschitz(model: SystemModel, R: float, samples: int = 10_000, rng=None,
                       t: float = 0.0, n_nodes: int = 5, local_scale: float = 1e-4,
                       inflation: float = LIPSCHITZ_INFLATION) -> LipschitzEstimate:
    """Sampled Lipschitz constants of f(t, ., u) and of x -> f(t, phi, k(x)).

    Segments are piecewise linear through ``n_nodes`` nodes on [-tau, 0]
    (always including -tau and 0) with node values in the radius-R ball, so
    their sup norm is attained at a node.  Half the pairs are far apart,
    half are local perturbations; the maximum ratio is inflated by
    ``inflation``.
    """
    if not R > 0:
        raise ValueError(f"radius must be positive, got {R}")
    rng = np.random.default_rng(rng)
    n, tau = model.dim_state, model.tau
    nodes_t = np.linspace(-tau, 0.0, n_nodes)
    half = samples // 2

    def phis(count):
        return _ball(rng, count * n_nodes, n, R).reshape(count, n_nodes, n)

    p1 = phis(samples)
    p2 = np.concatenate([
        phis(samples - half),
        _project(p1[samples - half:] + local_scale * R * rng.standard_normal((half, n_nodes, n)), R),
    ])
    ux = _ball(rng, samples, n, R)
    r2 = np.empty(samples)
    for i in range(samples):
        u = model.k(ux[i])
        d = np.linalg.norm(p1[i] - p2[i], axis=1).max()
        f1 = model.f(t, _pl_segment(nodes_t, p1[i], tau), u)
        f2 = model.f(t, _pl_segment(nodes_t, p2[i], tau), u)
        r2[i] = np.linalg.norm(f1 - f2) / d if d > 0 else 0.0

    x1 = _ball(rng, samples, n, R)
    x2 = np.concatenate([
        _ball(rng, samples - half, n, R),
        _project(x1[samples - half:] + local_scale * R * rng.standard_normal((half, n)), R),
    ])
    base = phis(samples)
    r3 = np.empty(samples)
    for i in range(samples):
        seg = _pl_segment(nodes_t, base[i], tau)
        d = np.linalg.norm(x1[i] - x2[i])
        f1 = model.f(t, seg, model.k(x1[i]))
        f2 = model.f(t, seg, model.k(x2[i]))
        r3[i] = np.linalg.norm(f1 - f2) / d if d > 0 else 0.0

    def q(r):
        return {f"q{p}": float(np.quantile(r, p / 100)) for p in (50, 90, 99)}

    return LipschitzEstimate(
        L2=inflation * float(r2.max()),
        L3=inflation * float(r3.max()),
        raw_L2=float(r2.max()),
        raw_L3=float(r3.max()),
        quantiles_L2=q(r2),
        quantiles_L3=q(r3),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# constants bundle


@dataclass
class BoundConstants:
    mu: float
    sigma: float
    a: float
    b: float
    tau: float
    eta: float
    xi: float | None
    Mbar: float
    M: float
    R: float
    L: float
    L1: float
    L2: float
    L3: float
    lam: float
    lambda1: float
    lambda2: float
    m_floor: float
    phi0_norm: float
    phi_norm: float
    lipschitz: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def alpha1_inverse_lipschitz(alpha1: KFunction, M: float, eta: float, horizon: float):
    """Lipschitz constant of alpha1^{-1} on [m, M], m = M*exp(-eta*horizon).

    For inverses that are Lipschitz only away from 0 (quadratic alpha1),
    m is the smallest value the attractivity envelope reaches over the run.
    """
    m = M * math.exp(-eta * horizon)
    return alpha1.inverse_lipschitz(m, M), m


def zeno_lambdas(L1, L2, L3, M, eta, tau):
    return L1 * L2 * M * math.exp(eta * tau) / eta, L1 * L3 * M


def certify_constants(model: SystemModel, trig, cert, *, L: float = 1.0, horizon: float,
                      xi: float | None = None, samples: int = 10_000, seed=0,
                      overrides: dict | None = None) -> BoundConstants:
    """Assemble every proof constant for one (model, trigger, certificate)."""
    overrides = overrides or {}
    if not trig.a > 0:
        raise CertificationError("certification needs a > 0")
    tau = model.tau
    grid = np.linspace(-tau, 0.0, 201)
    phi_vals = np.array([np.atleast_1d(model.initial_fn(s)) for s in grid])
    phi_norm = float(np.linalg.norm(phi_vals, axis=1).max())
    phi0_norm = float(np.linalg.norm(phi_vals[-1]))
    eta, xi_used = compute_eta(cert.mu, trig.sigma, trig.b, xi)
    Mbar, M, R = compute_Mbar_M(trig.a, L, cert.mu, trig.sigma, trig.b, xi_used,
                                cert.alpha1, cert.alpha2, cert.alpha3, phi0_norm, phi_norm)
    lip = {}
    if "L2" in overrides and "L3" in overrides:
        L2, L3 = float(overrides["L2"]), float(overrides["L3"])
    else:
        est = estimate_lipschitz(model, R, samples=samples, rng=seed)
        lip = est.as_dict()
        L2 = float(overrides.get("L2", est.L2))
        L3 = float(overrides.get("L3", est.L3))
    L1, m = alpha1_inverse_lipschitz(cert.alpha1, M, eta, horizon)
    L1 = float(overrides.get("L1", L1))
    lam1, lam2 = zeno_lambdas(L1, L2, L3, M, eta, tau)
    return BoundConstants(
        mu=cert.mu, sigma=trig.sigma, a=trig.a, b=trig.b, tau=tau, eta=eta, xi=xi_used,
        Mbar=Mbar, M=M, R=R, L=L, L1=L1, L2=L2, L3=L3, lam=L2 + L3,
        lambda1=lam1, lambda2=lam2, m_floor=m, phi0_norm=phi0_norm, phi_norm=phi_norm,
        lipschitz=lip,
    )


# ---------------------------------------------------------------------------
# stability radii


@dataclass
class StabilityRadii:
    delta1: float
    delta2: float
    delta2_bar: float
    delta3: float
    log_delta3: float
    delta: float
    log_delta: float
    eps_target: float
    t_hat: float | None = None

    def as_dict(self):
        return asdict(self)


def _first_crossing(fn, level, tol=1e-13):
    """inf{s >= 0 : fn(s) >= level} for increasing fn."""
    if fn(0.0) >= level:
        return 0.0
    hi = 1.0
    while fn(hi) < level:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    lo = 0.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if fn(mid) >= level:
            hi = mid
        else:
            lo = mid
    return hi


def stability_radii(consts: BoundConstants, alpha1: KFunction, alpha2: KFunction,
                    alpha3: KFunction, eps_target: float, phi_norm: float | None = None,
                    t0: float = 0.0) -> StabilityRadii:
    """delta1, delta2 and the explicit Lipschitz-branch delta3, t_hat.

    delta3 is carried in log form as well because (2*L1*Mbar)^(-lam/eta)
    underflows for large Lipschitz constants.
    """
    if not eps_target > 0:
        raise ValueError("eps_target must be positive")
    Mbar, L1, lam, eta = consts.Mbar, consts.L1, consts.lam, consts.eta
    d1 = _first_crossing(lambda s: k_eval(alpha2, s) + k_eval(alpha3, s), Mbar)
    d2 = k_invert(alpha1, 2 * Mbar)
    d2b = k_invert(alpha1, 2 * L1 * Mbar)
    log_d3 = (lam + eta) / eta * math.log(eps_target) - lam / eta * math.log(2 * L1 * Mbar)
    d3 = math.exp(log_d3)
    log_delta = min(math.log(d1) if d1 > 0 else -math.inf,
                    math.log(d2b) if d2b > 0 else -math.inf, log_d3)
    t_hat = None
    if phi_norm is not None and phi_norm > 0:
        t_hat = math.log(2 * L1 * Mbar / phi_norm) / (lam + eta) + t0
    return StabilityRadii(d1, d2, d2b, d3, log_d3, math.exp(log_delta), log_delta,
                          eps_target, t_hat)


# ---------------------------------------------------------------------------
# Zeno lower bound


def zeno_g(T, a, b, eta, t_bar_minus_t0, lambda1, lambda2):
    return (a * math.exp(-b * T) * math.exp((eta - b) * t_bar_minus_t0)
            - lambda1 * (1.0 - math.exp(-eta * T)) - lambda2 * T)


def zeno_bound_Tstar(a, b, eta, t_bar_minus_t0, lambda1, lambda2, tol=1e-12):
    """Unique positive root T* of the strictly decreasing g; returns (T*, bracket).

    T* is returned as the lower bracket end, so g(T*) >= 0 and it stays a
    valid lower bound on inter-event times.
    """
    if not (lambda1 > 0 and lambda2 > 0):
        raise ValueError("lambda1 and lambda2 must be positive")

    def g(T):
        return zeno_g(T, a, b, eta, t_bar_minus_t0, lambda1, lambda2)

    if not g(0.0) > 0:
        raise CertificationError(f"g(0) = {g(0.0)} is not positive")
    lo, hi = 0.0, 1.0
    while g(hi) >= 0:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo, (lo, hi)


# ---------------------------------------------------------------------------
# trajectory checks


@dataclass
class CheckReport:
    name: str
    ok: bool
    margin: float
    t_worst: float | None = None
    detail: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def envelope_check(result, consts: BoundConstants, alpha1: KFunction, rtol: float = 1e-9
                   ) -> CheckReport:
    """|x(t)| <= min(growth, attractivity) at every step record."""
    t0 = result.t[0]
    env = combined_envelope(consts, alpha1, consts.phi_norm, result.t, t0)
    slack = env * (1 + rtol) + 1e-12 - result.x_norm
    j = int(np.argmin(slack))
    return CheckReport("envelope", bool(slack[j] >= 0), float(slack[j]), float(result.t[j]),
                       {"final_envelope": float(env[-1])})


def zeno_check(result, consts: BoundConstants) -> CheckReport:
    """Compare observed inter-event gaps with T* (only for b >= mu - sigma)."""
    gaps = result.gaps
    min_gap = float(gaps.min()) if gaps.size else math.inf
    detail = {"events": result.n_events, "min_gap": min_gap}
    if consts.b < consts.mu - consts.sigma and not _is_equal_branch(consts.mu, consts.sigma, consts.b):
        detail["note"] = "b < mu - sigma: minimum gap from the earlier bound, T* not used"
        return CheckReport("zeno", bool(min_gap > 0), min_gap, None, detail)
    t_bar = result.t[-1] - result.t[0]
    T_star, bracket = zeno_bound_Tstar(consts.a, consts.b, consts.eta, t_bar,
                                       consts.lambda1, consts.lambda2)
    detail.update(T_star=T_star, bracket=list(bracket), t_bar_minus_t0=t_bar)
    return CheckReport("zeno", bool(min_gap >= T_star), min_gap - T_star, None, detail)
