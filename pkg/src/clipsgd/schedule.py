"""Burn-in, clip level and step size for the four convexity regimes."""
import math
from dataclasses import dataclass, field, fields, replace

from .errors import InputError, RegimeError

REGIMES = ("StrCvx", "StrCvxQG", "SmoothCvx", "LipCvx")


def _check_delta(delta):
    delta = float(delta)
    if not 0 < delta <= 0.5:
        raise InputError(f"delta must lie in (0, 1/2], got {delta}")
    return delta


def log_term(T, delta):
    """ln(ln(T)/delta) with T guarded to >= 3 and ln T guarded to >= 1."""
    delta = _check_delta(delta)
    T = int(T)
    if T < 1:
        raise InputError("T must be >= 1")
    return math.log(max(math.log(max(T, 3)), 1.0) / delta)


@dataclass(frozen=True)
class ProblemParams:
    T: int
    delta: float
    D1: float = 0.0
    mu: float = None
    L: float = None
    G: float = None
    cov_trace: float = None
    cov_opnorm: float = None
    alpha: float = None
    beta: float = None
    d_eff: float = None
    d: int = None

    def __post_init__(self):
        if int(self.T) < 1:
            raise InputError("T must be >= 1")
        _check_delta(self.delta)
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("T", "d") or v is None:
                continue
            if not (math.isfinite(v) and v >= 0):
                raise InputError(f"{f.name} must be finite and >= 0, got {v}")
        if self.cov_trace is not None and self.cov_opnorm is not None:
            if self.cov_trace < self.cov_opnorm * (1 - 1e-12):
                raise InputError("cov_trace must be >= cov_opnorm")
        if self.d_eff is not None:
            if self.d_eff < 1 - 1e-12:
                raise InputError("d_eff must be >= 1")
            if self.d is not None and self.d_eff > self.d * (1 + 1e-12):
                raise InputError("d_eff must be <= d")

    def updated(self, **kw):
        return replace(self, **kw)

    def require(self, regime, *names):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise InputError(f"{regime} plan needs {', '.join(missing)}")


@dataclass(frozen=True)
class ParamPlan:
    regime: str
    T: int
    clip_level: float
    output: str  # 'last' or 'average'
    log_term: float
    step_kind: str  # 'decaying' or 'constant'
    gamma: float = 0.0
    A: float = 4.0
    mu: float = None
    eta: float = None
    constants: tuple = ()
    notes: tuple = field(default=())

    def __post_init__(self):
        if not (math.isfinite(self.clip_level) and self.clip_level > 0):
            raise InputError(f"clip level must be finite and positive, got {self.clip_level}")
        if self.output not in ("last", "average"):
            raise InputError("output must be 'last' or 'average'")
        if self.step_kind == "decaying":
            if self.mu is None or not self.mu > 0 or not self.A > 0 or self.gamma < 0:
                raise InputError("decaying steps need mu > 0, A > 0, gamma >= 0")
        elif self.step_kind == "constant":
            if self.eta is None or not (math.isfinite(self.eta) and self.eta > 0):
                raise InputError("constant step needs a finite eta > 0")
        else:
            raise InputError(f"unknown step kind {self.step_kind!r}")

    def step_size(self, t):
        if self.step_kind == "decaying":
            return self.A / (self.mu * (t + self.gamma))
        return self.eta

    def with_clip_level(self, level):
        return replace(self, clip_level=float(level))

    def to_record(self):
        rec = {
            "regime": self.regime,
            "T": self.T,
            "gamma": self.gamma,
            "clip_level": self.clip_level,
            "output": self.output,
            "log_term": self.log_term,
            "step_kind": self.step_kind,
        }
        if self.step_kind == "decaying":
            rec.update(A=self.A, mu=self.mu)
        else:
            rec["eta"] = self.eta
        rec.update(dict(self.constants))
        if self.notes:
            rec["notes"] = ";".join(self.notes)
        return rec


def _positive(name, v):
    v = float(v)
    if not v > 0:
        raise InputError(f"{name} must be > 0")
    return v


def _strongly_convex_setup(p, regime):
    if p.mu is None or p.mu == 0:
        raise RegimeError(f"{regime} needs mu > 0; use the SmoothCvx or LipCvx plan for merely convex problems")
    if p.L is None or p.L < p.mu:
        raise InputError(f"{regime} needs L >= mu")
    return p.L / p.mu, log_term(p.T, p.delta)


def _apply_floor(gamma, kappa, notes):
    # keeps eta_1 = 4/(mu(1+gamma)) <= 1/(L+mu)
    floor = 4.0 * kappa + 3.0
    if gamma < floor:
        notes.append(f"gamma raised from {gamma!r} to floor 4*kappa+3={floor!r}")
        return floor
    return gamma


def strongly_convex_gamma_arms(p):
    kappa, ell = _strongly_convex_setup(p, "StrCvx")
    tr, op = p.cov_trace, p.cov_opnorm
    first = op * kappa ** 2 * ell ** 2 / tr if tr > 0 else 0.0
    return (first, kappa ** 1.5 * ell, kappa * ell ** 2)


def plan_strongly_convex(p, c_gamma=1.0, c_const=1.0):
    """Decaying steps 4/(mu(t+gamma)), last iterate."""
    p.require("StrCvx", "mu", "L", "cov_trace", "cov_opnorm")
    c_gamma, c_const = _positive("c_gamma", c_gamma), _positive("c_const", c_const)
    kappa, ell = _strongly_convex_setup(p, "StrCvx")
    notes = []
    gamma = _apply_floor(c_gamma * max(strongly_convex_gamma_arms(p)), kappa, notes)
    tr, op, mu = p.cov_trace, p.cov_opnorm, p.mu
    R = (gamma + 1) ** 2 * p.D1 ** 2 + ((p.T + gamma) / mu ** 2) * (tr + math.sqrt(tr * op) * ell)
    level = c_const * (mu / ell) * math.sqrt(R)
    return ParamPlan(
        "StrCvx", int(p.T), level, "last", ell, "decaying", gamma=gamma, A=4.0, mu=mu,
        constants=(("c_gamma", c_gamma), ("c_const", c_const)), notes=tuple(notes),
    )


def qg_gamma_arms(p):
    kappa, ell = _strongly_convex_setup(p, "StrCvxQG")
    a, de, mu = p.alpha, p.d_eff, p.mu
    return (
        a * de / mu ** 2,
        a * math.sqrt(de) * ell / mu ** 2,
        kappa * math.sqrt(a) * ell / mu,
        math.sqrt(kappa * a * de) * ell / mu,
        kappa ** (2 / 3) * a ** (1 / 3) * de ** (1 / 3) * ell / mu ** (2 / 3),
        kappa ** 1.5 * ell,
        kappa * ell ** 2,
        (kappa ** 2 / de) * ell,
    )


def plan_qg(p, c_gamma=1.0, c_const=1.0):
    """Strongly convex plan under gradient noise growing quadratically away from the optimum."""
    p.require("StrCvxQG", "mu", "L", "alpha", "beta", "d_eff")
    c_gamma, c_const = _positive("c_gamma", c_gamma), _positive("c_const", c_const)
    kappa, ell = _strongly_convex_setup(p, "StrCvxQG")
    notes = []
    gamma = _apply_floor(c_gamma * max(qg_gamma_arms(p)), kappa, notes)
    mu, de = p.mu, p.d_eff
    R = (gamma + 1) ** 2 * p.D1 ** 2 + (p.beta / mu ** 2) * (p.T + gamma) * (de + math.sqrt(de) * ell)
    level = c_const * (mu / ell) * math.sqrt(R)
    return ParamPlan(
        "StrCvxQG", int(p.T), level, "last", ell, "decaying", gamma=gamma, A=4.0, mu=mu,
        constants=(("c_gamma", c_gamma), ("c_const", c_const)), notes=tuple(notes),
    )


def _convex_level(T, op, inner, ell, c_const):
    level = c_const * math.sqrt(T * math.sqrt(op) * inner / ell)
    if not level > 0:
        raise InputError("degenerate problem: clip level evaluates to 0")
    return level


def smooth_convex_eta(p, C_M=1.0):
    """Largest step that keeps the iterates bounded for smooth convex problems."""
    T, L, D1, tr, op = p.T, p.L, p.D1, p.cov_trace, p.cov_opnorm
    ell = log_term(T, p.delta)
    A = math.sqrt(op) * (math.sqrt(tr) + L * D1)
    B = 2 * math.sqrt(A * ell / T) + (2 * L * D1 * ell / (A * T)) * (tr + L ** 2 * D1 ** 2)
    g = (math.sqrt(tr) + 3 * math.sqrt(A * ell)
         + 8 * L ** 4 * D1 ** 4 * ell ** 1.5 / (A ** 1.5 * T)
         + 2 * L ** 2 * D1 ** 2 * tr * ell ** 1.5 / (A ** 1.5 * T))
    c = 1 / math.sqrt(8 * C_M + 330)
    return c * min(1 / (2 * L), D1 / (B * T), D1 / (g * math.sqrt(T)))


def lipschitz_eta(p, C_M=1.0):
    """Largest step that keeps the iterates bounded for Lipschitz convex problems."""
    T, G, D1, tr, op = p.T, p.G, p.D1, p.cov_trace, p.cov_opnorm
    ell = log_term(T, p.delta)
    A = math.sqrt(op) * (math.sqrt(tr) + G)
    B = math.sqrt(A * ell / T) + G * (tr + G ** 2) * ell / (A * T)
    g = math.sqrt(tr) + 3 * math.sqrt(A * ell) + G ** 2 * ell ** 1.5 * (tr + G ** 2) / (A ** 1.5 * T)
    c = 1 / math.sqrt(8 * C_M + 334)
    return c * min(D1 / (B * T), D1 / (g * math.sqrt(T)), D1 / (G * math.sqrt(T)))


def _resolve_eta(eta, auto, cap, notes):
    if eta is None or eta == "auto":
        eta = auto
        if not eta > 0:
            raise InputError("automatic step size is 0 (D1 = 0?); pass eta explicitly")
    else:
        eta = _positive("eta", eta)
    if eta > cap:
        notes.append(f"eta clamped from {eta!r} to {cap!r}")
        eta = cap
    return eta


def plan_smooth_convex(p, eta="auto", C_M=1.0, c_const=1.0):
    """Constant step, averaged iterate, for L-smooth convex objectives."""
    p.require("SmoothCvx", "L", "cov_trace", "cov_opnorm")
    if not p.L > 0:
        raise InputError("SmoothCvx needs L > 0")
    ell = log_term(p.T, p.delta)
    level = _convex_level(p.T, p.cov_opnorm, math.sqrt(p.cov_trace) + p.L * p.D1, ell, c_const)
    notes = []
    auto = smooth_convex_eta(p, C_M) if eta in (None, "auto") else None
    eta = _resolve_eta(eta, auto, 1 / (2 * p.L), notes)
    return ParamPlan(
        "SmoothCvx", int(p.T), level, "average", ell, "constant", eta=eta,
        constants=(("C_M", float(C_M)), ("c_const", float(c_const))), notes=tuple(notes),
    )


def plan_lipschitz(p, eta="auto", C_M=1.0, c_const=1.0):
    """Constant step, averaged iterate, for G-Lipschitz convex objectives."""
    p.require("LipCvx", "G", "cov_trace", "cov_opnorm")
    if not p.G > 0:
        raise InputError("LipCvx needs G > 0")
    ell = log_term(p.T, p.delta)
    level = _convex_level(p.T, p.cov_opnorm, math.sqrt(p.cov_trace) + p.G, ell, c_const)
    notes = []
    auto = lipschitz_eta(p, C_M) if eta in (None, "auto") else None
    eta = _resolve_eta(eta, auto, p.G / math.sqrt(p.T), notes)
    return ParamPlan(
        "LipCvx", int(p.T), level, "average", ell, "constant", eta=eta,
        constants=(("C_M", float(C_M)), ("c_const", float(c_const))), notes=tuple(notes),
    )


def make_plan(regime, p, **constants):
    """Dispatch on regime name."""
    if regime == "StrCvx":
        return plan_strongly_convex(p, **constants)
    if regime == "StrCvxQG":
        return plan_qg(p, **constants)
    if regime == "SmoothCvx":
        return plan_smooth_convex(p, **constants)
    if regime == "LipCvx":
        return plan_lipschitz(p, **constants)
    raise InputError(f"unknown regime {regime!r}; expected one of {REGIMES}")
