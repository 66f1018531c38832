"""Stochastic gradient oracles for mean estimation and linear, logistic and LAD regression."""
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import ConfigError, InputError
from .generators import describe, draw_many, parse_handle, true_cov
from .numeric import _frozen, as_vec

KIND_CODES = {"mean": K.MEAN, "linreg": K.LINREG, "logreg": K.LOGREG, "lad": K.LAD}

# returned by population_gradient when no closed form exists
UNAVAILABLE = None


@dataclass(frozen=True, eq=False)
class OracleSpec:
    """kind 'mean' uses optimum = m and noise; regression kinds use optimum = theta*,
    covariate, and (linreg/lad) a one-dimensional noise handle."""
    kind: str
    optimum: np.ndarray
    noise: object = None
    covariate: object = None

    def __post_init__(self):
        if self.kind not in KIND_CODES:
            raise InputError(f"unknown oracle kind {self.kind!r}")
        opt = _frozen(as_vec(self.optimum, "optimum"))
        object.__setattr__(self, "optimum", opt)
        d = opt.size
        if self.kind == "mean":
            if self.noise is None or self.noise.dim != d:
                raise InputError("mean estimation noise must have the dimension of the target")
            return
        if self.covariate is None or self.covariate.dim != d:
            raise InputError("covariate dimension must match theta*")
        if self.covariate.kind == "point_mass" and np.any(self.covariate.v):
            raise InputError("covariates must have mean zero")
        if self.kind in ("linreg", "lad"):
            if self.noise is None or self.noise.dim != 1:
                raise InputError(f"{self.kind} needs a one-dimensional noise handle")
            if self.kind == "lad" and not self.noise.symmetric:
                raise InputError("LAD noise must have median zero")
        if self.kind == "linreg" and not true_cov(self.covariate).lambda_min() > 0:
            raise InputError("linear regression needs a positive definite covariate covariance")

    @property
    def d(self):
        return self.optimum.size

    @property
    def code(self):
        return KIND_CODES[self.kind]

    @property
    def cov(self):
        """Covariate covariance (regression kinds)."""
        return None if self.covariate is None else true_cov(self.covariate)

    @property
    def noise_sigma(self):
        if self.noise is None or self.kind == "mean":
            return None
        return float(np.sqrt(true_cov(self.noise).trace))

    def to_config(self):
        out = {"kind": self.kind, "optimum": ",".join(repr(float(x)) for x in self.optimum)}
        if self.noise is not None:
            out["noise"] = describe(self.noise)
        if self.covariate is not None:
            out["covariate"] = describe(self.covariate)
        return out

    @classmethod
    def from_config(cls, section):
        section = dict(section)
        try:
            kind = section.pop("kind")
            opt = [float(x) for x in section.pop("optimum").split(",")]
        except KeyError as exc:
            raise ConfigError(f"oracle section is missing {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"bad optimum: {exc}") from exc
        noise = parse_handle(section.pop("noise")) if "noise" in section else None
        cov = parse_handle(section.pop("covariate")) if "covariate" in section else None
        if section:
            raise ConfigError(f"unexpected oracle keys {sorted(section)}")
        try:
            return cls(kind, opt, noise=noise, covariate=cov)
        except InputError as exc:
            raise ConfigError(str(exc)) from exc


def mean_estimation(target, noise):
    return OracleSpec("mean", target, noise=noise)


def linear_regression(theta_star, covariate, noise):
    return OracleSpec("linreg", theta_star, noise=noise, covariate=covariate)


def logistic_regression(theta_star, covariate):
    return OracleSpec("logreg", theta_star, covariate=covariate)


def lad_regression(theta_star, covariate, noise):
    return OracleSpec("lad", theta_star, noise=noise, covariate=covariate)


@dataclass(frozen=True)
class GradSample:
    grad: np.ndarray
    raw_sample: tuple  # (x or xi, y)
    loss_at_query: float


def draw_samples(spec, gen, n):
    """n fresh samples as (X, y); for mean estimation X holds xi and y is zero."""
    n = int(n)
    if spec.kind == "mean":
        return spec.optimum + draw_many(spec.noise, gen, n), np.zeros(n)
    X = draw_many(spec.covariate, gen, n)
    z = X @ spec.optimum
    if spec.kind == "logreg":
        u = gen.random(n)
        p = np.where(z >= 0, 1 / (1 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))))
        return X, (u < p).astype(np.float64)
    return X, z + draw_many(spec.noise, gen, n)[:, 0]


def sample_losses(spec, query, X, y):
    """Per-sample loss f(query; x_i, y_i)."""
    if spec.kind == "mean":
        diff = query - X
        return 0.5 * np.einsum("ij,ij->i", diff, diff)
    z = X @ query
    if spec.kind == "linreg":
        return 0.5 * (z - y) ** 2
    if spec.kind == "logreg":
        # softplus(z) - y z, written without cancellation for large |z|
        return (1 - y) * np.logaddexp(0.0, z) + y * np.logaddexp(0.0, -z)
    return np.abs(z - y)


def gradient(spec, query, x, y):
    """Per-sample gradient at query for the sample (x, y); identical to the engine's arithmetic."""
    query = as_vec(query, "query")
    if query.size != spec.d:
        raise InputError(f"query has d={query.size}, oracle has d={spec.d}")
    out = np.empty_like(query)
    K.gradient_into(spec.code, query, np.ascontiguousarray(x, dtype=np.float64), float(y), out)
    return out


def sample_gradient(spec, query, gen):
    query = as_vec(query, "query")
    if query.size != spec.d:
        raise InputError(f"query has d={query.size}, oracle has d={spec.d}")
    X, y = draw_samples(spec, gen, 1)
    g = gradient(spec, query, X[0], y[0])
    loss = float(sample_losses(spec, query, X, y)[0])
    return GradSample(g, (X[0], float(y[0])), loss)


def population_gradient(spec, query):
    """Exact gradient of the population risk, or UNAVAILABLE for logistic/LAD."""
    query = as_vec(query, "query")
    if query.size != spec.d:
        raise InputError("dimension mismatch")
    if spec.kind == "mean":
        return query - spec.optimum
    if spec.kind == "linreg":
        return spec.cov.apply(query - spec.optimum)
    return UNAVAILABLE


def population_gap(spec, query, mc_n=100_000, gen=None):
    """(F(query) - F(optimum), standard error). Closed form for mean/linreg, paired MC otherwise."""
    query = as_vec(query, "query")
    if query.size != spec.d:
        raise InputError("dimension mismatch")
    diff = query - spec.optimum
    if spec.kind == "mean":
        return 0.5 * float(diff @ diff), 0.0
    if spec.kind == "linreg":
        return 0.5 * float(diff @ spec.cov.apply(diff)), 0.0
    if int(mc_n) < 2:
        raise InputError("mc_n must be >= 2")
    if gen is None:
        raise InputError("Monte-Carlo gap needs a generator")
    X, y = draw_samples(spec, gen, mc_n)
    delta = sample_losses(spec, query, X, y) - sample_losses(spec, spec.optimum, X, y)
    return float(delta.mean()), float(delta.std(ddof=1) / np.sqrt(len(delta)))


def derived_constants(spec, C4=None):
    """Regime constants implied by the model, as keyword arguments for ProblemParams."""
    if spec.kind == "mean":
        c = true_cov(spec.noise)
        return dict(mu=1.0, L=1.0, cov_trace=c.trace, cov_opnorm=c.opnorm, d=spec.d)
    S = spec.cov
    if spec.kind == "linreg":
        s2 = true_cov(spec.noise).trace
        out = dict(L=S.opnorm, mu=S.lambda_min(), cov_trace=s2 * S.trace, cov_opnorm=s2 * S.opnorm,
                   beta=s2 * S.opnorm, d_eff=S.trace / S.opnorm, d=spec.d)
        if C4 is not None:
            out["alpha"] = 2.0 * (float(C4) + 1.0) * S.opnorm ** 2
        return out
    if spec.kind == "logreg":
        # gradient noise covariance is dominated by 2 Sigma
        return dict(L=S.opnorm, cov_trace=2.0 * S.trace, cov_opnorm=2.0 * S.opnorm, d=spec.d)
    return dict(G=float(np.sqrt(S.trace)), cov_trace=S.trace, cov_opnorm=S.opnorm, d=spec.d)
