"""Norm clipping and bounds on the first two moments of a clipped random vector."""
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InputError
from .generators import draw_many
from .numeric import CovModel, as_vec


def _check_level(level):
    level = float(level)
    if not level > 0:
        raise InputError("clip level must be positive")
    return level


def clip(v, level):
    """Scale v onto the ball of radius level if it lies outside; clip(0) = 0."""
    level = _check_level(level)
    v = as_vec(v)
    out = np.empty_like(v)
    K.clip_into(v, level, out)
    return out


def clip_rows(X, level):
    """Clip every row of an (n, d) array."""
    level = _check_level(level)
    n = np.linalg.norm(X, axis=1)
    scale = np.where(n > level, level / np.where(n > 0, n, 1.0), 1.0)
    return X * scale[:, None]


@dataclass(frozen=True)
class ClippedMomentBounds:
    bias_bound: float
    opnorm_bound: float
    trace_bound: float


def clipped_bias_bound(mean_norm, cov, level):
    """Upper bound on ||E clip(X) - E X|| for X with mean norm mean_norm and covariance cov."""
    level = _check_level(level)
    m = float(mean_norm)
    if m < 0:
        raise InputError("mean_norm must be >= 0")
    tr, op = cov.trace, cov.opnorm
    return float((np.sqrt(op) / level) * (m + np.sqrt(tr)) + (m / level ** 2) * (m ** 2 + tr))


def clipped_cov_bounds(mean_norm, cov, level):
    level = _check_level(level)
    m = float(mean_norm)
    bias = clipped_bias_bound(m, cov, level)
    op = cov.opnorm + (m ** 2 / level ** 2) * (m ** 2 + cov.trace)
    return ClippedMomentBounds(float(bias), float(op), float(cov.trace))


@dataclass(frozen=True)
class ClippedMomentStats:
    mean: np.ndarray
    trace: float
    opnorm: float
    mean_stderr: float  # standard error of the norm of the sample mean (sqrt(trace / n))
    trace_stderr: float


def clipped_moment_stats(sampler, level, n, gen, shift=None):
    """Monte-Carlo moments of clip(shift + X), X drawn from sampler, with standard errors."""
    level = _check_level(level)
    n = int(n)
    if n < 2:
        raise InputError("need n >= 2 samples")
    X = draw_many(sampler, gen, n)
    if shift is not None:
        X = X + as_vec(shift, "shift")
    C = clip_rows(X, level)
    mean = C.mean(axis=0)
    dev = C - mean
    sq = np.einsum("ij,ij->i", dev, dev)
    trace = float(sq.mean())
    cov = CovModel.full(dev.T @ dev / n) if C.shape[1] > 1 else CovModel.isotropic(trace, 1)
    return ClippedMomentStats(
        mean=mean,
        trace=trace,
        opnorm=float(cov.opnorm),
        mean_stderr=float(np.sqrt(trace / n)),
        trace_stderr=float(sq.std(ddof=1) / np.sqrt(n)),
    )


def empirical_clipped_moments(sampler, level, n, gen, shift=None):
    """(sample mean, sample trace, sample operator norm) of clipped draws."""
    s = clipped_moment_stats(sampler, level, n, gen, shift)
    return s.mean, s.trace, s.opnorm
