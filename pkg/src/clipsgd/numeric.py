"""Vectors, convex sets, covariance models and seeded generators."""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DecompositionError, InputError, NumericError


def as_vec(v, name="vector"):
    """Return v as a fresh contiguous float64 1-d array, rejecting non-finite entries."""
    a = np.array(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise InputError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return np.ascontiguousarray(a)


def _frozen(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


def norm2(v):
    """Euclidean norm, overflow-safe."""
    return float(K.vnorm(as_vec(v)))


def make_generator(seed, stream=0):
    """numpy Generator determined by a 64-bit seed and a stream index."""
    seed, stream = int(seed), int(stream)
    if not 0 <= seed < 2 ** 64 or stream < 0:
        raise InputError("seed must be a 64-bit unsigned integer and stream >= 0")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream,))))


# ---------------------------------------------------------------- convex sets

@dataclass(frozen=True)
class ConvexSet:
    kind: str = "unconstrained"
    center: np.ndarray = None
    radius: float = np.inf
    lower: np.ndarray = None
    upper: np.ndarray = None

    @classmethod
    def unconstrained(cls):
        return cls()

    @classmethod
    def ball(cls, center, radius):
        c = as_vec(center, "center")
        radius = float(radius)
        if not (np.isfinite(radius) and radius > 0):
            raise InputError("ball radius must be finite and positive")
        return cls("ball", center=_frozen(c), radius=radius)

    @classmethod
    def box(cls, lower, upper):
        lo, hi = as_vec(lower, "lower"), as_vec(upper, "upper")
        if lo.shape != hi.shape or np.any(lo > hi):
            raise InputError("box needs lower <= upper with matching dimensions")
        return cls("box", lower=_frozen(lo), upper=_frozen(hi))

    @property
    def dim(self):
        if self.kind == "ball":
            return self.center.size
        if self.kind == "box":
            return self.lower.size
        return None

    def kernel_args(self, d):
        """(kind code, center, radius, lower, upper) as expected by the compiled loops."""
        z = np.zeros(d)
        if self.kind == "ball":
            return K.BALL, self.center, self.radius, z, z
        if self.kind == "box":
            return K.BOX, z, 0.0, self.lower, self.upper
        return K.UNCONSTRAINED, z, 0.0, z, z

    def contains(self, x, tol=0.0):
        x = as_vec(x)
        if self.kind == "ball":
            return K.vnorm(x - self.center) <= self.radius + tol
        if self.kind == "box":
            return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return True


def project(cset, x):
    """Euclidean projection onto cset."""
    x = as_vec(x, "x")
    if cset.dim is not None and cset.dim != x.size:
        raise InputError(f"dimension mismatch: set has d={cset.dim}, x has d={x.size}")
    out = np.empty_like(x)
    kind, c, r, lo, hi = cset.kernel_args(x.size)
    K.project_into(x, kind, c, r, lo, hi, out, np.empty_like(x))
    return out


# ---------------------------------------------------------------- covariance

def _power_top(a, max_iter, tol=1e-10):
    """Largest eigenvalue of a symmetric PSD matrix.

    Power iteration on successive squarings of the matrix (A, A^2, A^4, ...),
    started from the normalized all-ones vector, with one seeded random
    restart if the start vector is (numerically) orthogonal to the top
    eigenspace. The Rayleigh quotient is always taken with the original a.
    """
    d = a.shape[0]
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return 0.0
    m = a / scale
    v = np.ones(d) / np.sqrt(d)
    restarted = False
    rho_prev = None
    rho = float(v @ a @ v)
    for _ in range(max_iter):
        w = m @ v
        nw = np.linalg.norm(w)
        if nw <= 1e-200:
            if restarted:
                break
            restarted = True
            v = np.random.default_rng(12345).standard_normal(d)
            v /= np.linalg.norm(v)
            m = a / scale
            rho_prev = None
            continue
        v = w / nw
        rho = float(v @ a @ v)
        if rho_prev is not None and abs(rho - rho_prev) <= tol * abs(rho):
            return rho
        rho_prev = rho
        m = m @ m
        mm = np.max(np.abs(m))
        if mm == 0.0:
            return rho
        m /= mm
    raise NumericError("power iteration did not converge", estimate=rho)


def _cholesky_psd(a, op):
    """Lower-triangular L with L L^T = a for symmetric PSD a (zero pivots allowed)."""
    d = a.shape[0]
    tol = 1e-12 * op
    L = np.zeros_like(a)
    for j in range(d):
        piv = a[j, j] - L[j, :j] @ L[j, :j]
        if piv < -tol:
            raise DecompositionError(f"matrix not PSD (pivot {piv:.3e} at {j})")
        below = a[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]
        if piv <= tol:
            if np.any(np.abs(below) > 1e-8 * op):
                raise DecompositionError(f"matrix not PSD (zero pivot with off-diagonal mass at {j})")
            continue
        L[j, j] = np.sqrt(piv)
        L[j + 1:, j] = below / L[j, j]
    return L


@dataclass(frozen=True)
class CovModel:
    """Covariance of kind isotropic, diagonal or full (PSD).

    trace, opnorm and factor are computed once at construction.
    """
    kind: str
    d: int
    entries: np.ndarray = None  # diagonal entries (isotropic and diagonal kinds)
    full_matrix: np.ndarray = None
    trace: float = field(init=False)
    opnorm: float = field(init=False)
    factor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind in ("isotropic", "diagonal"):
            e = self.entries
            tr, op = float(np.sum(e)), float(np.max(e))
            fac = np.diag(np.sqrt(e))
        elif self.kind == "full":
            m = self.full_matrix
            op = _power_top(m, 10 * self.d)
            tr = float(np.trace(m))
            fac = _cholesky_psd(m, op)
        else:
            raise InputError(f"unknown covariance kind {self.kind!r}")
        object.__setattr__(self, "trace", tr)
        object.__setattr__(self, "opnorm", op)
        object.__setattr__(self, "factor", _frozen(fac))

    @classmethod
    def isotropic(cls, var, d):
        var, d = float(var), int(d)
        if not (np.isfinite(var) and var >= 0) or d < 1:
            raise InputError("isotropic covariance needs var >= 0 and d >= 1")
        return cls("isotropic", d, entries=_frozen(np.full(d, var)))

    @classmethod
    def identity(cls, d):
        return cls.isotropic(1.0, d)

    @classmethod
    def diagonal(cls, entries):
        e = as_vec(entries, "diagonal entries")
        if np.any(e < 0):
            raise InputError("diagonal covariance entries must be >= 0")
        return cls("diagonal", e.size, entries=_frozen(e))

    @classmethod
    def full(cls, matrix):
        m = np.array(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise InputError("full covariance must be a square matrix")
        if not np.all(np.isfinite(m)):
            raise InputError("covariance has non-finite entries")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(np.max(np.abs(m)), 1e-300):
            raise InputError("covariance must be symmetric")
        m = 0.5 * (m + m.T)
        return cls("full", m.shape[0], full_matrix=_frozen(m))

    def matrix(self):
        if self.kind == "full":
            return np.array(self.full_matrix)
        return np.diag(self.entries)

    @property
    def d_eff(self):
        return self.trace / self.opnorm if self.opnorm > 0 else 0.0

    def lambda_min(self):
        if self.kind != "full":
            return float(np.min(self.entries))
        shifted = self.opnorm * np.eye(self.d) - self.full_matrix
        return max(self.opnorm - _power_top(shifted, 10 * self.d), 0.0)

    def apply(self, v):
        if self.kind == "full":
            return self.full_matrix @ v
        return self.entries * v

    def __eq__(self, other):
        if not isinstance(other, CovModel) or self.kind != other.kind or self.d != other.d:
            return False
        a = self.full_matrix if self.kind == "full" else self.entries
        b = other.full_matrix if other.kind == "full" else other.entries
        return bool(np.array_equal(a, b))

    __hash__ = None

    def describe(self):
        if self.kind == "isotropic":
            return f"iso:{float(self.entries[0])!r}:{self.d}"
        if self.kind == "diagonal":
            return "diag:[" + ",".join(repr(float(x)) for x in self.entries) + "]"
        rows = ",".join("[" + ",".join(repr(float(x)) for x in r) + "]" for r in self.full_matrix)
        return f"full:[{rows}]"


def spd_factor(cov):
    """Lower-triangular sampling factor L with L L^T equal to the covariance."""
    return np.array(cov.factor)


def opnorm(cov):
    """Largest eigenvalue of the covariance."""
    return cov.opnorm
