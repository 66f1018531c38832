"""Heavy-tailed sample generators with exactly known covariance."""
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .numeric import CovModel, _frozen, as_vec

KINDS = ("gaussian", "student_t", "pareto_radial", "scalar_t", "point_mass")


@dataclass(frozen=True, eq=False)
class DistHandle:
    kind: str
    cov: CovModel = None  # target covariance (gaussian / student_t / pareto_radial)
    nu: float = None
    alpha_tail: float = None
    var: float = None  # scalar_t target variance
    v: np.ndarray = None  # point_mass location

    @property
    def dim(self):
        if self.kind == "scalar_t":
            return 1
        if self.kind == "point_mass":
            return self.v.size
        return self.cov.d

    @property
    def symmetric(self):
        """True when the law is invariant under x -> -x (so clipped draws have mean zero)."""
        if self.kind == "point_mass":
            return not np.any(self.v)
        return True

    def __eq__(self, other):
        return isinstance(other, DistHandle) and describe(self) == describe(other)

    __hash__ = None


def gaussian(cov):
    return DistHandle("gaussian", cov=cov)


def student_t(nu, target_cov):
    nu = float(nu)
    if not nu > 2:
        raise InputError("student_t needs nu > 2 for a finite covariance")
    return DistHandle("student_t", cov=target_cov, nu=nu)


def pareto_radial(alpha_tail, target_cov):
    a = float(alpha_tail)
    if not 2 < a <= 4:
        raise InputError("pareto_radial needs alpha_tail in (2, 4]")
    return DistHandle("pareto_radial", cov=target_cov, alpha_tail=a)


def scalar_t(nu, target_var):
    nu, var = float(nu), float(target_var)
    if not nu > 2:
        raise InputError("scalar_t needs nu > 2 for a finite variance")
    if not (np.isfinite(var) and var >= 0):
        raise InputError("scalar_t variance must be finite and >= 0")
    return DistHandle("scalar_t", nu=nu, var=var)


def point_mass(v):
    return DistHandle("point_mass", v=_frozen(as_vec(v, "point mass")))


def _apply_factor(cov, z):
    if cov.kind == "full":
        return z @ cov.factor.T
    return z * np.sqrt(cov.entries)


def draw_many(h, gen, n):
    """n independent draws as an (n, d) array."""
    n = int(n)
    if h.kind == "point_mass":
        return np.tile(h.v, (n, 1))
    if h.kind == "gaussian":
        return _apply_factor(h.cov, gen.standard_normal((n, h.cov.d)))
    if h.kind in ("student_t", "scalar_t"):
        cov = h.cov if h.kind == "student_t" else CovModel.isotropic(h.var, 1)
        z = gen.standard_normal((n, cov.d))
        w = gen.chisquare(h.nu, n)
        # factor shrunk by (nu-2)/nu so the t inflation nu/(nu-2) lands exactly on the target
        base = _apply_factor(cov, z) * np.sqrt((h.nu - 2.0) / h.nu)
        return base * np.sqrt(h.nu / w)[:, None]
    if h.kind == "pareto_radial":
        d = h.cov.d
        g = gen.standard_normal((n, d))
        u = g / np.linalg.norm(g, axis=1)[:, None]
        r = 1.0 + gen.pareto(h.alpha_tail, n)  # classical Pareto with minimum 1
        a = h.alpha_tail
        c = np.sqrt(d * (a - 2.0) / a)  # E[r^2] = a/(a-2), E[uu^T] = I/d
        return _apply_factor(h.cov, u * (r * c)[:, None])
    raise InputError(f"unknown distribution kind {h.kind!r}")


def draw(h, gen):
    return draw_many(h, gen, 1)[0]


def true_cov(h):
    if h.kind == "point_mass":
        return CovModel.isotropic(0.0, h.v.size)
    if h.kind == "scalar_t":
        return CovModel.isotropic(h.var, 1)
    return h.cov


# ---------------------------------------------------------------- config text

def _split_top(text, sep=","):
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def parse_cov(text):
    """identity:D | iso:VAR:D | diag:[a,b,...] | full:[[..],[..]]"""
    text = text.strip()
    kind, _, rest = text.partition(":")
    try:
        if kind == "identity":
            return CovModel.identity(int(rest))
        if kind == "iso":
            var, _, d = rest.partition(":")
            return CovModel.isotropic(float(var), int(d))
        if kind == "diag":
            return CovModel.diagonal(json.loads(rest))
        if kind == "full":
            return CovModel.full(json.loads(rest))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad covariance spec {text!r}: {exc}") from exc
    raise ConfigError(f"unknown covariance spec {text!r}")


def parse_handle(text):
    """Parse e.g. 'kind=student_t, nu=3.0, cov=diag:[1,1,4]'."""
    fields = {}
    for part in _split_top(text):
        key, eq, val = part.partition("=")
        if not eq:
            raise ConfigError(f"expected key=value in distribution spec, got {part!r}")
        fields[key.strip()] = val.strip()
    kind = fields.pop("kind", None)
    try:
        if kind == "gaussian":
            h = gaussian(parse_cov(fields.pop("cov")))
        elif kind == "student_t":
            h = student_t(float(fields.pop("nu")), parse_cov(fields.pop("cov")))
        elif kind == "pareto_radial":
            h = pareto_radial(float(fields.pop("alpha")), parse_cov(fields.pop("cov")))
        elif kind == "scalar_t":
            h = scalar_t(float(fields.pop("nu")), float(fields.pop("var", 1.0)))
        elif kind == "point_mass":
            h = point_mass(json.loads(fields.pop("v")))
        else:
            raise ConfigError(f"unknown distribution kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"distribution spec {text!r} is missing {exc}") from exc
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    if fields:
        raise ConfigError(f"unexpected keys {sorted(fields)} in distribution spec")
    return h


def describe(h):
    if h.kind == "gaussian":
        return f"kind=gaussian, cov={h.cov.describe()}"
    if h.kind == "student_t":
        return f"kind=student_t, nu={h.nu!r}, cov={h.cov.describe()}"
    if h.kind == "pareto_radial":
        return f"kind=pareto_radial, alpha={h.alpha_tail!r}, cov={h.cov.describe()}"
    if h.kind == "scalar_t":
        return f"kind=scalar_t, nu={h.nu!r}, var={h.var!r}"
    return "kind=point_mass, v=[" + ",".join(repr(float(x)) for x in h.v) + "]"
