"""Experiment files: INI-style sections of key = value lines.

[experiment]  name, T_grid, trials, deltas, baselines, metric, base_seed, init, threads, mc_n
[oracle]      kind (mean|linreg|logreg|lad), optimum, noise, covariate
[plan]        regime (StrCvx|StrCvxQG|SmoothCvx|LipCvx|explicit), multipliers
              (c_gamma, c_const, C_M, eta), C4, and any ProblemParams override
              (delta, D1, mu, L, G, cov_trace, cov_opnorm, alpha, beta, d_eff).
              An explicit plan gives clip_level, step_kind, output and A/mu/gamma or eta.
[domain]      kind (unconstrained|ball|box) with center/radius or lower/upper
[concentration]  increment, T, d, deltas, C_grid, trials, bound, k_convention, seed
[moments]     nu, d, mean_norms, levels, n, seed

Lists are comma separated. Distribution handles read like
``kind=student_t, nu=3.0, cov=diag:[1,1,4]``.
"""
import configparser

from ..errors import ConfigError, InputError
from ..numeric import ConvexSet
from ..oracles import OracleSpec
from ..schedule import ParamPlan, log_term
from .experiment import Experiment, RegimePlan

PARAM_KEYS = ("delta", "D1", "mu", "L", "G", "cov_trace", "cov_opnorm", "alpha", "beta", "d_eff")
CONSTANT_KEYS = {"StrCvx": ("c_gamma", "c_const"), "StrCvxQG": ("c_gamma", "c_const"),
                 "SmoothCvx": ("eta", "C_M", "c_const"), "LipCvx": ("eta", "C_M", "c_const")}


def floats(text):
    try:
        return tuple(float(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a list of numbers, got {text!r}") from exc


def ints(text):
    try:
        return tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a list of integers, got {text!r}") from exc


def read_config(path_or_text):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        if "\n" in path_or_text or "[" in path_or_text:
            cp.read_string(path_or_text)
        else:
            with open(path_or_text) as fh:
                cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    return {s: dict(cp[s]) for s in cp.sections()}


def _num(section, key, cast=float, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {section[key]!r}") from exc


def parse_domain(sec):
    if not sec or sec.get("kind", "unconstrained") == "unconstrained":
        return ConvexSet()
    try:
        if sec["kind"] == "ball":
            return ConvexSet.ball(floats(sec["center"]), float(sec["radius"]))
        if sec["kind"] == "box":
            return ConvexSet.box(floats(sec["lower"]), floats(sec["upper"]))
    except (KeyError, InputError, ValueError) as exc:
        raise ConfigError(f"bad domain: {exc}") from exc
    raise ConfigError(f"unknown domain kind {sec['kind']!r}")


def parse_plan(sec, T):
    sec = dict(sec)
    regime = sec.pop("regime", None)
    if regime == "explicit":
        try:
            kw = dict(step_kind=sec["step_kind"], output=sec.get("output", "last"),
                      clip_level=float(sec["clip_level"]))
            if kw["step_kind"] == "decaying":
                kw.update(A=float(sec.get("A", 4.0)), mu=float(sec["mu"]), gamma=float(sec.get("gamma", 0.0)))
            else:
                kw["eta"] = float(sec["eta"])
            delta = float(sec.get("delta", 0.05))
            return ParamPlan("explicit", T, log_term=log_term(T, delta), **kw)
        except (KeyError, ValueError, InputError) as exc:
            raise ConfigError(f"bad explicit plan: {exc}") from exc
    if regime not in CONSTANT_KEYS:
        raise ConfigError(f"unknown regime {regime!r}")
    params = {k: float(sec.pop(k)) for k in PARAM_KEYS if k in sec}
    consts = {}
    for k in CONSTANT_KEYS[regime]:
        if k in sec:
            v = sec.pop(k)
            consts[k] = v if v == "auto" else float(v)
    C4 = float(sec.pop("C4")) if "C4" in sec else None
    if sec:
        raise ConfigError(f"unexpected plan keys {sorted(sec)}")
    return RegimePlan(regime, params, consts, C4)


def experiment_from_config(cfg, seed=None, trials=None, threads=None):
    for s in ("experiment", "oracle", "plan"):
        if s not in cfg:
            raise ConfigError(f"missing [{s}] section")
    ex = dict(cfg["experiment"])
    oracle = OracleSpec.from_config(cfg["oracle"])
    T_grid = ints(ex.get("T_grid", ""))
    if not T_grid:
        raise ConfigError("T_grid is required")
    plan = parse_plan(cfg["plan"], T_grid[0])
    try:
        return Experiment(
            name=ex.get("name", "experiment"),
            oracle=oracle,
            plan_source=plan,
            T_grid=T_grid,
            trials=trials if trials is not None else _num(ex, "trials", int),
            deltas=floats(ex.get("deltas", "0.05")),
            baselines=tuple(b.strip() for b in ex.get("baselines", "").split(",") if b.strip()),
            metric=ex.get("metric", "param_error"),
            base_seed=seed if seed is not None else _num(ex, "base_seed", int, 0),
            init=floats(ex["init"]) if "init" in ex else None,
            domain=parse_domain(cfg.get("domain")),
            mc_n=_num(ex, "mc_n", int, 20_000),
            threads=threads if threads is not None else _num(ex, "threads", int, 1),
        )
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
