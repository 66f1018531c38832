"""Seeded Monte-Carlo trials of clipped SGD against baselines."""
import csv
import hashlib
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from ..engine import RunConfig, run
from ..errors import ConfigError, InputError, RunAborted
from ..numeric import ConvexSet, as_vec, make_generator, norm2
from ..oracles import derived_constants, draw_samples, population_gap
from ..schedule import ParamPlan, ProblemParams, log_term, make_plan, qg_gamma_arms, strongly_convex_gamma_arms

METHOD = "clipped_sgd"
BASELINES = ("vanilla_sgd", "batch_mean", "batch_ols")
CSV_COLUMNS = ("experiment", "method", "T", "delta", "trials", "quantile", "median", "mean",
               "clip_events_mean", "seed")
NO_CLIP = 1e300


@dataclass(frozen=True)
class RegimePlan:
    """Plan resolved per horizon from the oracle's derived constants plus overrides."""
    regime: str
    params: dict = field(default_factory=dict)  # ProblemParams overrides (delta, D1, ...)
    constants: dict = field(default_factory=dict)  # c_gamma, c_const, C_M, eta
    C4: float = None

    def resolve(self, oracle, T, init):
        kw = derived_constants(oracle, self.C4)
        kw.setdefault("D1", norm2(as_vec(init) - oracle.optimum))
        kw.update(self.params)
        kw.setdefault("delta", 0.05)
        return make_plan(self.regime, ProblemParams(T=int(T), **kw), **self.constants)


@dataclass(frozen=True, eq=False)
class Experiment:
    name: str
    oracle: object
    plan_source: object  # RegimePlan or ParamPlan
    T_grid: tuple
    trials: int
    deltas: tuple = (0.05,)
    baselines: tuple = ()
    metric: str = "param_error"
    base_seed: int = 0
    init: np.ndarray = None
    domain: ConvexSet = ConvexSet()
    mc_n: int = 20_000
    threads: int = 1
    enforce_trials_floor: bool = True

    def __post_init__(self):
        T_grid = tuple(int(t) for t in self.T_grid)
        if not T_grid or list(T_grid) != sorted(T_grid) or T_grid[0] < 1:
            raise ConfigError("T_grid must be a non-empty ascending list of horizons >= 1")
        object.__setattr__(self, "T_grid", T_grid)
        deltas = tuple(float(x) for x in self.deltas)
        if not deltas or any(not 0 < x <= 0.5 for x in deltas):
            raise ConfigError("deltas must lie in (0, 1/2]")
        object.__setattr__(self, "deltas", deltas)
        if int(self.trials) < 1:
            raise ConfigError("trials must be >= 1")
        floor = math.ceil(10 / min(deltas) - 1e-9)
        if self.enforce_trials_floor and self.trials < floor:
            raise ConfigError(f"{self.trials} trials are too few for delta={min(deltas)}; need >= {floor}")
        for b in self.baselines:
            if b not in BASELINES:
                raise ConfigError(f"unknown baseline {b!r}")
            if b == "batch_mean" and self.oracle.kind != "mean":
                raise ConfigError("batch_mean applies to mean estimation only")
            if b == "batch_ols" and self.oracle.kind != "linreg":
                raise ConfigError("batch_ols applies to linear regression only")
        if self.metric not in ("param_error", "gap"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        init = np.zeros(self.oracle.d) if self.init is None else as_vec(self.init, "init")
        if init.size != self.oracle.d:
            raise ConfigError("init dimension does not match the oracle")
        object.__setattr__(self, "init", init)

    @property
    def methods(self):
        return (METHOD,) + tuple(self.baselines)

    def plan(self, T):
        src = self.plan_source
        if isinstance(src, ParamPlan):
            return src if src.T == T else replace(src, T=int(T))
        return src.resolve(self.oracle, T, self.init)


def trial_seed(base_seed, T, method, trial):
    """base_seed XOR a stable 64-bit hash of (T, method, trial)."""
    h = hashlib.blake2b(f"{int(T)}|{method}|{int(trial)}".encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(h, "little")) & (2 ** 64 - 1)


def _metric(e, est, seed):
    if e.metric == "param_error":
        return norm2(est - e.oracle.optimum)
    return population_gap(e.oracle, est, e.mc_n, make_generator(seed, 1))[0]


def run_trial(e, method, T, trial, plan=None):
    """(seed, error, clip events, aborted) for one trial."""
    seed = trial_seed(e.base_seed, T, method, trial)
    if method in (METHOD, "vanilla_sgd"):
        plan = plan or e.plan(T)
        if method == "vanilla_sgd":
            plan = plan.with_clip_level(NO_CLIP)
        try:
            res = run(e.oracle, RunConfig(e.init, plan, e.domain, seed=seed))
        except RunAborted:
            return seed, math.inf, 0, True
        est = res.output(plan.output)
        clips = res.clip_events
    else:
        X, y = draw_samples(e.oracle, make_generator(seed), T)
        if method == "batch_mean":
            est = X.mean(axis=0)
        else:
            est = np.linalg.lstsq(X, y, rcond=None)[0]
        clips = 0
    err = _metric(e, est, seed)
    if not math.isfinite(err):
        return seed, math.inf, clips, True
    return seed, err, clips, False


def empirical_quantile(errors, level):
    """k-th smallest value with k = ceil(level n); no interpolation."""
    x = np.sort(np.asarray(errors, dtype=np.float64))
    if x.size == 0:
        raise InputError("empty error list")
    if not 0 < level < 1:
        raise InputError("level must lie in (0, 1)")
    k = math.ceil(round(level * x.size, 9))
    return float(x[min(max(k, 1), x.size) - 1])


@dataclass
class TrialReport:
    experiment: str
    base_seed: int
    records: list  # (method, T, trial, seed, error, clip_events, aborted), sorted
    aggregates: list  # dicts with CSV_COLUMNS plus 'aborted'
    plans: dict  # T -> plan record

    def errors(self, method, T):
        return np.array([r[4] for r in self.records if r[0] == method and r[1] == T])

    def clip_events(self, method, T):
        return np.array([r[5] for r in self.records if r[0] == method and r[1] == T])

    def aborted(self):
        return sum(1 for r in self.records if r[6])

    def row(self, method, T, delta):
        for a in self.aggregates:
            if a["method"] == method and a["T"] == T and a["delta"] == delta:
                return a
        raise KeyError((method, T, delta))


def _aggregate(e, records):
    rows = []
    for method in e.methods:
        for T in e.T_grid:
            sel = [r for r in records if r[0] == method and r[1] == T]
            err = np.array([r[4] for r in sel])
            clips = np.array([r[5] for r in sel], dtype=np.float64)
            for delta in e.deltas:
                rows.append(dict(
                    experiment=e.name, method=method, T=T, delta=delta, trials=len(sel),
                    quantile=empirical_quantile(err, 1 - delta), median=empirical_quantile(err, 0.5),
                    mean=float(np.mean(err)), clip_events_mean=float(np.mean(clips)), seed=e.base_seed,
                    aborted=int(sum(r[6] for r in sel)),
                ))
    return rows


def run_experiment(e):
    records = []
    plans = {}
    for T in e.T_grid:
        plan = e.plan(T)
        plans[T] = plan.to_record()
        for method in e.methods:
            def work(i, method=method, T=T, plan=plan):
                return (method, T, i) + run_trial(e, method, T, i, plan)
            if e.threads > 1:
                with ThreadPoolExecutor(e.threads) as ex:
                    out = list(ex.map(work, range(e.trials)))
            else:
                out = [work(i) for i in range(e.trials)]
            records.extend(out)
    order = {m: k for k, m in enumerate(e.methods)}
    records.sort(key=lambda r: (order[r[0]], r[1], r[2]))
    return TrialReport(e.name, e.base_seed, records, _aggregate(e, records), plans)


def compare_baselines(e, report=None):
    """Per (T, delta): quantiles of every method and clipped/baseline ratios."""
    if not e.baselines:
        raise ConfigError("experiment has no baselines to compare against")
    report = report or run_experiment(e)
    table = []
    for T in e.T_grid:
        for delta in e.deltas:
            main = report.row(METHOD, T, delta)
            row = {"T": T, "delta": delta, f"{METHOD}_quantile": main["quantile"],
                   f"{METHOD}_median": main["median"]}
            for b in e.baselines:
                other = report.row(b, T, delta)
                row[f"{b}_quantile"] = other["quantile"]
                row[f"{b}_median"] = other["median"]
                row[f"ratio_{b}"] = main["quantile"] / other["quantile"] if other["quantile"] > 0 else math.inf
                row[f"median_ratio_{b}"] = main["median"] / other["median"] if other["median"] > 0 else math.inf
            table.append(row)
    return table


# ---------------------------------------------------------------- predicted rates

def strongly_convex_rate(mu, trace, opnorm, D1, gamma, T, ell):
    return gamma * D1 / (T + gamma) + math.sqrt((trace + math.sqrt(trace * opnorm) * ell) / (T + gamma)) / mu


def qg_rate(mu, beta, d_eff, D1, gamma, T, ell):
    return gamma * D1 / (T + gamma) + math.sqrt(beta * (d_eff + math.sqrt(d_eff) * ell) / (T + gamma)) / mu


def smooth_convex_rate(L, trace, opnorm, D1, T, ell):
    return L * D1 ** 2 / T + D1 * math.sqrt((trace + math.sqrt(opnorm) * (math.sqrt(trace) + L * D1) * ell) / T)


def lipschitz_rate(G, trace, opnorm, D1, T, ell):
    return D1 * G / math.sqrt(T) + D1 * math.sqrt((trace + math.sqrt(opnorm) * (math.sqrt(trace) + G) * ell) / T)


def rate_curve(regime, params, T_grid, c_gamma=1.0):
    """[(T, predicted error)] with the hidden constant set to 1."""
    out = []
    for T in T_grid:
        p = params.updated(T=int(T))
        ell = log_term(T, p.delta)
        if regime == "StrCvx":
            g = max(c_gamma * max(strongly_convex_gamma_arms(p)), 4 * p.L / p.mu + 3)
            v = strongly_convex_rate(p.mu, p.cov_trace, p.cov_opnorm, p.D1, g, T, ell)
        elif regime == "StrCvxQG":
            g = max(c_gamma * max(qg_gamma_arms(p)), 4 * p.L / p.mu + 3)
            v = qg_rate(p.mu, p.beta, p.d_eff, p.D1, g, T, ell)
        elif regime == "SmoothCvx":
            v = smooth_convex_rate(p.L, p.cov_trace, p.cov_opnorm, p.D1, T, ell)
        elif regime == "LipCvx":
            v = lipschitz_rate(p.G, p.cov_trace, p.cov_opnorm, p.D1, T, ell)
        else:
            raise InputError(f"unknown regime {regime!r}")
        out.append((int(T), float(v)))
    return out


# ---------------------------------------------------------------- output

def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _select(report, methods):
    if methods is not None:
        methods = tuple(methods)
        if not methods:
            raise ConfigError("empty method subset")
        rows = [a for a in report.aggregates if a["method"] in methods]
    else:
        rows = list(report.aggregates)
    if not rows:
        raise ConfigError("nothing to emit")
    return rows


def format_report(report, fmt="csv", methods=None):
    rows = _select(report, methods)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
        return buf.getvalue()
    if fmt == "json":
        return json.dumps([{c: r[c] for c in CSV_COLUMNS} for r in rows], indent=1) + "\n"
    if fmt == "plotdata":
        lines = []
        series = []
        for r in rows:
            key = (r["method"], r["delta"])
            if key not in series:
                series.append(key)
        for method, delta in series:
            lines.append(f"# experiment={report.experiment} method={method} delta={delta!r}")
            lines.append("# T quantile median mean")
            pts = sorted((r for r in rows if r["method"] == method and r["delta"] == delta), key=lambda r: r["T"])
            for r in pts:
                lines.append(f"{r['T']} {_fmt(r['quantile'])} {_fmt(r['median'])} {_fmt(r['mean'])}")
            lines.append("")
            lines.append("")
        return "\n".join(lines)
    raise ConfigError(f"unknown format {fmt!r}")


def emit(report, fmt, path, methods=None):
    """Write the report; all validation happens before the file is opened."""
    text = format_report(report, fmt, methods)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        for c in ("T", "trials", "seed"):
            r[c] = int(r[c])
        for c in ("delta", "quantile", "median", "mean", "clip_events_mean"):
            r[c] = float(r[c])
    return rows
