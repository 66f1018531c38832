"""Monte-Carlo checks of martingale concentration bounds for clipped increments."""
import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .clipping import clip_rows, clipped_moment_stats
from .errors import InputError
from .generators import draw_many, gaussian, student_t, true_cov
from .numeric import CovModel, make_generator
from .schedule import log_term

CSV_FIELDS = ("experiment_id", "bound_kind", "C_M", "T", "d", "delta", "violation_rate", "stderr", "trials")


def up_index(t, T):
    """Smallest power of two >= t, capped at T."""
    t, T = int(t), int(T)
    if not 1 <= t <= T:
        raise InputError("need 1 <= t <= T")
    return min(T, 1 << (t - 1).bit_length())


def up_indices(T):
    t = np.arange(1, T + 1)
    p = np.ones(T, dtype=np.int64)
    big = t > 1
    p[big] = 1 << np.ceil(np.log2(t[big])).astype(np.int64)
    # exact powers of two can round badly in log2; repair with integer checks
    p = np.where(p // 2 >= t, p // 2, p)
    p = np.where(p < t, p * 2, p)
    return np.minimum(p, T)


def _check_delta(delta, hi=0.5):
    delta = float(delta)
    if not 0 < delta <= hi:
        raise InputError(f"delta must lie in (0, {hi}]")
    return delta


def k_constant(q_bar, level, T, d, C_M, convention="loglog"):
    """K of the refined bound. 'loglog': lnln((sqrt(q T)/level + 1) ln(d+1)) + C_M, floored at 2;
    'coarse': 4 max(8, C_M, ln T)."""
    if convention == "coarse":
        return 4.0 * max(8.0, C_M, math.log(T))
    if convention != "loglog":
        raise InputError(f"unknown K convention {convention!r}")
    arg = (math.sqrt(q_bar * T) / level + 1.0) * math.log(d + 1)
    inner = math.log(arg) if arg > 0 else 0.0
    lnln = math.log(inner) if inner > 1.0 else 0.0
    return max(2.0, lnln + C_M)


def refined_bound(q_bar, p_bar, level, T, delta, d, C_M=1.0, k_convention="loglog"):
    """g(T, delta) sqrt(T) with g = C_M [sqrt(q) + p sqrt(T)/level + (level/sqrt(T)) ln(K/delta)]."""
    delta = _check_delta(delta)
    if q_bar < 0 or p_bar < 0 or not level > 0 or T < 1 or d < 1 or not C_M > 0:
        raise InputError("refined_bound needs q, p >= 0, level > 0, T, d >= 1, C_M > 0")
    K = k_constant(q_bar, level, T, d, C_M, k_convention)
    rt = math.sqrt(T)
    g = C_M * (math.sqrt(q_bar) + p_bar * rt / level + (level / rt) * math.log(K / delta))
    return g * rt


def freedman_bound(q_bar, level, T, delta, d):
    """Matrix Freedman: g0 sqrt(T) with g0 = (2 level/(3 sqrt T)) ln((d+1)/delta) + sqrt(2 q ln((d+1)/delta))."""
    delta = _check_delta(delta, hi=1.0)
    if delta >= 1.0 or q_bar < 0 or level < 0:
        raise InputError("freedman_bound needs delta in (0,1), q >= 0, level >= 0")
    lg = math.log((d + 1) / delta)
    return (2 * level / 3) * lg + math.sqrt(2 * q_bar * T * lg)


def scalar_freedman_bound(var_sum, tau, delta):
    delta = _check_delta(delta, hi=1.0)
    if var_sum < 0 or tau < 0:
        raise InputError("var_sum and tau must be >= 0")
    lg = math.log(1 / delta)
    return 2 * math.sqrt(lg * var_sum) + 2 * tau * lg


def remark_clip_level(opnorm, trace, T, delta, d, C_M=1.0, iters=50):
    """Fixed point of level = sqrt(opnorm T / ln(K/delta)), with K evaluated at that level."""
    level = math.sqrt(opnorm * T)
    for _ in range(iters):
        K = k_constant(trace, level, T, d, C_M)
        new = math.sqrt(opnorm * T / math.log(K / delta))
        if abs(new - level) <= 1e-14 * new:
            return new
        level = new
    return level


@dataclass(frozen=True, eq=False)
class MartingaleSpec:
    d: int
    T: int
    increment: object
    gamma_sim: float
    per_step_cov: CovModel
    center: np.ndarray
    tau: float  # almost-sure bound on ||v_t||

    @property
    def q_bar(self):
        return self.per_step_cov.trace

    @property
    def p_bar(self):
        return self.per_step_cov.opnorm


def build_martingale_spec(increment, gamma_sim, T, gen, pilot_n=100_000):
    """Increments v_t = clip(raw_t) - E clip(raw); covariance measured once from a pilot sample."""
    d = increment.dim
    gamma_sim = float(gamma_sim)
    stats = clipped_moment_stats(increment, gamma_sim, pilot_n, gen)
    if increment.symmetric:
        center = np.zeros(d)  # odd map of a symmetric law: exact mean zero
        tau = gamma_sim
    else:
        center = stats.mean
        tau = 2.0 * gamma_sim
    if d == 1:
        cov = CovModel.isotropic(stats.trace, 1)
    else:
        X = clip_rows(draw_many(increment, gen, pilot_n), gamma_sim) - center
        cov = CovModel.full(X.T @ X / pilot_n)
    return MartingaleSpec(d, int(T), increment, gamma_sim, cov, center, tau)


@dataclass(frozen=True)
class BoundReport:
    bound_value: float
    violation_rate: float
    trials: int
    stderr: float
    violations: int = 0


def _report(bound, violated):
    n = violated.size
    k = int(np.count_nonzero(violated))
    rate = k / n
    return BoundReport(float(bound), rate, n, math.sqrt(rate * (1 - rate) / n), k)


def _paths(spec, trials, gen):
    base = int(gen.integers(0, 2 ** 63))
    for i in range(trials):
        g = make_generator(base, i)
        yield clip_rows(draw_many(spec.increment, g, spec.T), spec.gamma_sim) - spec.center


def increments(spec, trials, gen):
    """(trials, T, d) array of simulated increments."""
    return np.stack(list(_paths(spec, trials, gen)))


def sup_norms(spec, trials, gen):
    """sup_t ||M_t|| for each simulated trial."""
    out = np.empty(trials)
    for i, V in enumerate(_paths(spec, trials, gen)):
        M = np.cumsum(V, axis=0)
        out[i] = np.sqrt(np.max(np.einsum("ij,ij->i", M, M)))
    return out


def quad_variation_rhs(spec, delta):
    """Per-t right-hand side of the quadratic-variation bound divided by C_M."""
    T = spec.T
    t = np.arange(1, T + 1, dtype=np.float64)
    up = up_indices(T).astype(np.float64)
    ell = log_term(T, delta)
    tau2 = spec.tau ** 2
    return up * spec.q_bar + tau2 * ell ** 2 + t * up * spec.p_bar ** 2 / tau2


def quad_variation_ratios(spec, trials, delta, gen):
    """max_t LHS_t / RHS_t per trial; the bound with constant C_M fails iff the ratio exceeds C_M."""
    rhs = quad_variation_rhs(spec, delta)
    out = np.empty(trials)
    for i, V in enumerate(_paths(spec, trials, gen)):
        lhs = np.cumsum(np.einsum("ij,ij->i", V, V))
        out[i] = np.max(lhs / rhs)
    return out


def simulate_sup_norm(spec, trials, bound, gen):
    if trials < 100:
        raise InputError("need at least 100 trials")
    return _report(bound, sup_norms(spec, trials, gen) >= bound)


def simulate_quad_variation(spec, trials, delta, C_M, gen):
    if trials < 100:
        raise InputError("need at least 100 trials")
    ratios = quad_variation_ratios(spec, trials, delta, gen)
    return _report(np.nan, ratios > C_M)


def default_increment(kind, d):
    if kind == "gaussian":
        return gaussian(CovModel.identity(d))
    if kind == "student_t3":
        return student_t(3.0, CovModel.identity(d))
    raise InputError(f"unknown increment kind {kind!r}")


def sweep(kind, T_list, d_list, deltas, C_grid, trials, seed, bound_kind="refined",
          k_convention="loglog", experiment_id="sweep"):
    """Violation rates over a (T, d, delta) grid for every constant in C_grid.

    Clip level per cell is the light-tail choice sqrt(||Sigma|| T / ln(K/delta)).
    Returns (rows, minimal C_M that passes every cell or None).
    """
    rows = []
    feasible = {C: True for C in C_grid}
    cell = 0
    for T in T_list:
        for d in d_list:
            for delta in deltas:
                inc = default_increment(kind, d)
                S = true_cov(inc)
                level = remark_clip_level(S.opnorm, S.trace, T, delta, d)
                gen = make_generator(seed, cell)
                cell += 1
                spec = build_martingale_spec(inc, level, T, gen)
                if bound_kind == "qv":
                    stat = quad_variation_ratios(spec, trials, delta, gen)
                else:
                    stat = sup_norms(spec, trials, gen)
                for C in C_grid:
                    if bound_kind == "qv":
                        rep = _report(np.nan, stat > C)
                    elif bound_kind == "freedman":
                        b = freedman_bound(spec.q_bar, spec.tau, T, delta, d)
                        rep = _report(b, stat >= b)
                    else:
                        b = refined_bound(spec.q_bar, spec.p_bar, spec.tau, T, delta, d, C, k_convention)
                        rep = _report(b, stat >= b)
                    ok = rep.violation_rate <= delta + 3 * rep.stderr
                    feasible[C] &= ok
                    rows.append(dict(experiment_id=f"{experiment_id}:{kind}", bound_kind=bound_kind, C_M=C,
                                     T=T, d=d, delta=delta, violation_rate=rep.violation_rate,
                                     stderr=rep.stderr, trials=rep.trials))
    passing = [C for C in C_grid if feasible[C]]
    return rows, (min(passing) if passing else None)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(r[k]) if isinstance(r[k], float) else r[k]) for k in CSV_FIELDS})
    return buf.getvalue()
