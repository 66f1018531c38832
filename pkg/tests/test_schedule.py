import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clipsgd.errors import InputError, RegimeError
from clipsgd.schedule import (
    ParamPlan, ProblemParams, log_term, plan_lipschitz, plan_qg, plan_smooth_convex, plan_strongly_convex,
)


def test_log_term_examples():
    assert log_term(16, 0.05) == pytest.approx(4.016, abs=5e-4)
    assert log_term(3, 0.5) == pytest.approx(0.7872, abs=5e-5)
    assert log_term(2, 0.5) == log_term(3, 0.5)
    assert log_term(1, 0.5) == log_term(3, 0.5)


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.6, 1.0])
def test_log_term_rejects_delta(delta):
    with pytest.raises(InputError):
        log_term(100, delta)


@settings(max_examples=200, deadline=None)
@given(st.integers(3, 10 ** 7), st.integers(3, 10 ** 7), st.floats(1e-6, 0.5), st.floats(1e-6, 0.5))
def test_log_term_monotone(T1, T2, d1, d2):
    (T1, T2), (d1, d2) = sorted((T1, T2)), sorted((d1, d2))
    assert log_term(T1, d1) <= log_term(T2, d1)
    assert log_term(T1, d1) >= log_term(T1, d2)
    assert log_term(T1, d1) > 0


def _iso(T=1000, **kw):
    base = dict(T=T, delta=0.05, mu=1.0, L=1.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.0)
    base.update(kw)
    return ProblemParams(**base)


def test_strongly_convex_worked_example():
    plan = plan_strongly_convex(_iso())
    ell = math.log(math.log(1000) / 0.05)
    # ln(6.9078 / 0.05) = ln(138.155)
    assert ell == pytest.approx(4.9284, abs=5e-4)
    gamma = ell ** 2  # max(ell^2/4, ell, ell^2)
    assert plan.gamma == pytest.approx(gamma, rel=1e-14)
    assert plan.gamma == pytest.approx(24.289, abs=5e-3)
    level = (1 / ell) * math.sqrt((gamma + 1) ** 2 + (1000 + gamma) * (4 + 2 * ell))
    assert plan.clip_level == pytest.approx(level, rel=1e-14)
    assert plan.step_kind == "decaying" and plan.A == 4.0 and plan.output == "last"
    assert plan.log_term == ell


def test_strongly_convex_unit_deff():
    p = _iso(cov_trace=2.0, cov_opnorm=2.0)
    ell = log_term(1000, 0.05)
    assert ell >= 1
    assert plan_strongly_convex(p, c_gamma=1.0).gamma == pytest.approx(ell ** 2, rel=1e-14)


def test_strongly_convex_c_gamma_scaling():
    p = _iso(L=1.0)
    a, b = plan_strongly_convex(p, c_gamma=1.0), plan_strongly_convex(p, c_gamma=2.0)
    assert b.gamma == pytest.approx(2 * a.gamma, rel=1e-14)
    assert b.clip_level > a.clip_level


def test_strongly_convex_needs_mu():
    with pytest.raises(RegimeError, match="SmoothCvx or LipCvx"):
        plan_strongly_convex(_iso(mu=0.0))
    with pytest.raises(InputError):
        plan_strongly_convex(ProblemParams(T=10, delta=0.1, mu=1.0, L=1.0))


def test_gamma_floor_applied_and_recorded():
    p = _iso(L=10.0)
    plan = plan_strongly_convex(p, c_gamma=1e-3)
    assert plan.gamma == 4 * 10 + 3
    assert any("floor" in n for n in plan.notes)
    kappa = 10.0
    for t in range(1, 200):
        assert plan.step_size(t) <= 1 / (p.L + p.mu) * (1 + 1e-15)
    assert plan_strongly_convex(p, c_gamma=1.0).gamma >= 4 * kappa + 3


def test_qg_worked_example():
    p = ProblemParams(T=1000, delta=0.05, mu=1.0, L=1.0, alpha=1.0, beta=1.0, d_eff=4.0, D1=1.0)
    ell = math.log(math.log(1000) / 0.05)
    arms = [4.0, 2 * ell, ell, 2 * ell, 4 ** (1 / 3) * ell, ell, ell ** 2, ell / 4]
    gamma = max(arms)
    plan = plan_qg(p)
    assert plan.gamma == pytest.approx(gamma, rel=1e-14)
    level = (1 / ell) * math.sqrt((gamma + 1) ** 2 + (1000 + gamma) * (4 + 2 * ell))
    assert plan.clip_level == pytest.approx(level, rel=1e-14)


def test_qg_zero_alpha_and_beta():
    ell = log_term(1000, 0.05)
    p = ProblemParams(T=1000, delta=0.05, mu=0.5, L=5.0, alpha=0.0, beta=0.0, d_eff=2.0, D1=3.0)
    kappa = 10.0
    plan = plan_qg(p)
    assert plan.gamma == pytest.approx(max(kappa ** 1.5 * ell, kappa * ell ** 2, kappa ** 2 / 2 * ell), rel=1e-14)
    assert plan.clip_level == pytest.approx((0.5 / ell) * (plan.gamma + 1) * 3.0, rel=1e-14)
    with pytest.raises(InputError):
        plan_qg(ProblemParams(T=10, delta=0.1, mu=1.0, L=1.0, alpha=1.0))


def test_smooth_convex_examples():
    p = ProblemParams(T=900, delta=0.05, L=1.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.0)
    ell = log_term(900, 0.05)
    plan = plan_smooth_convex(p)
    assert plan.clip_level == pytest.approx(math.sqrt(900 * 3 / ell), rel=1e-14)
    assert plan.output == "average" and plan.step_kind == "constant"
    assert 0 < plan.eta <= 1 / 2
    assert plan_smooth_convex(p, eta=0.25).eta == 0.25
    clamped = plan_smooth_convex(p, eta=5.0)
    assert clamped.eta == 0.5 and clamped.notes
    with pytest.raises(InputError):
        plan_smooth_convex(ProblemParams(T=900, delta=0.05, L=1.0, cov_trace=0.0, cov_opnorm=0.0, D1=0.0))


def test_smooth_convex_auto_eta_formula():
    p = ProblemParams(T=900, delta=0.05, L=2.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.5)
    ell = log_term(900, 0.05)
    L, D, tr, op, T = 2.0, 1.5, 4.0, 1.0, 900
    A = math.sqrt(op) * (math.sqrt(tr) + L * D)
    B = 2 * math.sqrt(A * ell / T) + 2 * L * D * ell / (A * T) * (op * (tr / op) + L ** 2 * D ** 2)
    g = (math.sqrt(op * (tr / op)) + 3 * math.sqrt(A * ell) + 8 * L ** 4 * D ** 4 * ell ** 1.5 / (A ** 1.5 * T)
         + 2 * L ** 2 * D ** 2 * op * (tr / op) * ell ** 1.5 / (A ** 1.5 * T))
    expect = min(1 / (2 * L), D / (B * T), D / (g * math.sqrt(T))) / math.sqrt(8 + 330)
    assert plan_smooth_convex(p).eta == pytest.approx(expect, rel=1e-13)


def test_lipschitz_examples():
    p = ProblemParams(T=400, delta=0.1, G=2.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.0)
    ell = log_term(400, 0.1)
    plan = plan_lipschitz(p)
    assert plan.clip_level == pytest.approx(math.sqrt(400 * 4 / ell), rel=1e-14)
    assert plan.eta <= 2.0 / math.sqrt(400)
    assert plan_lipschitz(p, eta=10.0).eta == 2.0 / 20
    # T -> 4T doubles the level when ell is unchanged
    q = p.updated(T=1600)
    ratio = plan_lipschitz(q).clip_level / plan.clip_level
    assert ratio == pytest.approx(2 * math.sqrt(log_term(400, 0.1) / log_term(1600, 0.1)), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(1, 50), st.floats(0, 5), st.integers(10, 10 ** 6))
def test_lipschitz_auto_eta_clamp(G, trace, D1, T):
    p = ProblemParams(T=T, delta=0.05, G=G, cov_trace=trace, cov_opnorm=1.0, D1=D1 + 0.01)
    assert 0 < plan_lipschitz(p).eta <= G / math.sqrt(T)


def test_plans_are_pure():
    p = _iso(L=3.0)
    assert plan_strongly_convex(p) == plan_strongly_convex(_iso(L=3.0))
    q = ProblemParams(T=500, delta=0.1, L=2.0, cov_trace=3.0, cov_opnorm=1.0, D1=1.0)
    assert plan_smooth_convex(q).to_record() == plan_smooth_convex(q).to_record()


def test_clip_level_monotone_in_T():
    # strict growth once the horizon dominates the burn-in
    for kappa in (1.0, 4.0, 30.0):
        for D1 in (0.0, 1.0, 10.0):
            levels = []
            for T in range(50, 20000, 37):
                p = _iso(T=T, L=kappa, D1=D1)
                plan = plan_strongly_convex(p)
                if T >= plan.gamma:
                    levels.append(plan.clip_level)
            assert np.all(np.diff(levels) > 0)
            qg = []
            for T in range(50, 20000, 37):
                plan = plan_qg(ProblemParams(T=T, delta=0.05, mu=1.0, L=kappa, alpha=1.0, beta=1.0, d_eff=3.0, D1=D1))
                if T >= plan.gamma:
                    qg.append(plan.clip_level)
            assert np.all(np.diff(qg) > 0)
    for T_grid in (range(1, 3000, 5),):
        sm = [plan_smooth_convex(ProblemParams(T=T, delta=0.05, L=1.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.0)).clip_level
              for T in T_grid]
        lp = [plan_lipschitz(ProblemParams(T=T, delta=0.05, G=1.0, cov_trace=4.0, cov_opnorm=1.0, D1=1.0)).clip_level
              for T in T_grid]
        assert np.all(np.diff(sm) > 0) and np.all(np.diff(lp) > 0)


def test_clip_level_monotone_in_trace():
    traces = np.linspace(1.0, 40.0, 80)
    for D1 in (0.0, 1.0, 10.0):
        s = [plan_strongly_convex(_iso(cov_trace=t, D1=D1)).clip_level for t in traces]
        assert np.all(np.diff(s) > 0)
    sm = [plan_smooth_convex(ProblemParams(T=900, delta=0.05, L=1.0, cov_trace=t, cov_opnorm=1.0, D1=1.0)).clip_level
          for t in traces]
    lp = [plan_lipschitz(ProblemParams(T=900, delta=0.05, G=1.0, cov_trace=t, cov_opnorm=1.0, D1=1.0)).clip_level
          for t in traces]
    assert np.all(np.diff(sm) > 0) and np.all(np.diff(lp) > 0)


def test_clip_level_monotonicity_counterexamples():
    # Known exceptions that follow from the formulas: with kappa > 1 the first burn-in arm
    # ||S|| kappa^2 ell^2 / Tr shrinks as the trace grows, and while gamma >> T the growth
    # of ell in T outweighs the growth of T + gamma.
    lo = plan_strongly_convex(_iso(L=30.0, cov_trace=2.0)).clip_level
    hi = plan_strongly_convex(_iso(L=30.0, cov_trace=20.0)).clip_level
    assert hi < lo
    p = dict(delta=0.05, mu=1.0, L=30.0, alpha=1.0, beta=1.0, d_eff=3.0, D1=0.0)
    assert plan_qg(ProblemParams(T=8, **p)).clip_level < plan_qg(ProblemParams(T=1, **p)).clip_level


def test_param_plan_validation():
    with pytest.raises(InputError):
        ParamPlan("StrCvx", 10, float("inf"), "last", 1.0, "decaying", gamma=1.0, mu=1.0)
    with pytest.raises(InputError):
        ParamPlan("SmoothCvx", 10, 1.0, "average", 1.0, "constant", eta=0.0)
    rec = plan_strongly_convex(_iso()).to_record()
    assert {"regime", "gamma", "clip_level", "A", "output", "c_gamma", "c_const"} <= set(rec)


def test_problem_params_validation():
    with pytest.raises(InputError):
        ProblemParams(T=10, delta=0.7)
    with pytest.raises(InputError):
        ProblemParams(T=10, delta=0.1, cov_trace=1.0, cov_opnorm=2.0)
    with pytest.raises(InputError):
        ProblemParams(T=10, delta=0.1, d_eff=5.0, d=3)
    with pytest.raises(InputError):
        ProblemParams(T=0, delta=0.1)
