"""Clipped projected SGD with last-iterate and average-iterate outputs."""
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InputError, RunAborted
from .numeric import ConvexSet, as_vec, make_generator, project
from .oracles import draw_samples

CHUNK = 4096
RECORD_MODES = {"none": 0, "errors_only": 1, "full": 2}


@dataclass(frozen=True, eq=False)
class RunConfig:
    init: np.ndarray
    plan: object
    domain: ConvexSet = ConvexSet()
    T: int = None
    record_trajectory: str = "none"
    seed: int = 0
    stream: int = 0

    def horizon(self):
        return self.plan.T if self.T is None else int(self.T)


@dataclass(frozen=True, eq=False)
class RunResult:
    last: np.ndarray
    average: np.ndarray
    clip_events: int
    trajectory: dict
    wall_time: float

    def output(self, mode):
        return self.last if mode == "last" else self.average


def average_of(trajectory):
    """Mean of the rows of a (T, d) array using a fixed pairwise summation tree."""
    X = np.asarray(trajectory, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise InputError("empty trajectory")

    def tree(lo, hi):
        if hi - lo <= 8:
            s = X[lo].copy()
            for i in range(lo + 1, hi):
                s += X[i]
            return s
        mid = (lo + hi) // 2
        return tree(lo, mid) + tree(mid, hi)

    return tree(0, X.shape[0]) / X.shape[0]


def run(spec, cfg, gen=None):
    """Run T steps of x <- Proj(x - eta_t clip(g_t)).

    gen defaults to make_generator(cfg.seed, cfg.stream). Samples are drawn in
    blocks of CHUNK, so a run is a pure function of (spec, cfg).
    """
    t_start = time.perf_counter()
    plan = cfg.plan
    T = cfg.horizon()
    if T < 1:
        raise InputError("T must be >= 1")
    if T != plan.T:
        raise InputError(f"run horizon {T} does not match plan horizon {plan.T}")
    x = as_vec(cfg.init, "init")
    d = spec.d
    if x.size != d:
        raise InputError(f"init has d={x.size}, oracle has d={d}")
    if cfg.domain.dim is not None and cfg.domain.dim != d:
        raise InputError("domain dimension mismatch")
    x = project(cfg.domain, x)
    if gen is None:
        gen = make_generator(cfg.seed, cfg.stream)
    mode = RECORD_MODES[cfg.record_trajectory]
    rec_x = np.empty((T, d) if mode == 2 else (0, d))
    rec_g = np.empty((T, d) if mode == 2 else (0, d))
    rec_clip = np.zeros(T if mode == 2 else 0, dtype=np.bool_)
    rec_err = np.empty(T + 1 if mode == 1 else 0)
    dom = cfg.domain.kernel_args(d)
    decaying = plan.step_kind == "decaying"
    A = float(plan.A)
    mu = float(plan.mu) if decaying else 1.0
    eta = float(plan.eta) if not decaying else 0.0
    acc, comp = np.zeros(d), np.zeros(d)
    clips = 0
    t = 1
    while t <= T:
        n = min(CHUNK, T - t + 1)
        X, y = draw_samples(spec, gen, n)
        c, bad = K.run_block(
            spec.code, x, X, y, t, float(plan.clip_level), decaying, A, mu, float(plan.gamma), eta,
            dom[0], dom[1], float(dom[2]), dom[3], dom[4],
            acc, comp, spec.optimum, mode, rec_x, rec_g, rec_clip, rec_err, t - 1,
        )
        clips += c
        if bad >= 0:
            raise RunAborted(t + bad, x.copy(), X[bad].copy())
        t += n
    traj = None
    if mode == 1:
        rec_err[T] = K.vnorm(x - spec.optimum)
        traj = {"errors": rec_err}
    elif mode == 2:
        traj = {"x": rec_x, "g": rec_g, "clipped": rec_clip}
    average = (acc + comp) / T
    return RunResult(x, average, int(clips), traj, time.perf_counter() - t_start)
