"""Command line entry point: estimate, bench, conc-check, moments-check, rate."""
import argparse
import sys

import numpy as np

from . import concentration as C
from .clipping import clipped_bias_bound, clipped_moment_stats
from .engine import RunConfig, run
from .errors import ConfigError, InputError, NumericError, RunAborted
from .generators import student_t
from .harness.config import experiment_from_config, floats, ints, read_config
from .harness.experiment import RegimePlan, format_report, rate_curve, run_experiment, trial_seed
from .numeric import CovModel, make_generator, norm2
from .oracles import derived_constants
from .schedule import ProblemParams

EXIT_CONFIG = 2
EXIT_ABORT = 3


def _write(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_estimate(args, cfg):
    e = experiment_from_config(cfg, seed=args.seed)
    T = e.T_grid[-1]
    plan = e.plan(T)
    seed = trial_seed(e.base_seed, T, "clipped_sgd", 0)
    try:
        res = run(e.oracle, RunConfig(e.init, plan, e.domain, seed=seed))
    except RunAborted as exc:
        print(f"run aborted at step {exc.step}")
        return EXIT_ABORT if args.strict else 0
    est = res.output(plan.output)
    print("estimate", " ".join(repr(float(x)) for x in est))
    print("param_error", repr(norm2(est - e.oracle.optimum)))
    print("clip_events", res.clip_events, "of", T)
    return 0


def cmd_bench(args, cfg):
    e = experiment_from_config(cfg, seed=args.seed, trials=args.trials, threads=args.threads)
    report = run_experiment(e)
    _write(format_report(report, args.format), args.out)
    n = report.aborted()
    if n:
        print(f"{n} aborted runs recorded as +inf", file=sys.stderr)
        if args.strict:
            return EXIT_ABORT
    return 0


def cmd_conc(args, cfg):
    sec = cfg.get("concentration")
    if sec is None:
        raise ConfigError("missing [concentration] section")
    try:
        rows, best = C.sweep(
            sec.get("increment", "gaussian"), ints(sec.get("T", "128,512")), ints(sec.get("d", "2,16")),
            floats(sec.get("deltas", "0.1,0.01")), floats(sec.get("C_grid", "0.5,1,2,4,8")),
            args.trials or int(sec.get("trials", 10_000)),
            args.seed if args.seed is not None else int(sec.get("seed", 0)),
            bound_kind=sec.get("bound", "refined"), k_convention=sec.get("k_convention", "loglog"),
            experiment_id=sec.get("name", "conc"),
        )
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    _write(C.rows_to_csv(rows), args.out)
    print(f"minimal C_M: {best}", file=sys.stderr)
    return 0


def cmd_moments(args, cfg):
    sec = cfg.get("moments", {})
    nu = float(sec.get("nu", 3.0))
    d = int(sec.get("d", 5))
    n = int(sec.get("n", 1_000_000))
    seed = args.seed if args.seed is not None else int(sec.get("seed", 0))
    h = student_t(nu, CovModel.identity(d))
    cov = CovModel.identity(d)
    print("mean_norm,level,bias,bias_bound,bias_stderr,trace,trace_bound,trace_stderr,ok")
    stream = 0
    for m in floats(sec.get("mean_norms", "0,1,3")):
        for level in floats(sec.get("levels", "1,4,16")):
            shift = np.zeros(d)
            shift[0] = m
            s = clipped_moment_stats(h, level, n, make_generator(seed, stream), shift)
            stream += 1
            bias = norm2(s.mean - shift)
            bb = clipped_bias_bound(m, cov, level)
            ok = bias <= bb + 5 * s.mean_stderr and s.trace <= cov.trace + 5 * s.trace_stderr
            print(f"{m!r},{level!r},{bias!r},{bb!r},{s.mean_stderr!r},{s.trace!r},{cov.trace!r},{s.trace_stderr!r},{ok}")
    return 0


def cmd_rate(args, cfg):
    e = experiment_from_config(cfg, seed=args.seed)
    src = e.plan_source
    if not isinstance(src, RegimePlan):
        raise ConfigError("rate needs a named regime in [plan]")
    kw = derived_constants(e.oracle, src.C4)
    kw.setdefault("D1", norm2(e.init - e.oracle.optimum))
    kw.update(src.params)
    kw.setdefault("delta", 0.05)
    p = ProblemParams(T=e.T_grid[0], **kw)
    print("T predicted")
    for T, v in rate_curve(src.regime, p, e.T_grid, src.constants.get("c_gamma", 1.0)):
        print(T, repr(v))
    return 0


COMMANDS = {"estimate": cmd_estimate, "bench": cmd_bench, "conc-check": cmd_conc,
            "moments-check": cmd_moments, "rate": cmd_rate}


def build_parser():
    ap = argparse.ArgumentParser(prog="clipsgd", description=__doc__)
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="experiment file")
    ap.add_argument("--seed", type=int, help="override the base seed")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", default="csv", choices=("csv", "json", "plotdata"))
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--trials", type=int, default=None, help="override trial count")
    ap.add_argument("--strict", action="store_true", help="exit 3 if any run aborts")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = read_config(args.config) if args.config else {}
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunAborted as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return EXIT_ABORT if args.strict else 0
    except (InputError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
