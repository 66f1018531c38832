from .experiment import (  # noqa: F401
    Experiment, RegimePlan, TrialReport, compare_baselines, emit, empirical_quantile,
    format_report, rate_curve, read_csv, run_experiment, run_trial, trial_seed,
)
