"""Sample-based primal-dual solver for tabular constrained MDPs."""

import json as _json

from ._core import (
    InfeasibleError,
    Spec,
    ValidationError,
    brute_force_small,
    compute_bounds,
    estimate_kernel,
    evaluate_mixture,
    instantiate_relaxed,
    instantiate_strict,
    instantiate_schedule,
    load_instance,
    perturb_rewards,
    policy_evaluation,
    random_instance,
    reference_instance,
    round_to_net,
    run_primal_dual,
    save_instance,
    slater_constant,
    solve_lp,
    validate,
    value_iteration,
)
from ._core import parse_instance as _parse_instance
from ._core import _run_pipeline_json, _sweep_csv

__all__ = [
    "InfeasibleError",
    "Spec",
    "ValidationError",
    "brute_force_small",
    "compute_bounds",
    "estimate_kernel",
    "evaluate_mixture",
    "instantiate_relaxed",
    "instantiate_strict",
    "instantiate_schedule",
    "load_instance",
    "parse_instance",
    "perturb_rewards",
    "policy_evaluation",
    "random_instance",
    "reference_instance",
    "round_to_net",
    "run_pipeline",
    "run_primal_dual",
    "save_instance",
    "slater_constant",
    "solve_lp",
    "sweep",
    "validate",
    "value_iteration",
]


def parse_instance(source):
    """Build a Spec from JSON text or an already-decoded dict."""
    if not isinstance(source, str):
        source = _json.dumps(source)
    return _parse_instance(source)


def run_pipeline(spec, mode="relaxed", epsilon=0.1, delta=0.1, samples=1000, seed=0, t_cap=0,
                 upper=None, eps_opt=None, lambda_star_norm=None, omega=0.0, zeta=None,
                 include_runtime=True):
    """Run sampling, primal-dual and evaluation once; returns the report as a dict."""
    text = _run_pipeline_json(spec, mode, epsilon, delta, samples, seed, t_cap, upper, eps_opt,
                              lambda_star_norm, omega, zeta, include_runtime)
    return _json.loads(text)


def sweep(spec, samples, seeds, mode="relaxed", epsilon=0.1, delta=0.1, t_cap=0, include_runtime=True):
    """Run the pipeline over every (N, seed) cell; returns CSV text."""
    return _sweep_csv(spec, mode, epsilon, delta, list(samples), list(seeds), t_cap, include_runtime)
