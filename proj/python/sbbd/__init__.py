"""Python interface to the sbbd solvers.

Parameters, solutions and gap reports cross the boundary as JSON and come back as dicts.
"""

import json

from . import _sbbd
from ._sbbd import (
    CapacityError,
    FormatError,
    InfeasibleError,
    Instance,
    cooperative_fraction,
    enumerate_optimal,
    gap_percentages,
    sample_objective,
)

__all__ = [
    "CapacityError",
    "FormatError",
    "InfeasibleError",
    "Instance",
    "cooperative_fraction",
    "default_params",
    "enumerate_optimal",
    "estimate_gap",
    "gap_percentages",
    "generate",
    "load_instance",
    "sample_objective",
    "solve",
]


def default_params(app):
    """Default parameter dict of an application family."""
    return json.loads(_sbbd.default_params(app))


def _params(app_or_params, overrides):
    params = default_params(app_or_params) if isinstance(app_or_params, str) else dict(app_or_params)
    params.update(overrides)
    return json.dumps(params)


def generate(app_or_params, **overrides):
    """Instance from an application name plus overrides, or from a full parameter dict."""
    return _sbbd.generate(_params(app_or_params, overrides))


def solve(instance, method="sbbd", time_limit=3600.0, mrv=1e-5, reduced=False, cap=400000):
    """Solve an instance; returns the solution as a dict."""
    return json.loads(_sbbd.solve(instance, method, time_limit, mrv, reduced, cap))


def estimate_gap(app_or_params, replications, n_prime, alpha=0.95, base_seed=1, eval_seed=1000003,
                 method="sbbd", time_limit=3600.0, **overrides):
    """Replicate, solve and evaluate; returns the gap report as a dict."""
    report = _sbbd.estimate_gap(_params(app_or_params, overrides), replications, n_prime, alpha, base_seed,
                                eval_seed, method, time_limit)
    return json.loads(report)


def load_instance(path):
    with open(path, encoding="utf-8") as f:
        return Instance.from_json(f.read())
