"""Python bindings for the cloud portfolio optimizer.

Entities are plain dicts and lists in the same JSON layout the CLI and the
REST service use.
"""

import json

from . import _core
from ._core import InfeasibleAppError, normal_cdf, normal_quantile

__all__ = [
    "InfeasibleAppError",
    "bench_case",
    "filter_catalog",
    "generate_case",
    "normal_cdf",
    "normal_quantile",
    "optimize",
    "parse_catalog_csv",
    "validate_allocation",
]


def optimize(apps, types, algorithm="ERICH", q_min=0.95, horizon=0, reserved_term=0, ga_config=None):
    return json.loads(
        _core.optimize(
            json.dumps(apps),
            json.dumps(types),
            algorithm.upper(),
            q_min,
            horizon,
            reserved_term,
            json.dumps(ga_config or {}),
        )
    )


def validate_allocation(allocation, portfolio, apps):
    return json.loads(
        _core.validate_allocation(json.dumps(allocation), json.dumps(portfolio), json.dumps(apps))
    )


def generate_case(case_id, seed=0, period_scale=None):
    return json.loads(_core.generate_case(case_id, seed, period_scale))


def filter_catalog(types, providers=None, markets=None, min_capacity=None, max_price=None):
    return json.loads(
        _core.filter_catalog(json.dumps(types), providers, markets, min_capacity, max_price)
    )


def parse_catalog_csv(text):
    return json.loads(_core.parse_catalog_csv(text))


def bench_case(case_id, repetitions=1, seed=0):
    return json.loads(_core.bench_case(case_id, repetitions, seed))
