"""Bubbles in event-tree markets with proportional transaction costs.

Trees are dicts in the fixture format (or JSON strings / paths to fixture
files). With ``exact=True`` values come back as ``fractions.Fraction``.
"""

import json
import os
from fractions import Fraction

from . import _core
from ._core import (
    BadConfig,
    BandViolation,
    Error,
    InvalidTree,
    NoCps,
    NoEmm,
    bessel_delta,
    bessel_mean,
    fbm_bubble_bound,
    mc_estimate,
    simulate_bubble_birth,
    simulate_fbm,
    simulate_gbm,
    simulate_inverse_bessel,
)

__all__ = [
    "BadConfig", "BandViolation", "Error", "InvalidTree", "NoCps", "NoEmm",
    "load_tree", "bubble_report", "fundamental_value", "superrep_price", "lambda_sweep",
    "run", "bessel_delta", "bessel_mean", "fbm_bubble_bound", "mc_estimate",
    "simulate_bubble_birth", "simulate_fbm", "simulate_gbm", "simulate_inverse_bessel",
]


def _tree_text(tree):
    if isinstance(tree, dict):
        return json.dumps(tree)
    if isinstance(tree, (str, os.PathLike)) and os.path.exists(tree):
        with open(tree) as f:
            return f.read()
    return tree


def _num(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(x) if isinstance(x, float) else str(x)


def _unwrap(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, list):
        return [_unwrap(x) for x in v]
    if isinstance(v, dict):
        return {k: _unwrap(x) for k, x in v.items()}
    return v


def load_tree(tree):
    """Canonical fixture dict for a dict, JSON string or file path."""
    return json.loads(_core.canonical_tree(_tree_text(tree)))


def bubble_report(tree, lam, exact=True):
    return _unwrap(_core.bubble_report(_tree_text(tree), _num(lam), exact))


def fundamental_value(tree, lam, node=0, full_tree=False, exact=True):
    return _unwrap(_core.fundamental_value(_tree_text(tree), _num(lam), node, full_tree, exact))


def superrep_price(tree, lam, node=0, bond=None, asset=None, exact=True):
    """Cheapest superreplication of the claim (bond, asset) per leaf; defaults to one share."""
    conv = (lambda v: None if v is None else [_num(x) for x in v])
    return _unwrap(_core.superrep_price(_tree_text(tree), _num(lam), node, conv(bond), conv(asset), exact))


def lambda_sweep(tree, lambdas, exact=True):
    return _unwrap(_core.lambda_sweep(_tree_text(tree), [_num(x) for x in lambdas], exact))


def run(command, config, base_dir="."):
    """Runs a CLI command on a config dict; returns (exit_code, document, message)."""
    return _core.run(command, json.dumps(config), str(base_dir))
