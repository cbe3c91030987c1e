"""Python access to the kslab C++ core."""

import json

from ._kslab import (
    CheckReport,
    Field,
    Grid,
    HypothesisError,
    Region,
    field_library,
    field_library_names,
    harnack_quotient_check,
    holder_from_decay,
    inf_convolution,
    laplacian,
    pucci_field,
    pucci_minus,
    pucci_plus,
    random_walk_hitting,
    solve_poisson,
    solve_pucci,
    suite_names,
)
from ._kslab import run_suite_json as _run_suite_json


def run_suite(name, dim=2, h=None, seed=1, **params):
    """Run a verification suite and return its report document as a dict."""
    return json.loads(_run_suite_json(name, dim, h, seed, {k: str(v) for k, v in params.items()}))


__all__ = [
    "CheckReport",
    "Field",
    "Grid",
    "HypothesisError",
    "Region",
    "field_library",
    "field_library_names",
    "harnack_quotient_check",
    "holder_from_decay",
    "inf_convolution",
    "laplacian",
    "pucci_field",
    "pucci_minus",
    "pucci_plus",
    "random_walk_hitting",
    "run_suite",
    "solve_poisson",
    "solve_pucci",
    "suite_names",
]
