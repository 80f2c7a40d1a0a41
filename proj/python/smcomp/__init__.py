"""Structured matrix completion: norms, estimators and geometry estimates."""

import json
import os

from ._smcomp import (
    ConfigError,
    EstimateDirection,
    GeometryEstimate,
    IoError,
    NormSpec,
    SolveResult,
    WidthBound,
    auto_lambda,
    dual_norm,
    gaussian_width_lower,
    gaussian_width_upper,
    generate_instance,
    generate_observations,
    ksupport_width_bound,
    norm,
    partial_complexity,
    prox,
    rsc_verify,
    _run_sweep,
    sample_omega,
    solve,
    spikiness,
    verify,
)

__all__ = [
    "ConfigError",
    "EstimateDirection",
    "GeometryEstimate",
    "IoError",
    "NormSpec",
    "SolveResult",
    "WidthBound",
    "auto_lambda",
    "dual_norm",
    "gaussian_width_lower",
    "gaussian_width_upper",
    "generate_instance",
    "generate_observations",
    "ksupport_width_bound",
    "norm",
    "partial_complexity",
    "prox",
    "rsc_verify",
    "run_sweep",
    "sample_omega",
    "solve",
    "spikiness",
    "verify",
]


def run_sweep(config, base_dir=".", out_format="csv", write=False):
    """Runs a sweep from a config dict or a JSON file path.

    Returns (trials, summary_csv) with trials as a list of dicts. With
    ``write=True`` the usual output files go to the configured directory.
    """
    if isinstance(config, (str, os.PathLike)):
        base_dir = os.path.dirname(os.path.abspath(config))
        with open(config, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = json.dumps(config)
    trials, summary = _run_sweep(text, str(base_dir), out_format, write)
    return json.loads(trials), summary
