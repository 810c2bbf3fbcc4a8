"""Wave equations with time-periodic sound speed: metrics, rays, solver and experiments."""

import json

from ._wavelab import (
    CauchyData,
    DomainError,
    Error,
    Grid,
    Metric,
    ParameterError,
    ValidationError,
    check_admissibility,
    check_conditions,
    energy_norm,
    evolve,
    experiment_names,
    flat_metric,
    frozen_tail,
    radial_bump,
    random_data,
    spectral_radius,
    trace_ray,
)
from . import _wavelab


def validate_config(config, overrides=(), experiment=""):
    """Return (resolved dict or None, list of error strings)."""
    text = config if isinstance(config, str) else json.dumps(config)
    resolved, errors = _wavelab.validate_config(text, list(overrides), experiment)
    return (json.loads(resolved) if resolved is not None else None), errors


def run_experiment(config, out_dir, overrides=(), experiment=""):
    """Run an experiment into out_dir and return its manifest as a dict."""
    text = config if isinstance(config, str) else json.dumps(config)
    return json.loads(_wavelab.run_experiment(text, str(out_dir), list(overrides), experiment))


__all__ = [
    "CauchyData",
    "DomainError",
    "Error",
    "Grid",
    "Metric",
    "ParameterError",
    "ValidationError",
    "check_admissibility",
    "check_conditions",
    "energy_norm",
    "evolve",
    "experiment_names",
    "flat_metric",
    "frozen_tail",
    "radial_bump",
    "random_data",
    "run_experiment",
    "spectral_radius",
    "trace_ray",
    "validate_config",
]
