"""Simulation and verification of SDEs with local-time terms."""

import json

from . import _core
from ._core import ConditionError, ConfigError, RangeError, Transform, philox

__version__ = _core.__version__


def _text(value):
    return value if isinstance(value, str) else json.dumps(value)


def list_experiments():
    return _core.list_experiments()


def config_schema():
    return json.loads(_core.config_schema())


def transform(measure=None, x_min=-10.0, x_max=10.0, resolution=4096):
    return Transform(_text(measure or {}), x_min, x_max, resolution)


def simulate(spec=None, measure=None, x0=0.0, horizon=1.0, steps=1024, paths=1, seed=1, scheme="transform", threads=1):
    spec = spec or {"sigma": {"kind": "const", "value": 1.0}}
    return _core.simulate(_text(spec), _text(measure or {}), x0, horizon, steps, paths, seed, scheme, threads)


def run(config, out=None):
    """Returns (exit status, report dict)."""
    status, report = _core.run(_text(config), "" if out is None else str(out))
    return status, json.loads(report)


__all__ = [
    "ConditionError",
    "ConfigError",
    "RangeError",
    "Transform",
    "config_schema",
    "list_experiments",
    "philox",
    "run",
    "simulate",
    "transform",
]
