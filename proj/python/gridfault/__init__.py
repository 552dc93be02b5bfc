"""Faulted-line localization toolkit: physics-based features from bus
admittance matrices, a small 1-D convolutional classifier, and loss-driven
sensor placement."""

import json as _json

try:
    from ._core import *  # noqa: F401,F403  (installed package layout)
    from ._core import run_experiment as _run_experiment_json
except ImportError:  # in-tree build: _core lives on PYTHONPATH
    from _core import *  # noqa: F401,F403
    from _core import run_experiment as _run_experiment_json


def run_experiment(config):
    """Run a full experiment from a config dict; returns the report dict."""
    if isinstance(config, str):
        return _json.loads(_run_experiment_json(config))
    return _json.loads(_run_experiment_json(_json.dumps(config)))
