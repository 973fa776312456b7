"""Python bindings for the GKP √T gate simulator."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import experiment_config_json, run_experiment_json


def run_experiment(config, threads=1):
    """Run an experiment described by a dict (same keys as the JSON config files)."""
    return run_experiment_json(_json.dumps(config), threads)


def experiment_config(config):
    """Config dict with defaults filled in."""
    return _json.loads(experiment_config_json(_json.dumps(config)))
