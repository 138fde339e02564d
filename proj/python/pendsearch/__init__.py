"""Deviant-pendulum search on a shared support (C++ core)."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import run_scenario as _run_scenario

__version__ = "0.1.0"


def run(scenario, out_dir):
    """Run a scenario given as a dict or JSON text; returns the manifest dict."""
    text = scenario if isinstance(scenario, str) else _json.dumps(scenario)
    return _json.loads(_run_scenario(text, str(out_dir)))
