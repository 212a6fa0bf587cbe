"""Python bindings for the driftalloc C++ core."""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import DriftallocError, simulate_json, verify_json


def simulate(**settings):
    """Run the renewal simulation; returns the summary as a dict."""
    return _json.loads(simulate_json(**settings))


def verify(**settings):
    """Aging class, PMP certificate and KKT residuals as a dict."""
    return _json.loads(verify_json(**settings))
