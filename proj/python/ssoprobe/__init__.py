"""OpenID 2.0 relying-party attack toolkit."""

import json

from . import _native
from ._native import CodecError, TargetNotConformant, decode_key_value, encode_key_value, make_nonce, \
    nonce_timestamp, presets

__all__ = [
    "CodecError", "TargetNotConformant", "audit", "decode_key_value", "encode_key_value",
    "expected_matrix", "make_nonce", "matrix", "nonce_timestamp", "policy", "presets", "profiles",
    "run_profile",
]

__version__ = "0.3.0"


def audit(target):
    """Run every built-in profile against a preset name or relying-party URL."""
    return json.loads(_native.audit(target))


def run_profile(target, profile):
    """Run one profile, given by built-in name or as a dict."""
    if not isinstance(profile, str):
        profile = json.dumps(profile)
    return json.loads(_native.run_profile(target, profile))


def matrix(presets_file=None):
    return json.loads(_native.matrix(presets_file))


def expected_matrix():
    return {k: list(v) for k, v in _native.expected_matrix().items()}


def profiles():
    return [json.loads(p) for p in _native.profiles()]


def policy(preset):
    return json.loads(_native.policy(preset))
