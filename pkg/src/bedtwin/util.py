"""Small shared helpers."""

from __future__ import annotations

import json


def canonical_json(obj) -> str:
    """Serialize to the canonical wire form: sorted keys, no whitespace.

    CLI output and HTTP bodies must be byte-identical for the same payload,
    so there is exactly one JSON encoding. NaN/Infinity are rejected rather
    than emitted as invalid JSON; undefined values must be None by the time
    they reach serialization.
    """
    return json.dumps(obj, separators=(",", ":"), sort_keys=True, allow_nan=False)
