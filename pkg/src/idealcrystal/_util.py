"""Small shared helpers."""

from __future__ import annotations

import os

from .errors import ConfigError


def query_workers() -> int:
    """Worker count for parallel neighbor queries.

    Controlled by the CRYSTAL_THREADS environment variable; unset means
    "use all cores". Results of the queries do not depend on this value.
    """
    raw = os.environ.get("CRYSTAL_THREADS")
    if raw is None or raw.strip() == "":
        return -1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"CRYSTAL_THREADS must be an integer, got {raw!r}")
    return max(1, n)
