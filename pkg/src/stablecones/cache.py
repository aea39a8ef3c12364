"""Versioned JSON cache with atomic writes.

The directory defaults to ``~/.cache/stablecones`` and can be moved with the
``STABLECONES_CACHE_DIR`` environment variable.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from . import __version__

CACHE_VERSION = 1
ENV_VAR = "STABLECONES_CACHE_DIR"


def cache_dir() -> Path:
    root = os.environ.get(ENV_VAR)
    return Path(root) if root else Path.home() / ".cache" / "stablecones"


def cache_key(subject: str, signature: dict) -> str:
    blob = json.dumps({"subject": subject, **signature}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:32]


def _path(subject: str, key: str) -> Path:
    return cache_dir() / f"{subject}-{key}.json"


def load(subject: str, signature: dict):
    """Return the cached payload, or None on a miss or version mismatch."""
    key = cache_key(subject, signature)
    path = _path(subject, key)
    try:
        entry = json.loads(path.read_text())
    except (OSError, ValueError):
        return None
    if entry.get("cache_version") != CACHE_VERSION or entry.get("key") != key:
        return None
    return entry["payload"]


def store(subject: str, signature: dict, payload, meta: dict | None = None) -> Path:
    key = cache_key(subject, signature)
    path = _path(subject, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    entry = {
        "cache_version": CACHE_VERSION,
        "key": key,
        "subject": subject,
        "signature": signature,
        "tool_version": __version__,
        "meta": meta or {},
        "payload": payload,
    }
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(entry, fh, sort_keys=True, indent=1)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path
