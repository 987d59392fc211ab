"""Content-addressed JSON result cache with atomic writes."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
import warnings

from . import __version__


def cache_key(key, version: str = __version__) -> str:
    blob = json.dumps({"key": key, "version": version}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _path(cache_dir: str, h: str) -> str:
    return os.path.join(cache_dir, h[:2], h + ".json")


def cache_get(key, cache_dir: str, version: str = __version__):
    """Payload stored under key, or None on a miss (corrupt entries warn and count as misses)."""
    h = cache_key(key, version)
    p = _path(cache_dir, h)
    try:
        with open(p, encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        return None
    try:
        rec = json.loads(text)
        if rec.get("hash") != h or rec.get("version") != version:
            raise ValueError("header mismatch")
        return rec["payload"]
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        warnings.warn(f"ignoring corrupt cache entry {p}: {e}", RuntimeWarning, stacklevel=2)
        return None


def cache_put(key, payload, cache_dir: str, version: str = __version__) -> str:
    """Store payload atomically (write to a temp file, then rename); returns the entry path."""
    h = cache_key(key, version)
    p = _path(cache_dir, h)
    os.makedirs(os.path.dirname(p), exist_ok=True)
    rec = {"hash": h, "version": version, "key": key, "payload": payload}
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(p), prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(rec, fh, sort_keys=True)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return p
