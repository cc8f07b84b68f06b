"""On-disk result cache keyed by a content hash of (job description, engine version).

Values are stored already JSON-normalized, so a cache hit returns exactly the
object a fresh computation would put in the report.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from typing import Optional

from .errors import CacheCorrupt

log = logging.getLogger("crossedhom.cache")


def content_key(parts: dict, version: str) -> str:
    blob = json.dumps({"engine": version, "job": parts}, sort_keys=True, ensure_ascii=True)
    return hashlib.sha256(blob.encode()).hexdigest()


class ResultCache:
    """get/put of JSON values under ``dir/<2 hex>/<sha256>.json``.

    An unwritable directory disables the cache with a warning; a corrupt entry
    is reported, recomputed by the caller and overwritten.
    """

    def __init__(self, directory: Optional[str], version: str):
        self.version = version
        self.dir = None
        self.hits = 0
        self.misses = 0
        self.corrupt = 0
        if directory is None:
            return
        try:
            os.makedirs(directory, exist_ok=True)
            probe = tempfile.NamedTemporaryFile(dir=directory, prefix=".probe", delete=True)
            probe.close()
            self.dir = directory
        except OSError as e:
            log.warning("cache directory %s is not writable (%s); continuing uncached", directory, e.strerror or e)

    @property
    def enabled(self):
        return self.dir is not None

    def _path(self, key):
        return os.path.join(self.dir, key[:2], key + ".json")

    def _read(self, path, key):
        try:
            with open(path, encoding="utf-8") as fh:
                entry = json.load(fh)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise CacheCorrupt(f"unreadable entry {path}: {e}") from None
        if not isinstance(entry, dict) or entry.get("key") != key or entry.get("engine") != self.version \
                or "value" not in entry:
            raise CacheCorrupt(f"entry {path} does not match its key")
        return entry["value"]

    def get(self, parts: dict):
        """Cached value or None (misses and corrupt entries both return None)."""
        if not self.enabled:
            return None
        key = content_key(parts, self.version)
        path = self._path(key)
        if not os.path.exists(path):
            self.misses += 1
            return None
        try:
            value = self._read(path, key)
        except CacheCorrupt as e:
            self.corrupt += 1
            self.misses += 1
            log.warning("%s; recomputing", e)
            return None
        self.hits += 1
        return value

    def put(self, parts: dict, value) -> None:
        if not self.enabled:
            return
        key = content_key(parts, self.version)
        path = self._path(key)
        entry = {"key": key, "engine": self.version, "job": parts, "value": value}
        try:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path), suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(entry, fh, sort_keys=True)
            os.replace(tmp, path)
        except OSError as e:
            log.warning("cannot write cache entry %s (%s); continuing", path, e.strerror or e)

    def stats(self):
        return {"hits": self.hits, "misses": self.misses, "corrupt": self.corrupt, "enabled": self.enabled}
