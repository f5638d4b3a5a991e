"""Content-addressed on-disk store for sweep rows.

One file per key; the filename is the hex digest of the canonical JSON of
everything that affects the value. Files hold the payload and its
checksum and are written to a temporary name and then renamed.
"""

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path

from .errors import CacheCorruptError

CACHE_ENV = "QPTPROBE_CACHE_DIR"
FORMAT_VERSION = 1


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def content_key(payload):
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def default_cache_dir():
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "qptprobe"


class ResultCache:
    """Thread-safe file store; corrupt entries count as misses."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0
        self.corrupt = 0
        self._lock = threading.Lock()

    def path(self, key):
        return self.directory / key

    def _read(self, key):
        try:
            text = self.path(key).read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        try:
            doc = json.loads(text)
            data = doc["data"]
            checksum = doc["checksum"]
        except (ValueError, KeyError, TypeError) as exc:
            raise CacheCorruptError(f"unreadable cache entry {key}") from exc
        if doc.get("version") != FORMAT_VERSION or content_key(data) != checksum:
            raise CacheCorruptError(f"checksum mismatch in cache entry {key}")
        return data

    def get(self, key):
        try:
            data = self._read(key)
        except CacheCorruptError:
            with self._lock:
                self.corrupt += 1
                self.misses += 1
            return None
        with self._lock:
            if data is None:
                self.misses += 1
            else:
                self.hits += 1
        return data

    def put(self, key, data):
        doc = {"version": FORMAT_VERSION, "checksum": content_key(data), "data": data}
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(doc))
            os.replace(tmp, self.path(key))
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def stats(self):
        with self._lock:
            return {"hits": self.hits, "misses": self.misses, "corrupt": self.corrupt}
