"""On-disk response cache: one JSON file per request hash."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
from pathlib import Path


def request_key(request: dict) -> str:
    blob = json.dumps(request, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class ResponseCache:
    """Concurrent readers, serialized writers; files are replaced atomically."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def path_for(self, key: str) -> Path:
        return self.directory / key[:2] / f"{key}.json"

    def get(self, request: dict):
        path = self.path_for(request_key(request))
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            self.misses += 1
            return None
        self.hits += 1
        return data["response"]

    def put(self, request: dict, response) -> None:
        key = request_key(request)
        path = self.path_for(key)
        payload = json.dumps({"key": key, "request": request, "response": response},
                             sort_keys=True, ensure_ascii=False, indent=1)
        with self._write_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)

    def __len__(self):
        return sum(1 for _ in self.directory.glob("*/*.json"))
