"""Pluggable document store.

Default backend keeps one JSON document per record (keyed by namespace +
key) plus an append-only write-ahead audit log. Documents are written
atomically (tmp file + rename + fsync) so a crash can never leave a
half-written card behind. The store header pins the payload digest algorithm
for the deployment.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path
from typing import Iterator, Optional
from urllib.parse import quote, unquote

HEADER = {"format_version": 1, "digest_algorithm": "sha256"}


def stable_json(document) -> str:
    """Deterministic rendering used for every persisted document."""
    return json.dumps(document, ensure_ascii=False, separators=(",", ":"))


def payload_digest(data: bytes, algorithm: str = "sha256") -> str:
    return hashlib.new(algorithm, data).hexdigest()


class DocumentStore:
    """Interface; see FileDocumentStore and MemoryDocumentStore."""

    def read(self, namespace: str, key: str) -> Optional[dict]:
        raise NotImplementedError

    def write(self, namespace: str, key: str, document: dict) -> None:
        raise NotImplementedError

    def keys(self, namespace: str) -> list[str]:
        raise NotImplementedError

    def append_audit(self, entry: dict) -> None:
        raise NotImplementedError

    def audit_entries(self) -> Iterator[dict]:
        raise NotImplementedError

    def put_blob(self, digest: str, data: bytes) -> None:
        raise NotImplementedError

    def get_blob(self, digest: str) -> Optional[bytes]:
        raise NotImplementedError

    @property
    def digest_algorithm(self) -> str:
        return HEADER["digest_algorithm"]


class MemoryDocumentStore(DocumentStore):
    def __init__(self):
        self._docs: dict[str, dict[str, str]] = {}
        self._audit: list[str] = []
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def read(self, namespace, key):
        raw = self._docs.get(namespace, {}).get(key)
        return json.loads(raw) if raw is not None else None

    def write(self, namespace, key, document):
        with self._lock:
            self._docs.setdefault(namespace, {})[key] = stable_json(document)

    def keys(self, namespace):
        return sorted(self._docs.get(namespace, {}))

    def append_audit(self, entry):
        with self._lock:
            self._audit.append(stable_json(entry))

    def audit_entries(self):
        for line in list(self._audit):
            yield json.loads(line)

    def put_blob(self, digest, data):
        self._blobs[digest] = data

    def get_blob(self, digest):
        return self._blobs.get(digest)


class FileDocumentStore(DocumentStore):
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        header_path = self.root / "header.json"
        if header_path.exists():
            header = json.loads(header_path.read_text("utf-8"))
            if header.get("digest_algorithm") != HEADER["digest_algorithm"]:
                raise ValueError(
                    f"store was created with digest algorithm "
                    f"{header.get('digest_algorithm')!r}; this deployment uses "
                    f"{HEADER['digest_algorithm']!r}")
            self._header = header
        else:
            self._header = dict(HEADER)
            self._atomic_write(header_path, stable_json(self._header).encode("utf-8"))

    @property
    def digest_algorithm(self) -> str:
        return self._header["digest_algorithm"]

    def _namespace_dir(self, namespace: str) -> Path:
        path = self.root / namespace
        path.mkdir(parents=True, exist_ok=True)
        return path

    def _doc_path(self, namespace: str, key: str) -> Path:
        return self._namespace_dir(namespace) / (quote(key, safe="") + ".json")

    @staticmethod
    def _atomic_write(path: Path, data: bytes) -> None:
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "wb") as handle:
            handle.write(data)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)

    def read(self, namespace, key):
        path = self._doc_path(namespace, key)
        if not path.exists():
            return None
        return json.loads(path.read_text("utf-8"))

    def write(self, namespace, key, document):
        with self._lock:
            self._atomic_write(self._doc_path(namespace, key),
                               stable_json(document).encode("utf-8"))

    def keys(self, namespace):
        directory = self.root / namespace
        if not directory.exists():
            return []
        return sorted(unquote(p.name[:-5]) for p in directory.glob("*.json"))

    def append_audit(self, entry):
        with self._lock:
            with open(self.root / "audit.log", "a", encoding="utf-8") as handle:
                handle.write(stable_json(entry) + "\n")
                handle.flush()
                os.fsync(handle.fileno())

    def audit_entries(self):
        path = self.root / "audit.log"
        if not path.exists():
            return
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def put_blob(self, digest, data):
        directory = self.root / "payloads"
        directory.mkdir(parents=True, exist_ok=True)
        self._atomic_write(directory / digest, data)

    def get_blob(self, digest):
        path = self.root / "payloads" / digest
        return path.read_bytes() if path.exists() else None
