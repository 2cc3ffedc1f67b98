"""Accession assignment and DOI minting.

Accessions are deployment-local, strictly increasing, and persisted before
they are handed out so a crash never reissues one. DOIs for uploaded code
versions come from a pluggable minting client; the bundled mock is
deterministic and offline, using the conventional test prefix 10.5072 so it
can never collide with production identifiers.
"""

from __future__ import annotations

import re
import threading
from typing import Optional, Protocol

from .errors import ToolseekError

ACCESSION_PREFIX = "TOOL_"
ACCESSION_DIGITS = 6
ACCESSION_MAX = 10 ** ACCESSION_DIGITS - 1
ACCESSION_RE = re.compile(r"^TOOL_\d{6}$")

# prefix: "10." + 4-9 digits; suffix: non-empty run of visible characters
DOI_RE = re.compile(r"^10\.\d{4,9}/[!-~]+$")

MOCK_DOI_PREFIX = "10.5072/toolseek"

_LABEL_KEEP_RE = re.compile(r"[A-Za-z0-9.]+")


class ExhaustedSpace(ToolseekError):
    code = "accession_space_exhausted"


class MintingFailed(ToolseekError):
    code = "minting_failed"


class InvalidVersionLabel(ToolseekError):
    code = "invalid_version_label"


def validate_doi(text: str) -> bool:
    return bool(DOI_RE.match(text))


def validate_accession(text: str) -> bool:
    return bool(ACCESSION_RE.match(text))


def sanitize_version_label(label: str) -> str:
    """Collapse separators to single hyphens, keeping letters, digits and dots."""
    kept = _LABEL_KEEP_RE.findall(label)
    return "-".join(kept)


class AccessionSequence:
    """Monotone accession counter persisted through a document store.

    The new value is written (and fsynced by the file store) before it is
    returned, so a restart resumes after the last issued accession.
    """

    _NAMESPACE = "meta"
    _KEY = "accession_counter"

    def __init__(self, store):
        self._store = store
        self._lock = threading.Lock()
        state = store.read(self._NAMESPACE, self._KEY)
        self._last = int(state["last"]) if state else 0

    @property
    def last_issued(self) -> int:
        return self._last

    def next(self) -> str:
        with self._lock:
            candidate = self._last + 1
            if candidate > ACCESSION_MAX:
                raise ExhaustedSpace("accession suffix space exhausted")
            self._store.write(self._NAMESPACE, self._KEY, {"last": candidate})
            self._last = candidate
            return f"{ACCESSION_PREFIX}{candidate:0{ACCESSION_DIGITS}d}"


class MintingClient(Protocol):
    def mint(self, accession: str, version_label: str,
             payload_digest: Optional[str] = None) -> str: ...


class MockMintingClient:
    """Deterministic offline minter: 10.5072/toolseek.<accession>.<label>.

    Same inputs always yield the same DOI, which makes minting idempotent per
    (accession, version label).
    """

    def mint(self, accession: str, version_label: str,
             payload_digest: Optional[str] = None) -> str:
        label = sanitize_version_label(version_label)
        if not label:
            raise InvalidVersionLabel(
                f"version label {version_label!r} is empty after sanitization")
        return f"{MOCK_DOI_PREFIX}.{accession}.{label}"


class RemoteMintingClient:
    """Registrar-backed minter speaking the create-identifier HTTP contract.

    POSTs ``{accession, version_label, payload_digest}`` to ``<base_url>/dois``
    and expects ``{"doi": ...}`` back. Ships for completeness; tests run
    against the mock.
    """

    def __init__(self, base_url: str, timeout: float = 10.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        if session is None:
            import requests
            session = requests.Session()
        self._session = session

    def mint(self, accession: str, version_label: str,
             payload_digest: Optional[str] = None) -> str:
        label = sanitize_version_label(version_label)
        if not label:
            raise InvalidVersionLabel(
                f"version label {version_label!r} is empty after sanitization")
        try:
            response = self._session.post(
                f"{self.base_url}/dois",
                json={"accession": accession, "version_label": label,
                      "payload_digest": payload_digest},
                timeout=self.timeout)
        except Exception as exc:
            raise MintingFailed(f"registrar unreachable: {exc}") from exc
        if response.status_code >= 400:
            raise MintingFailed(f"registrar returned {response.status_code}")
        doi = response.json().get("doi", "")
        if not validate_doi(doi):
            raise MintingFailed(f"registrar returned invalid DOI {doi!r}")
        return doi


def mint_doi(accession: str, version_label: str, client: MintingClient,
             payload_digest: Optional[str] = None) -> str:
    if not version_label:
        raise InvalidVersionLabel("version label must be non-empty")
    return client.mint(accession, version_label, payload_digest)
