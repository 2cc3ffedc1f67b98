"""System of record for tool cards.

All mutations serialize through one writer lock and become change events for
the indexer; reads never block. Cards are immutable dataclasses — an edit
produces a fresh card, persists it, appends an audit entry, and bumps the
writer sequence. There is no hard delete anywhere on this surface: obsolete
cards stay retrievable forever.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Callable, Iterable, Optional
from urllib.parse import urlsplit

from .errors import ToolseekError
from .identifiers import (AccessionSequence, MintingClient, MockMintingClient,
                          mint_doi, validate_doi)
from .linkcheck import LinkProbe
from .store import DocumentStore, payload_digest
from .terminology import TerminologyGraph
from .textnorm import normalize_phrase

INTERFACES = ("command-line", "web-interface", "graphical-interface")
CANONICAL_OS = ("Linux", "Mac", "Windows")
COMPUTER_SKILLS = ("basic", "medium", "advanced")
STABILITY = ("stable", "beta", "alpha", "unknown")
MAINTAINED = ("yes", "no", "unknown")
STATUSES = ("draft", "published", "obsolete")

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")


class MissingField(ToolseekError):
    code = "missing_field"


class InvalidUrl(ToolseekError):
    code = "invalid_url"


class InvalidEmail(ToolseekError):
    code = "invalid_email"


class DuplicateName(ToolseekError):
    code = "duplicate_name"


class UnknownTool(ToolseekError):
    code = "unknown_tool"


class ImmutableField(ToolseekError):
    code = "immutable_field"


class ValidationFailed(ToolseekError):
    code = "validation_failed"


class DuplicateVersion(ToolseekError):
    code = "duplicate_version"


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def _check_url(url: str, field_name: str = "homepage_url") -> str:
    parts = urlsplit(url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidUrl(f"{field_name} {url!r} is not a valid http(s) URL",
                         field=field_name)
    return url


def _check_email(email: str) -> str:
    if not _EMAIL_RE.match(email):
        raise InvalidEmail(f"{email!r} is not a valid email address",
                           field="webmaster_email")
    return email


@dataclass(frozen=True)
class Specification:
    software_type: str = ""
    interfaces: frozenset[str] = frozenset()
    operating_systems: frozenset[str] = frozenset()
    programming_languages: frozenset[str] = frozenset()
    license: str = ""
    computer_skills: Optional[str] = None
    stability: str = "unknown"
    maintained: str = "unknown"
    external_links: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "software_type": self.software_type,
            "interfaces": sorted(self.interfaces),
            "operating_systems": sorted(self.operating_systems),
            "programming_languages": sorted(self.programming_languages),
            "license": self.license,
            "computer_skills": self.computer_skills,
            "stability": self.stability,
            "maintained": self.maintained,
            "external_links": dict(sorted(self.external_links.items())),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Specification":
        return cls(
            software_type=raw.get("software_type", ""),
            interfaces=frozenset(raw.get("interfaces", [])),
            operating_systems=frozenset(raw.get("operating_systems", [])),
            programming_languages=frozenset(raw.get("programming_languages", [])),
            license=raw.get("license", ""),
            computer_skills=raw.get("computer_skills"),
            stability=raw.get("stability", "unknown"),
            maintained=raw.get("maintained", "unknown"),
            external_links=dict(raw.get("external_links", {})),
        )

    def validate(self) -> None:
        for value in self.interfaces:
            if value not in INTERFACES:
                raise ValidationFailed(f"unknown interface {value!r}",
                                       field="spec.interfaces")
        if self.computer_skills is not None and self.computer_skills not in COMPUTER_SKILLS:
            raise ValidationFailed(f"unknown computer_skills {self.computer_skills!r}",
                                   field="spec.computer_skills")
        if self.stability not in STABILITY:
            raise ValidationFailed(f"unknown stability {self.stability!r}",
                                   field="spec.stability")
        if self.maintained not in MAINTAINED:
            raise ValidationFailed(f"unknown maintained {self.maintained!r}",
                                   field="spec.maintained")
        for os_name in self.operating_systems:
            if not os_name:
                raise ValidationFailed("operating system names must be non-empty",
                                       field="spec.operating_systems")
        for label, url in self.external_links.items():
            parts = urlsplit(url)
            if parts.scheme not in ("http", "https") or not parts.netloc:
                raise ValidationFailed(
                    f"external link {label!r} has invalid URL {url!r}",
                    field="spec.external_links")


@dataclass(frozen=True)
class Publication:
    doi: Optional[str] = None
    pmid: Optional[str] = None
    title: str = ""
    year: Optional[int] = None
    credit_badges: dict[str, frozenset[str]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "doi": self.doi,
            "pmid": self.pmid,
            "title": self.title,
            "year": self.year,
            "credit_badges": {user: sorted(roles)
                              for user, roles in sorted(self.credit_badges.items())},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Publication":
        return cls(
            doi=raw.get("doi"),
            pmid=raw.get("pmid"),
            title=raw.get("title", ""),
            year=raw.get("year"),
            credit_badges={user: frozenset(roles)
                           for user, roles in raw.get("credit_badges", {}).items()},
        )

    def validate(self) -> None:
        if not (self.doi or self.pmid or self.title):
            raise ValidationFailed(
                "a publication needs at least one of doi, pmid, title",
                field="publications")
        if self.doi is not None and not validate_doi(self.doi):
            raise ValidationFailed(f"publication doi {self.doi!r} is not valid",
                                   field="publications")


@dataclass(frozen=True)
class CodeVersion:
    version_label: str
    operating_system: str
    architecture: str
    doi: str
    uploaded_at: str
    payload_digest: str
    linked_publication: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "version_label": self.version_label,
            "operating_system": self.operating_system,
            "architecture": self.architecture,
            "doi": self.doi,
            "uploaded_at": self.uploaded_at,
            "payload_digest": self.payload_digest,
            "linked_publication": self.linked_publication,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CodeVersion":
        return cls(**raw)


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    accession: str
    editor: str
    at: str
    field_path: str
    old_value: str
    new_value: str

    def to_dict(self) -> dict:
        return {"seq": self.seq, "accession": self.accession,
                "editor": self.editor, "at": self.at,
                "field_path": self.field_path,
                "old_value": self.old_value, "new_value": self.new_value}

    @classmethod
    def from_dict(cls, raw: dict) -> "AuditEntry":
        return cls(**raw)


@dataclass(frozen=True)
class ToolCard:
    accession: str
    name: str
    description: str
    homepage_url: str
    webmaster_email: str
    category_ids: frozenset[str] = frozenset()
    spec: Specification = Specification()
    publications: tuple[Publication, ...] = ()
    versions: tuple[CodeVersion, ...] = ()
    link_history: tuple[LinkProbe, ...] = ()
    status: str = "draft"
    rrid: Optional[str] = None
    created_at: str = ""
    updated_at: str = ""

    def to_dict(self) -> dict:
        return {
            "accession": self.accession,
            "name": self.name,
            "description": self.description,
            "homepage_url": self.homepage_url,
            "webmaster_email": self.webmaster_email,
            "category_ids": sorted(self.category_ids),
            "spec": self.spec.to_dict(),
            "publications": [p.to_dict() for p in self.publications],
            "versions": [v.to_dict() for v in self.versions],
            "link_history": [p.to_dict() for p in self.link_history],
            "status": self.status,
            "rrid": self.rrid,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ToolCard":
        return cls(
            accession=raw["accession"],
            name=raw["name"],
            description=raw.get("description", ""),
            homepage_url=raw.get("homepage_url", ""),
            webmaster_email=raw.get("webmaster_email", ""),
            category_ids=frozenset(raw.get("category_ids", [])),
            spec=Specification.from_dict(raw.get("spec", {})),
            publications=tuple(Publication.from_dict(p)
                               for p in raw.get("publications", [])),
            versions=tuple(CodeVersion.from_dict(v) for v in raw.get("versions", [])),
            link_history=tuple(LinkProbe.from_dict(p)
                               for p in raw.get("link_history", [])),
            status=raw.get("status", "draft"),
            rrid=raw.get("rrid"),
            created_at=raw.get("created_at", ""),
            updated_at=raw.get("updated_at", ""),
        )

    @property
    def name_key(self) -> str:
        return normalize_phrase(self.name)

    @property
    def latest_link_alive(self) -> bool:
        return bool(self.link_history) and self.link_history[-1].outcome == "alive"


@dataclass
class IngestReport:
    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    warnings: list[tuple[int, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"accepted": self.accepted,
                "rejected": [{"line": line, "reason": reason}
                             for line, reason in self.rejected],
                "warnings": [{"line": line, "message": message}
                             for line, message in self.warnings]}


@dataclass(frozen=True)
class ChangeEvent:
    """One committed registry mutation, as consumed by the indexer."""

    seq: int
    accession: str
    card: ToolCard
    rating_sum: int = 0
    rating_count: int = 0


_KNOWN_RECORD_FIELDS = frozenset({
    "name", "description", "homepage_url", "webmaster_email",
    "category_ids", "spec", "publications", "rrid",
})
_KNOWN_SPEC_FIELDS = frozenset({
    "software_type", "interfaces", "operating_systems", "programming_languages",
    "license", "computer_skills", "stability", "maintained", "external_links",
})

_EDITABLE_SPEC_FIELDS = _KNOWN_SPEC_FIELDS
_EDITABLE_TOP_FIELDS = frozenset({
    "name", "description", "homepage_url", "webmaster_email",
    "status", "category_ids", "rrid", "publications",
})
_IMMUTABLE_FIELDS = frozenset({
    "accession", "created_at", "updated_at", "link_history", "versions", "audit",
})


def _as_text(value) -> str:
    """Canonical text form for audit old/new values."""
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    return json.dumps(value, ensure_ascii=False, sort_keys=True)


class RegistryService:
    """Single-writer, multi-reader registry over a document store."""

    def __init__(self, store: DocumentStore, graph: TerminologyGraph, *,
                 minting_client: Optional[MintingClient] = None,
                 clock: Callable[[], datetime] = utcnow):
        self._store = store
        self.graph = graph
        # the deterministic offline minter is the default; deployments wire a
        # registrar-backed client here
        self._minting_client = minting_client or MockMintingClient()
        self._clock = clock
        self._lock = threading.RLock()
        self._cards: dict[str, ToolCard] = {}
        self._names: dict[str, str] = {}
        self._seq = 0
        self._audit_seq = 0
        self._subscribers: list[Callable[[ChangeEvent], None]] = []
        self._ratings_provider: Callable[[str], tuple[int, int]] = lambda _: (0, 0)
        self._accessions = AccessionSequence(store)

        for key in store.keys("tools"):
            raw = store.read("tools", key)
            if raw is None:
                continue
            card = ToolCard.from_dict(raw)
            self._cards[card.accession] = card
            self._names[card.name_key] = card.accession
        for entry in store.audit_entries():
            self._audit_seq = max(self._audit_seq, int(entry.get("seq", 0)))

    # -- wiring ----------------------------------------------------------

    def subscribe(self, callback: Callable[[ChangeEvent], None]) -> None:
        self._subscribers.append(callback)

    def set_ratings_provider(self, provider: Callable[[str], tuple[int, int]]) -> None:
        self._ratings_provider = provider

    @property
    def seq(self) -> int:
        return self._seq

    def now_iso(self) -> str:
        return self._clock().isoformat()

    def _emit(self, card: ToolCard) -> ChangeEvent:
        self._seq += 1
        rating_sum, rating_count = self._ratings_provider(card.accession)
        event = ChangeEvent(seq=self._seq, accession=card.accession, card=card,
                            rating_sum=rating_sum, rating_count=rating_count)
        for callback in self._subscribers:
            callback(event)
        return event

    def _commit(self, card: ToolCard) -> ChangeEvent:
        self._store.write("tools", card.accession, card.to_dict())
        self._cards[card.accession] = card
        self._names[card.name_key] = card.accession
        return self._emit(card)

    def append_audit(self, accession: str, editor: str, field_path: str,
                     old_value, new_value, at: Optional[str] = None) -> AuditEntry:
        with self._lock:
            self._audit_seq += 1
            entry = AuditEntry(seq=self._audit_seq, accession=accession,
                               editor=editor, at=at or self.now_iso(),
                               field_path=field_path,
                               old_value=_as_text(old_value),
                               new_value=_as_text(new_value))
            self._store.append_audit(entry.to_dict())
            return entry

    def audit_entries(self, accession: Optional[str] = None) -> list[AuditEntry]:
        entries = [AuditEntry.from_dict(raw) for raw in self._store.audit_entries()]
        if accession is not None:
            entries = [e for e in entries if e.accession == accession]
        return entries

    def refresh_signals(self, accession: str) -> ChangeEvent:
        """Re-emit a card whose derived ranking signals changed (e.g. reviews)."""
        with self._lock:
            card = self._cards.get(accession)
            if card is None:
                raise UnknownTool(f"unknown accession {accession!r}")
            return self._emit(card)

    # -- reads -----------------------------------------------------------

    def get_tool(self, accession: str, *, include_draft: bool = False) -> ToolCard:
        card = self._cards.get(accession)
        if card is None or (card.status == "draft" and not include_draft):
            raise UnknownTool(f"unknown accession {accession!r}")
        return card

    def cards(self, *, include_draft: bool = False) -> list[ToolCard]:
        cards = sorted(self._cards.values(), key=lambda c: c.accession)
        if not include_draft:
            cards = [c for c in cards if c.status != "draft"]
        return cards

    def card_count(self) -> int:
        return len(self._cards)

    def find_by_name(self, name: str) -> Optional[ToolCard]:
        accession = self._names.get(normalize_phrase(name))
        return self._cards.get(accession) if accession else None

    # -- record validation -----------------------------------------------

    def _validate_categories(self, category_ids: Iterable[str]) -> frozenset[str]:
        from .terminology import UnknownCategory
        resolved = frozenset(category_ids)
        for category_id in resolved:
            if category_id not in self.graph.categories:
                raise UnknownCategory(f"unknown category {category_id!r}")
        return resolved

    def _check_name_free(self, name: str, *, besides: Optional[str] = None) -> None:
        key = normalize_phrase(name)
        if not key:
            raise MissingField("name must be non-empty", field="name")
        holder = self._names.get(key)
        if holder is not None and holder != besides:
            raise DuplicateName(f"a tool named {name!r} already exists", field="name")

    def _parse_record(self, raw: dict, *, lenient: bool) -> tuple[ToolCard, list[str]]:
        warnings = []
        unknown = set(raw) - _KNOWN_RECORD_FIELDS
        if unknown:
            message = f"unknown fields: {', '.join(sorted(unknown))}"
            if lenient:
                warnings.append(message)
            else:
                raise ValidationFailed(message)
        spec_raw = raw.get("spec", {})
        if not isinstance(spec_raw, dict):
            raise ValidationFailed("spec must be an object", field="spec")
        unknown_spec = set(spec_raw) - _KNOWN_SPEC_FIELDS
        if unknown_spec:
            message = f"unknown spec fields: {', '.join(sorted(unknown_spec))}"
            if lenient:
                warnings.append(message)
                spec_raw = {k: v for k, v in spec_raw.items() if k in _KNOWN_SPEC_FIELDS}
            else:
                raise ValidationFailed(message, field="spec")

        for required in ("name", "description", "homepage_url", "webmaster_email"):
            value = raw.get(required)
            if not isinstance(value, str) or not value.strip():
                raise MissingField(f"record is missing {required!r}", field=required)

        _check_url(raw["homepage_url"])
        _check_email(raw["webmaster_email"])
        spec = Specification.from_dict(spec_raw)
        spec.validate()
        publications = tuple(Publication.from_dict(p) for p in raw.get("publications", []))
        for publication in publications:
            publication.validate()
        category_ids = self._validate_categories(raw.get("category_ids", []))

        now = self.now_iso()
        card = ToolCard(
            accession="",  # assigned at commit
            name=raw["name"].strip(),
            description=raw["description"].strip(),
            homepage_url=raw["homepage_url"],
            webmaster_email=raw["webmaster_email"],
            category_ids=category_ids,
            spec=spec,
            publications=publications,
            rrid=raw.get("rrid"),
            status="published",
            created_at=now,
            updated_at=now,
        )
        return card, warnings

    # -- operations ------------------------------------------------------

    def ingest_records(self, lines: Iterable[str], *, lenient: bool = False) -> IngestReport:
        """Bulk-load line-delimited JSON records; atomic per record, not per file."""
        report = IngestReport()
        with self._lock:
            for line_no, line in enumerate(lines, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    raw = json.loads(line)
                    if not isinstance(raw, dict):
                        raise ValidationFailed("record is not an object")
                    card, warnings = self._parse_record(raw, lenient=lenient)
                    self._check_name_free(card.name)
                except json.JSONDecodeError as exc:
                    report.rejected.append((line_no, f"malformed record: {exc.msg}"))
                    continue
                except ToolseekError as exc:
                    report.rejected.append((line_no, f"{exc.code}: {exc}"))
                    continue
                accession = self._accessions.next()
                card = replace(card, accession=accession)
                self._commit(card)
                report.accepted += 1
                for warning in warnings:
                    report.warnings.append((line_no, warning))
        return report

    def submit_tool(self, name: str, description: str, homepage_url: str,
                    webmaster_email: str) -> ToolCard:
        """Minimal community submission; the card starts as a draft."""
        for field_name, value in (("name", name), ("description", description),
                                  ("homepage_url", homepage_url),
                                  ("webmaster_email", webmaster_email)):
            if not isinstance(value, str) or not value.strip():
                raise MissingField(f"{field_name} is required", field=field_name)
        _check_url(homepage_url)
        _check_email(webmaster_email)
        with self._lock:
            self._check_name_free(name)
            now = self.now_iso()
            card = ToolCard(
                accession=self._accessions.next(),
                name=name.strip(),
                description=description.strip(),
                homepage_url=homepage_url,
                webmaster_email=webmaster_email,
                status="draft",
                created_at=now,
                updated_at=now,
            )
            self._commit(card)
            return card

    def _apply_field(self, card: ToolCard, field_path: str, new_value) -> ToolCard:
        if field_path in _IMMUTABLE_FIELDS:
            raise ImmutableField(f"{field_path} cannot be edited", field=field_path)
        if field_path.startswith("spec."):
            spec_field = field_path[len("spec."):]
            if spec_field not in _EDITABLE_SPEC_FIELDS:
                raise ValidationFailed(f"unknown field path {field_path!r}",
                                       field=field_path)
            spec_dict = card.spec.to_dict()
            spec_dict[spec_field] = new_value
            spec = Specification.from_dict(spec_dict)
            spec.validate()
            return replace(card, spec=spec)
        if field_path not in _EDITABLE_TOP_FIELDS:
            raise ValidationFailed(f"unknown field path {field_path!r}", field=field_path)
        if field_path == "name":
            if not isinstance(new_value, str) or not new_value.strip():
                raise MissingField("name must be non-empty", field="name")
            self._check_name_free(new_value, besides=card.accession)
            return replace(card, name=new_value.strip())
        if field_path == "description":
            if not isinstance(new_value, str):
                raise ValidationFailed("description must be text", field=field_path)
            return replace(card, description=new_value)
        if field_path == "homepage_url":
            return replace(card, homepage_url=_check_url(str(new_value)))
        if field_path == "webmaster_email":
            return replace(card, webmaster_email=_check_email(str(new_value)))
        if field_path == "status":
            if new_value not in STATUSES:
                raise ValidationFailed(f"unknown status {new_value!r}", field="status")
            return replace(card, status=new_value)
        if field_path == "category_ids":
            if not isinstance(new_value, (list, tuple, set, frozenset)):
                raise ValidationFailed("category_ids must be a list", field=field_path)
            return replace(card, category_ids=self._validate_categories(new_value))
        if field_path == "rrid":
            if new_value is not None and not isinstance(new_value, str):
                raise ValidationFailed("rrid must be text or null", field=field_path)
            return replace(card, rrid=new_value)
        if field_path == "publications":
            if not isinstance(new_value, list):
                raise ValidationFailed("publications must be a list", field=field_path)
            publications = tuple(Publication.from_dict(p) for p in new_value)
            for publication in publications:
                publication.validate()
            return replace(card, publications=publications)
        raise ValidationFailed(f"unknown field path {field_path!r}", field=field_path)

    @staticmethod
    def _field_as_text(card: ToolCard, field_path: str) -> str:
        if field_path.startswith("spec."):
            return _as_text(card.spec.to_dict()[field_path[len("spec."):]])
        value = card.to_dict()[field_path]
        return _as_text(value)

    def apply_edit(self, accession: str, field_path: str, new_value,
                   editor: str) -> ToolCard:
        """Wiki-mode edit of one field; audited with old and new values."""
        with self._lock:
            card = self._cards.get(accession)
            if card is None:
                raise UnknownTool(f"unknown accession {accession!r}")
            old_text = None
            if field_path not in _IMMUTABLE_FIELDS:
                try:
                    old_text = self._field_as_text(card, field_path)
                except KeyError:
                    old_text = ""
            updated = self._apply_field(card, field_path, new_value)
            # one timestamp for both the card and its audit entry, so replaying
            # the audit log reproduces updated_at exactly
            edited_at = self.now_iso()
            updated = replace(updated, updated_at=edited_at)
            self.append_audit(accession, editor, field_path,
                              old_text, self._field_as_text(updated, field_path),
                              at=edited_at)
            self._commit(updated)
            return updated

    def add_version(self, accession: str, version_label: str, operating_system: str,
                    architecture: str, linked_publication: Optional[int],
                    payload: bytes) -> CodeVersion:
        """Register an uploaded code archive: digest, mint a DOI, append.

        Prior versions are always retained.
        """
        with self._lock:
            card = self._cards.get(accession)
            if card is None:
                raise UnknownTool(f"unknown accession {accession!r}")
            if not version_label or not version_label.strip():
                raise ValidationFailed("version_label is required", field="version_label")
            if any(v.version_label == version_label for v in card.versions):
                raise DuplicateVersion(
                    f"version {version_label!r} already exists on {accession}")
            if linked_publication is not None and not (
                    0 <= linked_publication < len(card.publications)):
                raise ValidationFailed(
                    f"linked_publication {linked_publication} is out of range",
                    field="linked_publication")
            digest = payload_digest(payload, self._store.digest_algorithm)
            doi = mint_doi(accession, version_label, self._minting_client,
                           payload_digest=digest)
            version = CodeVersion(
                version_label=version_label,
                operating_system=operating_system,
                architecture=architecture,
                doi=doi,
                uploaded_at=self.now_iso(),
                payload_digest=digest,
                linked_publication=linked_publication,
            )
            self._store.put_blob(digest, payload)
            updated = replace(card, versions=card.versions + (version,),
                              updated_at=self.now_iso())
            self._commit(updated)
            return version

    def append_probe(self, accession: str, probe: LinkProbe) -> ToolCard:
        """Record a link-checker probe; link_history is system-appended only."""
        with self._lock:
            card = self._cards.get(accession)
            if card is None:
                raise UnknownTool(f"unknown accession {accession!r}")
            updated = replace(card, link_history=card.link_history + (probe,))
            self._commit(updated)
            return updated

    def update_publication_badges(self, accession: str, publication_index: int,
                                  user_id: str, roles: frozenset[str],
                                  editor: str) -> Publication:
        """Merge contributor roles into one publication's badge map."""
        from .community import UnknownPublication
        with self._lock:
            card = self._cards.get(accession)
            if card is None:
                raise UnknownTool(f"unknown accession {accession!r}")
            if not (0 <= publication_index < len(card.publications)):
                raise UnknownPublication(
                    f"{accession} has no publication #{publication_index}")
            publication = card.publications[publication_index]
            merged = dict(publication.credit_badges)
            old = merged.get(user_id, frozenset())
            merged[user_id] = old | roles
            updated_publication = replace(publication, credit_badges=merged)
            publications = list(card.publications)
            publications[publication_index] = updated_publication
            self.append_audit(
                accession, editor,
                f"publications[{publication_index}].credit_badges.{user_id}",
                sorted(old), sorted(merged[user_id]))
            updated = replace(card, publications=tuple(publications),
                              updated_at=self.now_iso())
            self._commit(updated)
            return updated_publication
