"""Homepage link checker.

Probes record only status and latency, never bodies. A card flips to
obsolete after a sustained run of failures and flips back on the first
healthy probe; cards are never deleted, only their status moves.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Optional
from urllib.parse import urlsplit

OUTCOME_ALIVE = "alive"
OUTCOME_BROKEN = "broken"
OUTCOME_UNREACHABLE = "unreachable"


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class LinkProbe:
    at: str                      # ISO-8601 UTC timestamp
    outcome: str                 # alive | broken | unreachable
    http_status: Optional[int] = None
    latency: float = 0.0         # seconds

    def to_dict(self) -> dict:
        return {"at": self.at, "outcome": self.outcome,
                "http_status": self.http_status, "latency": self.latency}

    @classmethod
    def from_dict(cls, raw: dict) -> "LinkProbe":
        return cls(at=raw["at"], outcome=raw["outcome"],
                   http_status=raw.get("http_status"),
                   latency=raw.get("latency", 0.0))


@dataclass(frozen=True)
class SweepReport:
    started: str
    finished: str
    probed: int
    alive: int
    broken: int
    unreachable: int
    newly_obsolete: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"started": self.started, "finished": self.finished,
                "probed": self.probed, "alive": self.alive,
                "broken": self.broken, "unreachable": self.unreachable,
                "newly_obsolete": list(self.newly_obsolete)}


@dataclass(frozen=True)
class LinkCheckPolicy:
    timeout: float = 10.0
    retries: int = 2                       # extra attempts on unreachable-class failures
    backoff: tuple[float, ...] = (1.0, 2.0)
    max_redirects: int = 5
    parallelism: int = 8
    per_host_spacing: float = 0.5          # seconds between requests to one host
    obsolete_after_failures: int = 3
    obsolete_after_days: float = 7.0
    user_agent: str = "toolseek-linkcheck/0.1"
    allow_hosts: Optional[frozenset[str]] = None
    deny_hosts: frozenset[str] = frozenset()
    clock: Callable[[], datetime] = utcnow
    sleep: Callable[[float], None] = time.sleep

    def host_allowed(self, host: str) -> bool:
        if host in self.deny_hosts:
            return False
        return self.allow_hosts is None or host in self.allow_hosts


class TransportTimeout(Exception):
    pass


class TransportConnectionError(Exception):
    pass


class TransportRedirectLoop(Exception):
    pass


class RequestsTransport:
    """Real HTTP(S) transport: HEAD first, GET when HEAD is refused."""

    def __init__(self):
        import requests
        self._requests = requests
        self._session = requests.Session()

    def fetch(self, url: str, policy: LinkCheckPolicy) -> int:
        self._session.max_redirects = policy.max_redirects
        headers = {"User-Agent": policy.user_agent}
        requests = self._requests
        try:
            response = self._session.request(
                "HEAD", url, timeout=policy.timeout,
                allow_redirects=True, headers=headers)
            if response.status_code in (405, 501):
                response = self._session.request(
                    "GET", url, timeout=policy.timeout,
                    allow_redirects=True, headers=headers, stream=True)
                response.close()
            return response.status_code
        except requests.Timeout as exc:
            raise TransportTimeout(str(exc)) from exc
        except requests.TooManyRedirects as exc:
            raise TransportRedirectLoop(str(exc)) from exc
        except requests.ConnectionError as exc:
            raise TransportConnectionError(str(exc)) from exc


class StubMapTransport:
    """Offline transport for tests and the CLI --stub flag.

    The map takes a URL to an int status, or the strings "timeout" /
    "connection-error". Unknown URLs behave like connection failures.
    """

    def __init__(self, url_map: dict):
        self.url_map = dict(url_map)
        self.log: list[tuple[float, str]] = []

    def fetch(self, url: str, policy: LinkCheckPolicy) -> int:
        self.log.append((time.monotonic(), url))
        value = self.url_map.get(url, "connection-error")
        if value == "timeout":
            raise TransportTimeout(url)
        if value == "connection-error":
            raise TransportConnectionError(url)
        return int(value)


def classify_status(status: int) -> str:
    if 200 <= status <= 399:
        return OUTCOME_ALIVE
    return OUTCOME_BROKEN


def check_url(url: str, policy: LinkCheckPolicy, transport=None) -> LinkProbe:
    """Probe one URL; every failure becomes a probe outcome, never an exception.

    Unreachable-class failures (timeout, DNS, connection) are retried with
    exponential backoff; HTTP errors are not retried. A redirect chain longer
    than the limit counts as broken: the link exists but does not resolve.
    """
    if transport is None:
        transport = RequestsTransport()
    attempts = policy.retries + 1
    started = time.monotonic()
    for attempt in range(attempts):
        attempt_start = time.monotonic()
        try:
            status = transport.fetch(url, policy)
        except TransportRedirectLoop:
            return LinkProbe(at=policy.clock().isoformat(),
                             outcome=OUTCOME_BROKEN, http_status=None,
                             latency=time.monotonic() - attempt_start)
        except (TransportTimeout, TransportConnectionError):
            if attempt + 1 < attempts:
                delay = policy.backoff[min(attempt, len(policy.backoff) - 1)] \
                    if policy.backoff else 0.0
                policy.sleep(delay)
                continue
            return LinkProbe(at=policy.clock().isoformat(),
                             outcome=OUTCOME_UNREACHABLE, http_status=None,
                             latency=time.monotonic() - started)
        return LinkProbe(at=policy.clock().isoformat(),
                         outcome=classify_status(status), http_status=status,
                         latency=time.monotonic() - attempt_start)
    raise AssertionError("unreachable")


def classify_obsolete(link_history: list[LinkProbe],
                      policy: LinkCheckPolicy = LinkCheckPolicy()) -> str:
    """Status implied by a probe history: "published" or "obsolete".

    Obsolete requires a trailing streak of at least ``obsolete_after_failures``
    consecutive non-alive probes whose first and last are at least
    ``obsolete_after_days`` apart. Any alive probe resets the streak, so the
    flag cannot flap on alternating outcomes.
    """
    if not link_history:
        return "published"
    streak: list[LinkProbe] = []
    for probe in reversed(link_history):
        if probe.outcome == OUTCOME_ALIVE:
            break
        streak.append(probe)
    if not streak or streak[0] is not link_history[-1]:
        return "published"
    if len(streak) < policy.obsolete_after_failures:
        return "published"
    newest = datetime.fromisoformat(streak[0].at)
    oldest = datetime.fromisoformat(streak[-1].at)
    if newest - oldest >= timedelta(days=policy.obsolete_after_days):
        return "obsolete"
    return "published"


def run_sweep(registry, policy: LinkCheckPolicy = LinkCheckPolicy(),
              transport=None) -> SweepReport:
    """Probe every published/obsolete card once and apply status transitions.

    One worker per host keeps per-host concurrency at 1; the pool caps global
    concurrency; a sleep after each probe enforces the per-host spacing.
    """
    if transport is None:
        transport = RequestsTransport()
    started = policy.clock().isoformat()

    by_host: dict[str, list[tuple[str, str]]] = {}
    for card in registry.cards():
        if card.status not in ("published", "obsolete"):
            continue
        host = urlsplit(card.homepage_url).netloc
        if not policy.host_allowed(host):
            continue
        by_host.setdefault(host, []).append((card.accession, card.homepage_url))

    counts = {OUTCOME_ALIVE: 0, OUTCOME_BROKEN: 0, OUTCOME_UNREACHABLE: 0}
    newly_obsolete: list[str] = []
    lock = threading.Lock()

    def probe_host(urls: list[tuple[str, str]]) -> None:
        for position, (accession, url) in enumerate(urls):
            probe = check_url(url, policy, transport)
            with lock:
                counts[probe.outcome] += 1
            card = registry.append_probe(accession, probe)
            implied = classify_obsolete(card.link_history, policy)
            if implied != card.status:
                registry.apply_edit(accession, "status", implied,
                                    editor="link-checker")
                if implied == "obsolete":
                    with lock:
                        newly_obsolete.append(accession)
            if position + 1 < len(urls):
                policy.sleep(policy.per_host_spacing)

    if by_host:
        workers = max(1, min(policy.parallelism, len(by_host)))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(probe_host, urls) for urls in by_host.values()]
            for future in futures:
                future.result()

    return SweepReport(
        started=started,
        finished=policy.clock().isoformat(),
        probed=sum(counts.values()),
        alive=counts[OUTCOME_ALIVE],
        broken=counts[OUTCOME_BROKEN],
        unreachable=counts[OUTCOME_UNREACHABLE],
        newly_obsolete=tuple(sorted(newly_obsolete)),
    )
