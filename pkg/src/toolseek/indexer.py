"""Immutable searchable snapshots: inverted text index, category postings, facets.

Snapshots never mutate after publication. Incremental updates copy-on-write
the affected postings and must stay behaviorally indistinguishable from a
full rebuild over the updated card set; publication is an atomic reference
swap so readers never block writers.
"""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Iterable, Mapping, Optional

from . import ranking
from .errors import ToolseekError
from .registry import ChangeEvent, ToolCard
from .terminology import TerminologyGraph
from .textnorm import normalize_phrase, normalize_tokens

FACET_DIMENSIONS = ("category", "operating_system", "programming_language",
                    "interface", "technology")


class StaleEvent(ToolseekError):
    code = "stale_event"


@dataclass(frozen=True)
class PostingList:
    entries: tuple[tuple[int, int], ...]  # (doc id, term frequency), doc ids ascending

    @property
    def doc_frequency(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class DocEntry:
    accession: str
    name: str
    summary: str
    text: str
    doc_length: int
    status: str
    category_ids: frozenset[str]
    facet_values: dict[str, tuple[str, ...]]
    facet_pairs: tuple[tuple[str, str], ...]  # flattened for fast counting
    quality: float
    community: float


@dataclass(frozen=True)
class IndexSnapshot:
    generation: int
    doc_count: int
    avg_doc_length: float
    text_postings: dict[str, PostingList]
    category_postings: dict[str, frozenset[int]]
    facet_index: dict[tuple[str, str], frozenset[int]]
    doc_table: dict[int, DocEntry]
    accession_to_doc: dict[str, int]
    name_to_doc: dict[str, int]
    base_seq: int = 0

    def stats(self) -> ranking.CorpusStats:
        return ranking.CorpusStats(
            doc_count=self.doc_count,
            avg_doc_length=self.avg_doc_length,
            doc_frequency={term: plist.doc_frequency
                           for term, plist in self.text_postings.items()})

    @cached_property
    def doc_lengths(self) -> tuple[int, ...]:
        """Dense doc-id-indexed lengths for the scoring hot loop."""
        return tuple(self.doc_table[i].doc_length for i in range(self.doc_count))

    @cached_property
    def _token_cache(self) -> dict[int, tuple[str, ...]]:
        return {}

    def doc_tokens(self, doc_id: int) -> tuple[str, ...]:
        """Token sequence of one doc, cached lazily (phrase post-scans)."""
        cache = self._token_cache
        tokens = cache.get(doc_id)
        if tokens is None:
            tokens = tuple(normalize_tokens(self.doc_table[doc_id].text))
            cache[doc_id] = tokens
        return tokens

    def term_docs(self, token: str) -> frozenset[int]:
        plist = self.text_postings.get(token)
        if plist is None:
            return frozenset()
        return frozenset(doc_id for doc_id, _ in plist.entries)

    def category_docs(self, category_ids: Iterable[str]) -> frozenset[int]:
        docs: set[int] = set()
        for category_id in category_ids:
            docs.update(self.category_postings.get(category_id, frozenset()))
        return frozenset(docs)

    def doc_term_freqs(self, doc_id: int) -> Counter:
        return Counter(self.doc_tokens(doc_id))


def searchable_text(card: ToolCard) -> str:
    """The text a card is indexed under: name, description, specification."""
    spec = card.spec
    parts = [card.name, card.description, spec.software_type,
             *sorted(spec.interfaces), *sorted(spec.operating_systems),
             *sorted(spec.programming_languages), spec.license]
    return " ".join(part for part in parts if part)


def normalize_doc_tokens(card: ToolCard) -> list[str]:
    return normalize_tokens(searchable_text(card))


def _facet_values(card: ToolCard, graph: TerminologyGraph) -> dict[str, tuple[str, ...]]:
    technologies = sorted({graph.root_of(cid) for cid in card.category_ids
                           if cid in graph.categories})
    return {
        "category": tuple(sorted(card.category_ids)),
        "operating_system": tuple(sorted(card.spec.operating_systems)),
        "programming_language": tuple(sorted(card.spec.programming_languages)),
        "interface": tuple(sorted(card.spec.interfaces)),
        "technology": tuple(technologies),
    }


def _doc_entry(card: ToolCard, graph: TerminologyGraph,
               rating_sum: int, rating_count: int) -> tuple[DocEntry, Counter]:
    text = searchable_text(card)
    tokens = normalize_tokens(text)
    facet_values = _facet_values(card, graph)
    entry = DocEntry(
        accession=card.accession,
        name=card.name,
        summary=card.description,
        text=text,
        doc_length=len(tokens),
        status=card.status,
        category_ids=frozenset(card.category_ids),
        facet_values=facet_values,
        facet_pairs=tuple((dimension, value)
                          for dimension in FACET_DIMENSIONS
                          for value in facet_values[dimension]),
        quality=ranking.quality_score(card),
        community=ranking.community_score(rating_sum, rating_count),
    )
    return entry, Counter(tokens)


RatingsProvider = Callable[[str], tuple[int, int]]


def build_index(cards: Iterable[ToolCard], graph: TerminologyGraph,
                ratings: Optional[RatingsProvider] = None, *,
                generation: int = 1, base_seq: int = 0) -> IndexSnapshot:
    """Full rebuild over the published/obsolete card set; drafts are skipped."""
    if ratings is None:
        ratings = lambda _: (0, 0)
    indexed = sorted((c for c in cards if c.status != "draft"),
                     key=lambda c: c.accession)

    doc_table: dict[int, DocEntry] = {}
    accession_to_doc: dict[str, int] = {}
    name_to_doc: dict[str, int] = {}
    postings: dict[str, list[tuple[int, int]]] = {}
    category_postings: dict[str, set[int]] = {}
    facet_index: dict[tuple[str, str], set[int]] = {}

    for doc_id, card in enumerate(indexed):
        rating_sum, rating_count = ratings(card.accession)
        entry, freqs = _doc_entry(card, graph, rating_sum, rating_count)
        doc_table[doc_id] = entry
        accession_to_doc[card.accession] = doc_id
        name_to_doc[normalize_phrase(card.name)] = doc_id
        for token, tf in freqs.items():
            postings.setdefault(token, []).append((doc_id, tf))
        for category_id in entry.category_ids:
            category_postings.setdefault(category_id, set()).add(doc_id)
        for dimension, values in entry.facet_values.items():
            for value in values:
                facet_index.setdefault((dimension, value), set()).add(doc_id)

    doc_count = len(doc_table)
    total_length = sum(entry.doc_length for entry in doc_table.values())
    return IndexSnapshot(
        generation=generation,
        doc_count=doc_count,
        avg_doc_length=total_length / doc_count if doc_count else 0.0,
        text_postings={token: PostingList(tuple(entries))
                       for token, entries in postings.items()},
        category_postings={cid: frozenset(docs)
                           for cid, docs in category_postings.items()},
        facet_index={key: frozenset(docs) for key, docs in facet_index.items()},
        doc_table=doc_table,
        accession_to_doc=accession_to_doc,
        name_to_doc=name_to_doc,
        base_seq=base_seq,
    )


def _replace_postings(postings: dict[str, PostingList], doc_id: int,
                      old_freqs: Mapping[str, int],
                      new_freqs: Mapping[str, int]) -> dict[str, PostingList]:
    changed = {t for t in old_freqs if old_freqs.get(t) != new_freqs.get(t)}
    changed |= {t for t in new_freqs if old_freqs.get(t) != new_freqs.get(t)}
    if not changed:
        return postings
    updated = dict(postings)
    for token in changed:
        current = updated.get(token)
        entries = [e for e in (current.entries if current else ()) if e[0] != doc_id]
        tf = new_freqs.get(token, 0)
        if tf > 0:
            entries.append((doc_id, tf))
            entries.sort()
        if entries:
            updated[token] = PostingList(tuple(entries))
        elif token in updated:
            del updated[token]
    return updated


def _replace_membership(index: dict, doc_id: int, old_keys: set, new_keys: set) -> dict:
    if old_keys == new_keys:
        return index
    updated = dict(index)
    for key in old_keys - new_keys:
        members = updated.get(key, frozenset()) - {doc_id}
        if members:
            updated[key] = members
        else:
            updated.pop(key, None)
    for key in new_keys - old_keys:
        updated[key] = updated.get(key, frozenset()) | {doc_id}
    return updated


def apply_update(snapshot: IndexSnapshot, event: ChangeEvent,
                 graph: TerminologyGraph) -> IndexSnapshot:
    """Fold one change event into a new snapshot (generation + 1).

    Must be behaviorally indistinguishable from a full rebuild over the
    updated card set; the rebuild-equivalence property test holds it to that.
    """
    if event.seq <= snapshot.base_seq:
        raise StaleEvent(
            f"event seq {event.seq} is not newer than snapshot base {snapshot.base_seq}")

    card = event.card
    existing_id = snapshot.accession_to_doc.get(card.accession)

    if card.status == "draft":
        # Drafts are invisible to search; published cards can never return to
        # draft, so an existing doc is untouched.
        return replace(snapshot, generation=snapshot.generation + 1,
                       base_seq=event.seq)

    entry, new_freqs = _doc_entry(card, graph, event.rating_sum, event.rating_count)

    if existing_id is None:
        doc_id = snapshot.doc_count
        old_freqs: Counter = Counter()
        old_categories: set[str] = set()
        old_facets: set[tuple[str, str]] = set()
        old_name_key = None
    else:
        doc_id = existing_id
        old_entry = snapshot.doc_table[doc_id]
        old_freqs = Counter(normalize_tokens(old_entry.text))
        old_categories = set(old_entry.category_ids)
        old_facets = {(dimension, value)
                      for dimension, values in old_entry.facet_values.items()
                      for value in values}
        old_name_key = normalize_phrase(old_entry.name)

    new_facets = {(dimension, value)
                  for dimension, values in entry.facet_values.items()
                  for value in values}

    doc_table = dict(snapshot.doc_table)
    doc_table[doc_id] = entry
    accession_to_doc = dict(snapshot.accession_to_doc)
    accession_to_doc[card.accession] = doc_id
    name_to_doc = dict(snapshot.name_to_doc)
    new_name_key = normalize_phrase(card.name)
    if old_name_key is not None and old_name_key != new_name_key:
        if name_to_doc.get(old_name_key) == doc_id:
            del name_to_doc[old_name_key]
    name_to_doc[new_name_key] = doc_id

    doc_count = len(doc_table)
    total_length = sum(e.doc_length for e in doc_table.values())

    return IndexSnapshot(
        generation=snapshot.generation + 1,
        doc_count=doc_count,
        avg_doc_length=total_length / doc_count if doc_count else 0.0,
        text_postings=_replace_postings(snapshot.text_postings, doc_id,
                                        old_freqs, new_freqs),
        category_postings=_replace_membership(snapshot.category_postings, doc_id,
                                              old_categories,
                                              set(entry.category_ids)),
        facet_index=_replace_membership(snapshot.facet_index, doc_id,
                                        old_facets, new_facets),
        doc_table=doc_table,
        accession_to_doc=accession_to_doc,
        name_to_doc=name_to_doc,
        base_seq=event.seq,
    )


class IndexManager:
    """Owns the published snapshot; applies registry events synchronously.

    The snapshot swap is a single reference assignment under a lock, so any
    number of concurrent readers see either the old or the new snapshot,
    never a partial one.
    """

    def __init__(self, registry, graph: TerminologyGraph,
                 ratings: Optional[RatingsProvider] = None):
        self._registry = registry
        self._graph = graph
        self._ratings = ratings or (lambda _: (0, 0))
        self._lock = threading.Lock()
        self._snapshot = build_index(registry.cards(), graph, self._ratings,
                                     generation=1, base_seq=registry.seq)

    @property
    def snapshot(self) -> IndexSnapshot:
        return self._snapshot

    @property
    def graph(self) -> TerminologyGraph:
        return self._graph

    def on_event(self, event: ChangeEvent) -> None:
        with self._lock:
            self._snapshot = apply_update(self._snapshot, event, self._graph)

    def rebuild(self) -> IndexSnapshot:
        with self._lock:
            snapshot = build_index(
                self._registry.cards(), self._graph, self._ratings,
                generation=self._snapshot.generation + 1,
                base_seq=self._registry.seq)
            self._snapshot = snapshot
            return snapshot
