"""Plan execution over an immutable snapshot.

Candidate generation, boolean set algebra, conjunctive filtering, ranking,
facet counting and pagination. NOT complements are taken within the positive
candidate set, never the whole corpus, so pure negation can never match
everything. Quoted phrases are verified by a post-scan over candidate
documents rather than a positional index.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from . import ranking
from .errors import ToolseekError
from .indexer import IndexSnapshot
from .query import (AcronymNode, AndNode, CategoryNode, NotNode, OrNode,
                    PhraseNode, QueryPlan, TermNode)
from .registry import INTERFACES, UnknownTool

MAX_PER_PAGE = 100


class PageOutOfRange(ToolseekError):
    code = "page_out_of_range"


class InvalidFilterValue(ToolseekError):
    code = "bad_facet_value"


@dataclass(frozen=True)
class SearchHit:
    accession: str
    name: str
    summary: str
    categories: tuple[str, ...]
    status: str
    scored: ranking.ScoredResult


@dataclass(frozen=True)
class SearchResponse:
    total_hits: int
    page: tuple[SearchHit, ...]
    facets: dict[tuple[str, str], int]
    generation: int
    elapsed: float
    page_number: int = 1
    per_page: int = 20


def compute_facets(doc_ids: Iterable[int], snapshot: IndexSnapshot) -> dict[tuple[str, str], int]:
    """Count docs per (dimension, value); multi-valued fields count once per value."""
    doc_table = snapshot.doc_table
    counts = Counter(pair
                     for doc_id in doc_ids
                     for pair in doc_table[doc_id].facet_pairs)
    return dict(counts)


def _phrase_docs(tokens: tuple[str, ...], snapshot: IndexSnapshot) -> frozenset[int]:
    """Docs containing the exact token sequence; verified by post-scan."""
    if not tokens:
        return frozenset()
    candidates: Optional[frozenset[int]] = None
    for token in tokens:
        docs = snapshot.term_docs(token)
        candidates = docs if candidates is None else candidates & docs
        if not candidates:
            return frozenset()
    verified = set()
    span = len(tokens)
    target = tuple(tokens)
    for doc_id in candidates:
        doc_tokens = snapshot.doc_tokens(doc_id)
        for start in range(len(doc_tokens) - span + 1):
            if doc_tokens[start:start + span] == target:
                verified.add(doc_id)
                break
    return frozenset(verified)


def _atom_docs(node, plan: QueryPlan, snapshot: IndexSnapshot) -> frozenset[int]:
    if isinstance(node, TermNode):
        return snapshot.term_docs(node.token)
    if isinstance(node, PhraseNode):
        return _phrase_docs(node.tokens, snapshot)
    if isinstance(node, CategoryNode):
        expansion = plan.category_expansions.get(node.category_id, frozenset())
        return snapshot.category_docs(expansion)
    if isinstance(node, AcronymNode):
        doc_id = snapshot.name_to_doc.get(plan.acronym_key or "")
        return frozenset() if doc_id is None else frozenset({doc_id})
    raise TypeError(f"not an atom: {node!r}")


def _positive_docs(node, plan: QueryPlan, snapshot: IndexSnapshot) -> frozenset[int]:
    """Union of all docs matched by atoms outside any NOT."""
    if isinstance(node, NotNode):
        return frozenset()
    if isinstance(node, (AndNode, OrNode)):
        docs: set[int] = set()
        for child in node.children:
            docs |= _positive_docs(child, plan, snapshot)
        return frozenset(docs)
    return _atom_docs(node, plan, snapshot)


def _evaluate(node, plan: QueryPlan, snapshot: IndexSnapshot,
              candidates: frozenset[int]) -> frozenset[int]:
    if isinstance(node, AndNode):
        result: Optional[frozenset[int]] = None
        for child in node.children:
            docs = _evaluate(child, plan, snapshot, candidates)
            result = docs if result is None else result & docs
        return result if result is not None else frozenset()
    if isinstance(node, OrNode):
        docs: set[int] = set()
        for child in node.children:
            docs |= _evaluate(child, plan, snapshot, candidates)
        return frozenset(docs)
    if isinstance(node, NotNode):
        return candidates - _evaluate(node.child, plan, snapshot, candidates)
    return _atom_docs(node, plan, snapshot)


def _candidate_docs(plan: QueryPlan, snapshot: IndexSnapshot) -> frozenset[int]:
    if plan.mode == "boolean":
        positives = _positive_docs(plan.ast, plan, snapshot)
        return _evaluate(plan.ast, plan, snapshot, positives)
    if plan.mode == "category":
        return snapshot.category_docs(plan.expanded_categories)
    if plan.mode == "acronym":
        doc_id = snapshot.name_to_doc.get(plan.acronym_key or "")
        return frozenset() if doc_id is None else frozenset({doc_id})
    # Empty natural query with filters only: catalog browsing over every doc,
    # ranked by quality and community alone.
    if (not plan.residual_terms and not plan.concept_matches
            and not plan.expanded_categories):
        return frozenset(snapshot.doc_table)
    # natural: disjunction of category hits and residual-term text hits
    docs: set[int] = set(snapshot.category_docs(plan.expanded_categories))
    for term in plan.residual_terms:
        docs |= snapshot.term_docs(term)
    return frozenset(docs)


def validate_filters(plan: QueryPlan) -> None:
    for value in plan.filters.interfaces:
        if value not in INTERFACES:
            raise InvalidFilterValue(f"unknown interface {value!r}", field="iface")
    for dimension, values in (("os", plan.filters.operating_systems),
                              ("lang", plan.filters.programming_languages),
                              ("tech", plan.filters.technologies)):
        for value in values:
            if not value.strip():
                raise InvalidFilterValue(f"empty {dimension} filter value",
                                         field=dimension)


def _passes_filters(doc_id: int, plan: QueryPlan, snapshot: IndexSnapshot) -> bool:
    entry = snapshot.doc_table[doc_id]
    filters = plan.filters
    if filters.category is not None:
        if not (entry.category_ids & filters.category_expansion):
            return False
    if filters.operating_systems:
        if not (set(entry.facet_values["operating_system"]) & filters.operating_systems):
            return False
    if filters.programming_languages:
        if not (set(entry.facet_values["programming_language"])
                & filters.programming_languages):
            return False
    if filters.interfaces:
        if not (set(entry.facet_values["interface"]) & filters.interfaces):
            return False
    if filters.technologies:
        if not (set(entry.facet_values["technology"]) & filters.technologies):
            return False
    return True


def _category_signal_sets(plan: QueryPlan, snapshot: IndexSnapshot
                          ) -> tuple[frozenset[int], list[frozenset[int]]]:
    """Doc sets backing the category-match signal: 1.0 for docs under an
    explicitly queried category, else the fraction of matched query concepts
    whose categories cover the doc."""
    explicit_docs = (snapshot.category_docs(plan.explicit_expansion)
                     if plan.explicit_expansion else frozenset())
    concept_docs = [snapshot.category_docs(expansion)
                    for expansion in plan.concept_expansions.values()]
    return explicit_docs, concept_docs


def _text_scores(docs: frozenset[int], plan: QueryPlan,
                 snapshot: IndexSnapshot) -> dict[int, float]:
    """Normalized BM25 per doc, accumulated term-by-term over posting lists.

    The arithmetic mirrors ranking.bm25_term_score operation for operation
    (only inlined), and contributions add in plan.scoring_terms order exactly
    like ranking.text_relevance, so both paths agree bit-for-bit.
    """
    terms = plan.scoring_terms
    raw: dict[int, float] = dict.fromkeys(docs, 0.0)
    if not terms:
        return raw
    bound = 0.0
    doc_count = snapshot.doc_count
    avg = snapshot.avg_doc_length
    lengths = snapshot.doc_lengths
    k1 = ranking.BM25_K1
    b = ranking.BM25_B
    k1_plus_1 = k1 + 1.0
    for term in terms:
        plist = snapshot.text_postings.get(term)
        if plist is None or not plist.entries:
            continue
        df = len(plist.entries)
        idf = ranking.bm25_idf(df, doc_count)
        bound += idf * k1_plus_1
        for doc_id, tf in plist.entries:
            if doc_id in raw:
                raw[doc_id] += idf * tf * k1_plus_1 / (
                    tf + k1 * (1.0 - b + b * (lengths[doc_id] / avg)))
    if bound <= 0.0:
        return dict.fromkeys(docs, 0.0)
    return {doc_id: score / bound for doc_id, score in raw.items()}


def execute_search(plan: QueryPlan, snapshot: IndexSnapshot,
                   weights: ranking.RankWeights = ranking.DEFAULT_WEIGHTS,
                   page: int = 1, per_page: int = 20) -> SearchResponse:
    """Run a compiled plan: candidates, filters, ranking, facets, pagination."""
    started = time.perf_counter()
    weights.validate()
    if not 1 <= per_page <= MAX_PER_PAGE:
        raise PageOutOfRange(f"per_page must be in [1,{MAX_PER_PAGE}]")
    if page < 1:
        raise PageOutOfRange("page must be >= 1")
    validate_filters(plan)

    doc_table = snapshot.doc_table
    candidates = _candidate_docs(plan, snapshot)
    filtered = not plan.filters.is_empty()
    survivors = [doc_id for doc_id in candidates
                 if (plan.include_obsolete or doc_table[doc_id].status != "obsolete")
                 and (not filtered or _passes_filters(doc_id, plan, snapshot))]

    facets = compute_facets(survivors, snapshot)
    survivor_set = frozenset(survivors)
    text_scores = _text_scores(survivor_set, plan, snapshot)
    has_text = bool(plan.scoring_terms)
    has_category = bool(plan.expanded_categories)
    explicit_docs, concept_docs = _category_signal_sets(plan, snapshot)
    n_concepts = len(concept_docs)

    # Effective weights with undefined signals renormalized away, exactly as
    # ranking.combine_score computes them: the tight loop below and the page
    # materialization must agree bit for bit.
    applicable = ((weights.text if has_text else None,
                   weights.category if has_category else None,
                   weights.quality, weights.community))
    total_weight = sum(w for w in applicable if w is not None)
    if total_weight > 0:
        weight_text, weight_category, weight_quality, weight_community = (
            (w / total_weight if w is not None else 0.0) for w in applicable)
    else:
        weight_text = weight_category = weight_quality = weight_community = 0.0

    rows = []
    for doc_id in survivors:
        entry = doc_table[doc_id]
        if doc_id in explicit_docs:
            category_signal = 1.0
        elif n_concepts:
            covering = 0
            for docs in concept_docs:
                if doc_id in docs:
                    covering += 1
            category_signal = covering / n_concepts
        else:
            category_signal = 0.0
        final = (weight_text * text_scores[doc_id]
                 + weight_category * category_signal
                 + weight_quality * entry.quality
                 + weight_community * entry.community)
        rows.append((-final, -entry.quality, entry.accession, doc_id,
                     category_signal))
    rows.sort()

    total = len(rows)
    last_page = max(1, math.ceil(total / per_page))
    if page > last_page:
        raise PageOutOfRange(f"page {page} is beyond the last page {last_page}")

    window = []
    for _neg_final, _neg_quality, accession, doc_id, category_signal in \
            rows[(page - 1) * per_page: page * per_page]:
        entry = doc_table[doc_id]
        result = ranking.combine_score(
            accession, text=text_scores[doc_id], category=category_signal,
            quality=entry.quality, community=entry.community, weights=weights,
            has_text=has_text, has_category=has_category)
        window.append(SearchHit(
            accession=accession, name=entry.name, summary=entry.summary,
            categories=tuple(sorted(entry.category_ids)), status=entry.status,
            scored=result))

    return SearchResponse(
        total_hits=total,
        page=tuple(window),
        facets=facets,
        generation=snapshot.generation,
        elapsed=time.perf_counter() - started,
        page_number=page,
        per_page=per_page,
    )


def related_tools(accession: str, k: int, snapshot: IndexSnapshot,
                  weights: Optional[ranking.RankWeights] = None) -> list[SearchHit]:
    """Live tools sharing at least one category with the given card.

    Ordered by shared-category count, then quality, then accession. The
    weights parameter is accepted for interface symmetry; ordering here is
    category- and quality-driven.
    """
    doc_id = snapshot.accession_to_doc.get(accession)
    if doc_id is None:
        raise UnknownTool(f"unknown accession {accession!r}")
    entry = snapshot.doc_table[doc_id]
    shared_counts: dict[int, int] = {}
    for category_id in entry.category_ids:
        for other in snapshot.category_postings.get(category_id, frozenset()):
            if other == doc_id:
                continue
            if snapshot.doc_table[other].status == "obsolete":
                continue
            shared_counts[other] = shared_counts.get(other, 0) + 1

    def sort_key(item):
        other_id, shared = item
        other = snapshot.doc_table[other_id]
        return (-shared, -other.quality, other.accession)

    hits = []
    for other_id, _shared in sorted(shared_counts.items(), key=sort_key)[:k]:
        other = snapshot.doc_table[other_id]
        hits.append(SearchHit(
            accession=other.accession, name=other.name, summary=other.summary,
            categories=tuple(sorted(other.category_ids)), status=other.status,
            scored=ranking.ScoredResult(
                accession=other.accession,
                signals={"text_relevance": 0.0, "category_match": 1.0,
                         "quality": other.quality, "community": other.community},
                final_score=0.0, explanation=()),
        ))
    return hits
