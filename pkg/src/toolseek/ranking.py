"""The four ranking signals and their weighted combination.

Signals are all normalized to [0,1]:

- text relevance: BM25 (k1=1.2, b=0.75), normalized by the query's maximum
  attainable score so the value is comparable across queries
- category match: containment of the hit in the plan's category expansion
- quality: website health, documentation/tutorial links, maintenance flag,
  and log-saturated publication count
- community: Bayesian-smoothed mean star rating (prior mean 3.5, weight 5)

Pure functions throughout; everything here is safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import ToolseekError

BM25_K1 = 1.2
BM25_B = 0.75

RATING_PRIOR_MEAN = 3.5
RATING_PRIOR_WEIGHT = 5.0
RATING_MAX = 5.0

QUALITY_FLAG_WEIGHT = 0.8
QUALITY_PUBLICATION_WEIGHT = 0.2
QUALITY_PUBLICATION_SATURATION = 10  # ln(1+n)/ln(11) reaches 1.0 at n=10

SIGNAL_NAMES = ("text_relevance", "category_match", "quality", "community")


class InvalidWeights(ToolseekError):
    code = "invalid_weights"


@dataclass(frozen=True)
class RankWeights:
    text: float = 0.5
    category: float = 0.2
    quality: float = 0.2
    community: float = 0.1

    def validate(self) -> None:
        values = (self.text, self.category, self.quality, self.community)
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise InvalidWeights("weights must lie in [0,1]")
        if abs(sum(values) - 1.0) > 1e-9:
            raise InvalidWeights(f"weights must sum to 1, got {sum(values)}")

    def as_dict(self) -> dict[str, float]:
        return {"text": self.text, "category": self.category,
                "quality": self.quality, "community": self.community}

    @classmethod
    def from_dict(cls, raw: Mapping[str, float]) -> "RankWeights":
        weights = cls(text=raw.get("text", 0.5), category=raw.get("category", 0.2),
                      quality=raw.get("quality", 0.2), community=raw.get("community", 0.1))
        weights.validate()
        return weights


DEFAULT_WEIGHTS = RankWeights()


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    avg_doc_length: float
    doc_frequency: Mapping[str, int]


@dataclass(frozen=True)
class ScoredResult:
    accession: str
    signals: dict[str, float]
    final_score: float
    explanation: tuple[tuple[str, float, float, float], ...]  # (signal, weight, value, term)

    def sort_key(self):
        # Ties break toward higher quality, then lexicographic accession.
        return (-self.final_score, -self.signals["quality"], self.accession)


def bm25_idf(doc_frequency: int, doc_count: int) -> float:
    return math.log(1.0 + (doc_count - doc_frequency + 0.5) / (doc_frequency + 0.5))


def bm25_term_score(tf: int, doc_frequency: int, doc_count: int,
                    doc_length: int, avg_doc_length: float) -> float:
    if tf <= 0 or doc_frequency <= 0 or doc_count <= 0 or avg_doc_length <= 0:
        return 0.0
    idf = bm25_idf(doc_frequency, doc_count)
    norm = tf + BM25_K1 * (1.0 - BM25_B + BM25_B * (doc_length / avg_doc_length))
    return idf * tf * (BM25_K1 + 1.0) / norm


def dedupe_terms(terms: Sequence[str]) -> list[str]:
    seen: set[str] = set()
    ordered = []
    for term in terms:
        if term not in seen:
            seen.add(term)
            ordered.append(term)
    return ordered


def text_relevance(terms: Sequence[str], term_freqs: Mapping[str, int],
                   doc_length: int, stats: CorpusStats) -> float:
    """Normalized BM25 in [0,1].

    The raw score is divided by the query's maximum attainable score: the sum
    over query terms (with nonzero document frequency) of idf * (k1 + 1), the
    supremum of the per-term contribution as tf grows.
    """
    query_terms = dedupe_terms(terms)
    if not query_terms:
        return 0.0
    raw = 0.0
    bound = 0.0
    for term in query_terms:
        df = stats.doc_frequency.get(term, 0)
        if df <= 0:
            continue
        bound += bm25_idf(df, stats.doc_count) * (BM25_K1 + 1.0)
        tf = term_freqs.get(term, 0)
        if tf > 0:
            raw += bm25_term_score(tf, df, stats.doc_count, doc_length,
                                   stats.avg_doc_length)
    if bound <= 0.0:
        return 0.0
    return raw / bound


def quality_score(card, latest_alive: bool | None = None) -> float:
    """0.8 * (alive + documentation + tutorial + maintained)/4 + 0.2 * pub term."""
    if latest_alive is None:
        latest_alive = card.latest_link_alive
    labels = [label.lower() for label in card.spec.external_links]
    has_documentation = any("doc" in label or "wiki" in label for label in labels)
    has_tutorial = any("tutorial" in label for label in labels)
    maintained = card.spec.maintained == "yes"
    flags = sum((bool(latest_alive), has_documentation, has_tutorial, maintained))
    publication_term = min(1.0, math.log(1 + len(card.publications))
                           / math.log(1 + QUALITY_PUBLICATION_SATURATION))
    return QUALITY_FLAG_WEIGHT * flags / 4.0 + QUALITY_PUBLICATION_WEIGHT * publication_term


def community_score(rating_sum: float, rating_count: int) -> float:
    """Bayesian-smoothed mean rating scaled to [0,1]."""
    smoothed = (rating_sum + RATING_PRIOR_WEIGHT * RATING_PRIOR_MEAN) / (
        (rating_count + RATING_PRIOR_WEIGHT) * RATING_MAX)
    return smoothed


def combine_score(accession: str, text: float, category: float, quality: float,
                  community: float, weights: RankWeights = DEFAULT_WEIGHTS, *,
                  has_text: bool = True, has_category: bool = True) -> ScoredResult:
    """Weighted sum of the signals.

    When the plan carries no query terms or no categories, the corresponding
    signal is undefined; its weight mass is renormalized over the remaining
    signals so the final score stays in [0,1].
    """
    weights.validate()
    members = [
        ("text_relevance", weights.text if has_text else None, text),
        ("category_match", weights.category if has_category else None, category),
        ("quality", weights.quality, quality),
        ("community", weights.community, community),
    ]
    total_weight = sum(w for _, w, _ in members if w is not None)
    explanation = []
    final = 0.0
    signals = {}
    for name, weight, value in members:
        signals[name] = value
        if weight is None or total_weight <= 0:
            explanation.append((name, 0.0, value, 0.0))
            continue
        effective = weight / total_weight
        term = effective * value
        final += term
        explanation.append((name, effective, value, term))
    return ScoredResult(accession=accession, signals=signals,
                        final_score=final, explanation=tuple(explanation))
