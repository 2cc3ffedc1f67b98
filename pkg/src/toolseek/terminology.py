"""The termino-ontology: concepts with synonym sets and a three-level category tree.

Graphs are immutable after load and safe to share across threads; a reload
produces a fresh graph that the owner swaps in atomically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Union

from .errors import ToolseekError
from .textnorm import normalize_phrase, normalize_tokens

TERM_KINDS = ("preferred", "synonym", "abbreviation", "common-expression")
OMICS_FIELDS = (
    "genomics",
    "epigenomics",
    "transcriptomics",
    "proteomics",
    "phenomics",
    "metabolomics",
    "metagenomics",
    "other",
)
MAX_DEPTH = 3
MAX_MATCH_NGRAM = 6

# Prefix for the synthetic concepts that make category labels queryable.
CATEGORY_CONCEPT_PREFIX = "category:"


class MalformedDocument(ToolseekError):
    code = "malformed_document"


class InvariantViolation(ToolseekError):
    code = "terminology_invariant"

    def __init__(self, message: str, *, offender: str | None = None,
                 violations: "list[Violation] | None" = None):
        super().__init__(message)
        self.offender = offender
        self.violations = violations or []


class UnknownCategory(ToolseekError):
    code = "unknown_category"


@dataclass(frozen=True)
class Term:
    surface: str
    kind: str = "synonym"


@dataclass(frozen=True)
class Concept:
    concept_id: str
    preferred_label: str
    terms: frozenset[Term]
    linked_category_ids: frozenset[str] = frozenset()
    related_concept_ids: frozenset[str] = frozenset()


@dataclass(frozen=True)
class CategoryNode:
    category_id: str
    label: str
    level: int
    parent_id: str | None = None
    omics_field: str = "other"


@dataclass(frozen=True)
class ConceptMatch:
    """One recognized span of query tokens.

    ``span`` is a half-open token-index range. Several concepts may share a
    surface form, so a single span carries the full set of matching ids.
    """

    span: tuple[int, int]
    concept_ids: frozenset[str]
    matched_surface: str


@dataclass(frozen=True)
class Violation:
    rule: str
    offender: str
    detail: str


@dataclass(frozen=True)
class TerminologyGraph:
    concepts: dict[str, Concept]
    categories: dict[str, CategoryNode]
    term_lexicon: dict[str, frozenset[str]]
    category_concepts: dict[str, Concept] = field(default_factory=dict)
    children: dict[str, tuple[str, ...]] = field(default_factory=dict)
    roots: tuple[str, ...] = ()

    def concept(self, concept_id: str) -> Concept | None:
        hit = self.concepts.get(concept_id)
        if hit is None:
            hit = self.category_concepts.get(concept_id)
        return hit

    def linked_categories(self, concept_id: str) -> frozenset[str]:
        concept = self.concept(concept_id)
        return concept.linked_category_ids if concept else frozenset()

    def root_of(self, category_id: str) -> str:
        """Level-1 ancestor of a category (the technology branch)."""
        node = self.categories[category_id]
        while node.parent_id is not None:
            node = self.categories[node.parent_id]
        return node.category_id


def empty_graph() -> TerminologyGraph:
    return build_graph([], [])


def build_graph(categories: Iterable[CategoryNode],
                concepts: Iterable[Concept],
                *, validate: bool = True) -> TerminologyGraph:
    """Assemble a graph from records, rejecting the whole batch on any violation."""
    category_records = list(categories)
    concept_records = list(concepts)
    if validate:
        problems = validate_records(category_records, concept_records)
        if problems:
            first = problems[0]
            raise InvariantViolation(
                f"{first.rule}: {first.detail}",
                offender=first.offender, violations=problems)

    category_map = {c.category_id: c for c in category_records}
    concept_map = {c.concept_id: c for c in concept_records}

    children: dict[str, list[str]] = {}
    roots: list[str] = []
    for node in category_records:
        if node.parent_id is None:
            roots.append(node.category_id)
        else:
            children.setdefault(node.parent_id, []).append(node.category_id)

    category_concepts: dict[str, Concept] = {}
    for node in category_records:
        cid = CATEGORY_CONCEPT_PREFIX + node.category_id
        category_concepts[cid] = Concept(
            concept_id=cid,
            preferred_label=node.label,
            terms=frozenset({Term(node.label, "preferred")}),
            linked_category_ids=frozenset({node.category_id}),
        )

    lexicon: dict[str, set[str]] = {}
    for concept in list(concept_map.values()) + list(category_concepts.values()):
        for term in concept.terms:
            key = normalize_phrase(term.surface)
            if key:
                lexicon.setdefault(key, set()).add(concept.concept_id)

    return TerminologyGraph(
        concepts=concept_map,
        categories=category_map,
        term_lexicon={k: frozenset(v) for k, v in lexicon.items()},
        category_concepts=category_concepts,
        children={k: tuple(sorted(v)) for k, v in children.items()},
        roots=tuple(sorted(roots)),
    )


def _resolved_level(node: CategoryNode, by_id: dict[str, CategoryNode]) -> int | None:
    """Depth of the parent chain, or None when the chain is broken or cyclic."""
    seen = set()
    depth = 1
    current = node
    while current.parent_id is not None:
        if current.category_id in seen:
            return None
        seen.add(current.category_id)
        parent = by_id.get(current.parent_id)
        if parent is None:
            return None
        depth += 1
        if depth > len(by_id) + 1:
            return None
        current = parent
    if current.category_id in seen:
        return None
    return depth


def validate_records(categories: Iterable[CategoryNode],
                     concepts: Iterable[Concept]) -> list[Violation]:
    """Every invariant violation in the record set; empty iff valid.

    Works on raw record lists so duplicate ids (which an id-keyed map cannot
    represent) are still caught.
    """
    violations: list[Violation] = []
    category_records = list(categories)
    concept_records = list(concepts)

    by_id: dict[str, CategoryNode] = {}
    for node in category_records:
        if node.category_id in by_id:
            violations.append(Violation(
                "duplicate-category-id", node.category_id,
                f"category id {node.category_id!r} declared more than once"))
            continue
        by_id[node.category_id] = node

    for node in by_id.values():
        if node.parent_id is not None and node.parent_id not in by_id:
            violations.append(Violation(
                "dangling-parent", node.category_id,
                f"parent {node.parent_id!r} of {node.category_id!r} does not exist"))
            continue
        depth = _resolved_level(node, by_id)
        if depth is None:
            violations.append(Violation(
                "category-cycle", node.category_id,
                f"parent chain of {node.category_id!r} never reaches a root"))
            continue
        if depth > MAX_DEPTH:
            violations.append(Violation(
                "depth-exceeded", node.category_id,
                f"{node.category_id!r} sits at level {depth}, deeper than {MAX_DEPTH}"))
        if node.level != depth:
            violations.append(Violation(
                "level-mismatch", node.category_id,
                f"{node.category_id!r} declares level {node.level} but sits at {depth}"))
        if not node.label.strip():
            violations.append(Violation(
                "empty-label", node.category_id,
                f"category {node.category_id!r} has an empty label"))

    seen_concepts: set[str] = set()
    for concept in concept_records:
        if concept.concept_id in seen_concepts:
            violations.append(Violation(
                "duplicate-concept-id", concept.concept_id,
                f"concept id {concept.concept_id!r} declared more than once"))
            continue
        seen_concepts.add(concept.concept_id)

        if not concept.terms:
            violations.append(Violation(
                "empty-terms", concept.concept_id,
                f"concept {concept.concept_id!r} has no terms"))
        else:
            surfaces = {normalize_phrase(t.surface) for t in concept.terms}
            if normalize_phrase(concept.preferred_label) not in surfaces:
                violations.append(Violation(
                    "preferred-label-missing", concept.concept_id,
                    f"preferred label of {concept.concept_id!r} is not among its terms"))
        for term in concept.terms:
            if not normalize_phrase(term.surface):
                violations.append(Violation(
                    "empty-term-surface", concept.concept_id,
                    f"concept {concept.concept_id!r} carries a term that normalizes to nothing"))
            if term.kind not in TERM_KINDS:
                violations.append(Violation(
                    "unknown-term-kind", concept.concept_id,
                    f"concept {concept.concept_id!r} uses unknown term kind {term.kind!r}"))
        for cat_id in concept.linked_category_ids:
            if cat_id not in by_id:
                violations.append(Violation(
                    "dangling-linked-category", concept.concept_id,
                    f"concept {concept.concept_id!r} links to unknown category {cat_id!r}"))
        for rel in concept.related_concept_ids:
            if rel not in {c.concept_id for c in concept_records}:
                violations.append(Violation(
                    "dangling-related-concept", concept.concept_id,
                    f"concept {concept.concept_id!r} relates to unknown concept {rel!r}"))

    return violations


def validate_graph(graph: TerminologyGraph) -> list[Violation]:
    """Validation report for an assembled graph; never raises."""
    violations = validate_records(graph.categories.values(), graph.concepts.values())

    rebuilt: dict[str, set[str]] = {}
    for concept in list(graph.concepts.values()) + list(graph.category_concepts.values()):
        for term in concept.terms:
            key = normalize_phrase(term.surface)
            if key:
                rebuilt.setdefault(key, set()).add(concept.concept_id)
    current = {k: set(v) for k, v in graph.term_lexicon.items()}
    if rebuilt != current:
        extra = sorted(set(current) - set(rebuilt))
        missing = sorted(set(rebuilt) - set(current))
        violations.append(Violation(
            "lexicon-mismatch", "term_lexicon",
            f"lexicon is not the inverse of the term sets "
            f"(missing={missing[:3]}, extra={extra[:3]})"))
    return violations


def _parse_category(raw: dict, index: int) -> CategoryNode:
    if not isinstance(raw, dict):
        raise MalformedDocument(f"categories[{index}] is not an object")
    try:
        category_id = raw["category_id"]
        label = raw["label"]
    except KeyError as exc:
        raise MalformedDocument(
            f"categories[{index}] is missing required field {exc.args[0]!r}") from None
    if not isinstance(category_id, str) or not isinstance(label, str):
        raise MalformedDocument(f"categories[{index}] has non-string id or label")
    parent_id = raw.get("parent_id")
    if parent_id is not None and not isinstance(parent_id, str):
        raise MalformedDocument(f"categories[{index}].parent_id must be a string or null")
    level = raw.get("level")
    if level is not None and not isinstance(level, int):
        raise MalformedDocument(f"categories[{index}].level must be an integer")
    omics_field = raw.get("omics_field", "other")
    if omics_field not in OMICS_FIELDS:
        raise MalformedDocument(
            f"categories[{index}].omics_field {omics_field!r} is not one of {OMICS_FIELDS}")
    # A missing level is derived from the parent chain after all nodes are read.
    return CategoryNode(category_id=category_id, label=label,
                        level=level if level is not None else 0,
                        parent_id=parent_id, omics_field=omics_field)


def _parse_concept(raw: dict, index: int) -> Concept:
    if not isinstance(raw, dict):
        raise MalformedDocument(f"concepts[{index}] is not an object")
    try:
        concept_id = raw["concept_id"]
        preferred_label = raw["preferred_label"]
    except KeyError as exc:
        raise MalformedDocument(
            f"concepts[{index}] is missing required field {exc.args[0]!r}") from None
    raw_terms = raw.get("terms", [])
    if not isinstance(raw_terms, list):
        raise MalformedDocument(f"concepts[{index}].terms must be an array")
    terms = set()
    for t_index, raw_term in enumerate(raw_terms):
        if isinstance(raw_term, str):
            terms.add(Term(raw_term, "synonym"))
            continue
        if not isinstance(raw_term, dict) or "surface" not in raw_term:
            raise MalformedDocument(
                f"concepts[{index}].terms[{t_index}] needs a 'surface' field")
        terms.add(Term(raw_term["surface"], raw_term.get("kind", "synonym")))
    # The preferred label is a term by definition; tolerate documents that
    # list only the synonyms.
    if normalize_phrase(preferred_label) not in {normalize_phrase(t.surface) for t in terms}:
        terms.add(Term(preferred_label, "preferred"))
    return Concept(
        concept_id=concept_id,
        preferred_label=preferred_label,
        terms=frozenset(terms),
        linked_category_ids=frozenset(raw.get("linked_category_ids", [])),
        related_concept_ids=frozenset(raw.get("related_concept_ids", [])),
    )


def load_terminology(source: Union[str, bytes, IO[str]]) -> TerminologyGraph:
    """Parse and validate a terminology document (JSON, arrays `categories`/`concepts`).

    The whole document is rejected on any violation; there is no partial load.
    """
    if hasattr(source, "read"):
        source = source.read()  # type: ignore[union-attr]
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        document = json.loads(source)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"not valid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise MalformedDocument("top level must be an object")
    raw_categories = document.get("categories", [])
    raw_concepts = document.get("concepts", [])
    if not isinstance(raw_categories, list) or not isinstance(raw_concepts, list):
        raise MalformedDocument("'categories' and 'concepts' must be arrays")

    categories = [_parse_category(raw, i) for i, raw in enumerate(raw_categories)]
    concepts = [_parse_concept(raw, i) for i, raw in enumerate(raw_concepts)]

    # Derive levels that the document left out (level 0 marks "absent").
    by_id = {c.category_id: c for c in categories}
    derived = []
    for node in categories:
        if node.level == 0:
            depth = _resolved_level(node, by_id)
            derived.append(CategoryNode(node.category_id, node.label,
                                        depth if depth is not None else 0,
                                        node.parent_id, node.omics_field))
        else:
            derived.append(node)

    return build_graph(derived, concepts)


def serialize_terminology(graph: TerminologyGraph) -> str:
    """Stable JSON rendering; load(serialize(g)) == g."""
    categories = []
    for node in sorted(graph.categories.values(), key=lambda n: n.category_id):
        categories.append({
            "category_id": node.category_id,
            "label": node.label,
            "level": node.level,
            "parent_id": node.parent_id,
            "omics_field": node.omics_field,
        })
    concepts = []
    for concept in sorted(graph.concepts.values(), key=lambda c: c.concept_id):
        concepts.append({
            "concept_id": concept.concept_id,
            "preferred_label": concept.preferred_label,
            "terms": [{"surface": t.surface, "kind": t.kind}
                      for t in sorted(concept.terms, key=lambda t: (t.surface, t.kind))],
            "linked_category_ids": sorted(concept.linked_category_ids),
            "related_concept_ids": sorted(concept.related_concept_ids),
        })
    return json.dumps({"categories": categories, "concepts": concepts},
                      ensure_ascii=False, indent=2)


def resolve_spans_tokens(tokens: list[str], graph: TerminologyGraph) -> list[ConceptMatch]:
    """Greedy longest-match of token n-grams against the lexicon.

    Left-to-right; at equal start the longer span wins; matched tokens are
    consumed so spans never overlap.
    """
    matches: list[ConceptMatch] = []
    lexicon = graph.term_lexicon
    i = 0
    total = len(tokens)
    while i < total:
        found = False
        for n in range(min(MAX_MATCH_NGRAM, total - i), 0, -1):
            surface = " ".join(tokens[i:i + n])
            ids = lexicon.get(surface)
            if ids:
                matches.append(ConceptMatch(span=(i, i + n), concept_ids=ids,
                                            matched_surface=surface))
                i += n
                found = True
                break
        if not found:
            i += 1
    return matches


def resolve_spans(text: str, graph: TerminologyGraph) -> list[ConceptMatch]:
    return resolve_spans_tokens(normalize_tokens(text), graph)


def descendants(category_id: str, graph: TerminologyGraph) -> set[str]:
    """Reflexive-transitive closure of the child relation."""
    if category_id not in graph.categories:
        raise UnknownCategory(f"unknown category {category_id!r}")
    closure = {category_id}
    frontier = [category_id]
    while frontier:
        current = frontier.pop()
        for child in graph.children.get(current, ()):
            if child not in closure:
                closure.add(child)
                frontier.append(child)
    return closure
