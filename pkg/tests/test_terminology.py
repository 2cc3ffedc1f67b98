import json
import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from toolseek.terminology import (CategoryNode, Concept, InvariantViolation,
                                  MalformedDocument, Term, UnknownCategory,
                                  build_graph, descendants, load_terminology,
                                  resolve_spans, serialize_terminology,
                                  validate_graph, validate_records)
from toolseek.textnorm import normalize_phrase, normalize_tokens

from corpusgen import make_category_tree, make_terminology
from oracles import oracle_concept_matches, oracle_descendants


# -- loading -------------------------------------------------------------------

def test_f1_document_counts(f1_graph):
    assert len(f1_graph.concepts) == 4
    assert len(f1_graph.categories) == 7


def test_empty_document_loads():
    graph = load_terminology('{"categories": [], "concepts": []}')
    assert graph.concepts == {} and graph.categories == {}
    assert validate_graph(graph) == []


def test_level3_parent_rejected(f1_terminology_text):
    document = json.loads(f1_terminology_text)
    for node in document["categories"]:
        if node["category_id"] == "HTS.WGS.QC":
            node["parent_id"] = "HTS.RNA.DE"
            node["level"] = 4
    with pytest.raises(InvariantViolation) as excinfo:
        load_terminology(json.dumps(document))
    assert excinfo.value.offender == "HTS.WGS.QC"


def test_malformed_json_rejected():
    with pytest.raises(MalformedDocument):
        load_terminology("{not json")
    with pytest.raises(MalformedDocument):
        load_terminology('["wrong top level"]')
    with pytest.raises(MalformedDocument):
        load_terminology('{"categories": [{"label": "missing id"}], "concepts": []}')


def test_no_partial_load(f1_terminology_text):
    document = json.loads(f1_terminology_text)
    document["categories"].append(
        {"category_id": "ORPHAN", "label": "orphan", "level": 2, "parent_id": "NOPE"})
    with pytest.raises(InvariantViolation):
        load_terminology(json.dumps(document))


def test_cycle_rejected():
    document = {
        "categories": [
            {"category_id": "A", "label": "a", "parent_id": "B"},
            {"category_id": "B", "label": "b", "parent_id": "A"},
        ],
        "concepts": [],
    }
    with pytest.raises(InvariantViolation) as excinfo:
        load_terminology(json.dumps(document))
    assert any(v.rule == "category-cycle" for v in excinfo.value.violations)


def test_preferred_label_auto_inserted():
    graph = load_terminology(json.dumps({
        "categories": [],
        "concepts": [{"concept_id": "c1", "preferred_label": "Alpha Beta",
                      "terms": [{"surface": "ab", "kind": "abbreviation"}]}],
    }))
    surfaces = {normalize_phrase(t.surface) for t in graph.concepts["c1"].terms}
    assert "alpha beta" in surfaces


# -- validation ----------------------------------------------------------------

def test_validate_f1_clean(f1_graph):
    assert validate_graph(f1_graph) == []


def test_empty_terms_violation():
    violations = validate_records([], [
        Concept(concept_id="c1", preferred_label="x", terms=frozenset())])
    assert [v.rule for v in violations] == ["empty-terms"]


def test_duplicate_category_id_violation():
    violations = validate_records(
        [CategoryNode("HTS.WGS", "a", 1, None), CategoryNode("HTS.WGS", "b", 1, None)],
        [])
    assert [v.rule for v in violations] == ["duplicate-category-id"]


def test_dangling_linked_category_violation():
    violations = validate_records([], [
        Concept(concept_id="c1", preferred_label="x",
                terms=frozenset({Term("x", "preferred")}),
                linked_category_ids=frozenset({"NOPE"}))])
    assert [v.rule for v in violations] == ["dangling-linked-category"]


# -- span resolution -------------------------------------------------------------

def test_resolve_spans_f1_examples(f1_graph):
    matches = resolve_spans("variant calling for QC", f1_graph)
    assert [(m.span, sorted(m.concept_ids)) for m in matches] == [
        ((0, 2), ["c-germline-snp"]),
        ((3, 4), ["c-read-qc"]),
    ]

    assert resolve_spans("banana smoothie", f1_graph) == []

    matches = resolve_spans("read quality control", f1_graph)
    assert len(matches) == 1
    assert matches[0].span == (0, 3)
    # category label and concept share the surface; both ids are returned
    assert matches[0].concept_ids == frozenset({"c-read-qc", "category:HTS.WGS.QC"})


def test_resolve_spans_case_insensitive(f1_graph):
    matches = resolve_spans("VARIANT Calling", f1_graph)
    assert len(matches) == 1 and matches[0].span == (0, 2)


def test_category_labels_are_queryable(f1_graph):
    matches = resolve_spans("rna seq analysis tools", f1_graph)
    assert matches and matches[0].concept_ids == frozenset({"category:HTS.RNA"})


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_resolve_spans_matches_exhaustive_oracle(f1_graph, data):
    surface_pool = sorted(f1_graph.term_lexicon) + ["banana", "tools", "for", "data"]
    words = data.draw(st.lists(st.sampled_from(surface_pool), max_size=6))
    text = " ".join(words)
    tokens = normalize_tokens(text)
    expected = oracle_concept_matches(tokens, f1_graph.term_lexicon)
    actual = resolve_spans(text, f1_graph)
    assert [(m.span, m.matched_surface) for m in actual] == expected


@settings(max_examples=60, deadline=None)
@given(st.text(max_size=120))
def test_resolve_spans_invariants(f1_graph, text):
    tokens = normalize_tokens(text)
    matches = resolve_spans(text, f1_graph)
    previous_end = 0
    for match in matches:
        start, end = match.span
        assert previous_end <= start < end <= len(tokens)
        previous_end = end
        assert " ".join(tokens[start:end]) == match.matched_surface


# -- descendants ------------------------------------------------------------------

def test_descendants_f1(f1_graph):
    assert descendants("HTS.WGS", f1_graph) == {"HTS.WGS", "HTS.WGS.QC", "HTS.WGS.SNP"}
    assert descendants("HTS.WGS.QC", f1_graph) == {"HTS.WGS.QC"}
    assert descendants("HTS", f1_graph) == set(f1_graph.categories)
    assert len(descendants("HTS", f1_graph)) == 7


def test_descendants_unknown(f1_graph):
    with pytest.raises(UnknownCategory):
        descendants("HTS.DNA", f1_graph)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=400), st.integers())
def test_descendants_matches_bfs_oracle(n_nodes, seed):
    rng = random.Random(seed)
    categories = make_category_tree(rng, n_nodes)
    graph = build_graph(categories, [])
    sample = rng.sample(categories, min(20, len(categories)))
    for node in sample:
        assert descendants(node.category_id, graph) == \
            oracle_descendants(node.category_id, categories)


def test_descendants_oracle_at_two_thousand_nodes():
    rng = random.Random(7)
    categories = make_category_tree(rng, 2000)
    graph = build_graph(categories, [])
    for node in rng.sample(categories, 40):
        assert descendants(node.category_id, graph) == \
            oracle_descendants(node.category_id, categories)


# -- round trip and scale ----------------------------------------------------------

def test_serialize_round_trip(f1_graph, f1_terminology_text):
    once = load_terminology(f1_terminology_text)
    again = load_terminology(serialize_terminology(once))
    assert once == again


def test_generated_round_trip():
    graph = make_terminology(random.Random(3), n_categories=60, n_concepts=40)
    assert load_terminology(serialize_terminology(graph)) == graph


def test_scale_ceiling_loads_quickly():
    # 1,151 concepts / 16,000+ terms must load and validate in under 2 seconds
    graph = make_terminology(random.Random(11), n_categories=120,
                             n_concepts=1151, terms_per_concept=14)
    n_terms = sum(len(c.terms) for c in graph.concepts.values())
    assert n_terms >= 14000
    document = serialize_terminology(graph)
    started = time.perf_counter()
    loaded = load_terminology(document)
    assert validate_graph(loaded) == []
    elapsed = time.perf_counter() - started
    assert elapsed < 2.0, f"load+validate took {elapsed:.2f}s"
