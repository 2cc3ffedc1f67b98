"""Application wiring: store + terminology + registry + community + index.

The same engine object backs the REST service and the one-shot CLI commands,
so both produce identical response bodies for identical queries.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .community import CommunityService
from .errors import ToolseekError
from .identifiers import MockMintingClient
from .indexer import IndexManager, IndexSnapshot
from .linkcheck import LinkCheckPolicy, SweepReport, run_sweep
from .query import FilterSet, compile_plan, parse_query
from .ranking import DEFAULT_WEIGHTS, RankWeights
from .registry import RegistryService, ToolCard
from .search import SearchResponse, execute_search, related_tools
from .store import DocumentStore, FileDocumentStore
from .terminology import TerminologyGraph, load_terminology


class NoSnapshot(ToolseekError):
    code = "no_snapshot"


def wire_json(body) -> str:
    """The one JSON rendering used on the wire; stable field ordering."""
    return json.dumps(body, ensure_ascii=False, separators=(",", ":"))


class Engine:
    def __init__(self, store: DocumentStore, graph: TerminologyGraph, *,
                 weights: RankWeights = DEFAULT_WEIGHTS,
                 linkcheck_policy: Optional[LinkCheckPolicy] = None,
                 linkcheck_transport=None,
                 clock=None):
        self.store = store
        self.graph = graph
        self.weights = weights
        self.minting_client = MockMintingClient()
        registry_kwargs = {"minting_client": self.minting_client}
        if clock is not None:
            registry_kwargs["clock"] = clock
        self.registry = RegistryService(store, graph, **registry_kwargs)
        self.community = CommunityService(store, self.registry)
        self.indexes = IndexManager(self.registry, graph,
                                    ratings=self.community.rating_summary)
        self.registry.subscribe(self.indexes.on_event)
        self.linkcheck_policy = linkcheck_policy or LinkCheckPolicy()
        self.linkcheck_transport = linkcheck_transport

    @classmethod
    def open(cls, store_path: str | Path, terminology_path: str | Path,
             **kwargs) -> "Engine":
        graph = load_terminology(Path(terminology_path).read_text("utf-8"))
        return cls(FileDocumentStore(store_path), graph, **kwargs)

    # -- search ------------------------------------------------------------

    def snapshot(self) -> IndexSnapshot:
        snapshot = self.indexes.snapshot
        if snapshot is None:
            raise NoSnapshot("no index snapshot has been published yet")
        return snapshot

    def search(self, q: str, filters: Optional[FilterSet] = None, *,
               include_obsolete: bool = False, page: int = 1,
               per_page: int = 20) -> SearchResponse:
        snapshot = self.snapshot()
        ast, mode = parse_query(q or "", tool_names=snapshot.name_to_doc.keys())
        plan = compile_plan(ast, mode, filters, self.graph,
                            include_obsolete=include_obsolete)
        return execute_search(plan, snapshot, self.weights,
                              page=page, per_page=per_page)

    def related(self, accession: str, k: int = 5):
        return related_tools(accession, k, self.snapshot(), self.weights)

    def reindex(self) -> int:
        return self.indexes.rebuild().generation

    def sweep(self) -> SweepReport:
        return run_sweep(self.registry, self.linkcheck_policy,
                         self.linkcheck_transport)

    # -- wire bodies ---------------------------------------------------------

    @staticmethod
    def search_body(response: SearchResponse) -> dict:
        results = []
        for hit in response.page:
            results.append({
                "accession": hit.accession,
                "name": hit.name,
                "summary": hit.summary,
                "score": hit.scored.final_score,
                "signals": {name: hit.scored.signals[name]
                            for name in ("text_relevance", "category_match",
                                         "quality", "community")},
                "categories": list(hit.categories),
            })
        facets: dict[str, dict[str, int]] = {}
        for (dimension, value), count in sorted(response.facets.items()):
            facets.setdefault(dimension, {})[value] = count
        return {
            "total": response.total_hits,
            "generation": response.generation,
            "results": results,
            "facets": facets,
        }

    def tool_body(self, card: ToolCard) -> dict:
        mean, count = self.community.aggregate_rating(card.accession)
        body = card.to_dict()
        body["rating"] = {"mean": mean, "count": count}
        body["reviews"] = [r.to_dict() for r in self.community.reviews_for(card.accession)]
        body["comments"] = self.community.comments_for(card.accession)
        return body

    def categories_body(self) -> list[dict]:
        nodes = []
        for node in sorted(self.graph.categories.values(),
                           key=lambda n: n.category_id):
            nodes.append({
                "category_id": node.category_id,
                "label": node.label,
                "level": node.level,
                "parent_id": node.parent_id,
                "omics_field": node.omics_field,
                "children": list(self.graph.children.get(node.category_id, ())),
            })
        return nodes

    @staticmethod
    def related_body(hits) -> list[dict]:
        return [{
            "accession": hit.accession,
            "name": hit.name,
            "summary": hit.summary,
            "categories": list(hit.categories),
            "quality": hit.scored.signals["quality"],
        } for hit in hits]
