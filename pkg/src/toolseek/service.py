"""REST API over the engine.

Role handling is a trivial header contract (X-User / X-Role) behind this one
module so a real identity layer can replace it. Every domain error code maps
to exactly one HTTP status (ERROR_STATUS); a test asserts the table is total.
Mutation responses carry the current index generation in an X-Generation
header so clients can poll search consistency (read-your-writes).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import Response

from .engine import Engine, wire_json
from .errors import ToolseekError
from .linkcheck import LinkCheckPolicy
from .query import FilterSet
from .ranking import RankWeights

EDITOR_ROLES = ("biocurator", "admin")

ERROR_STATUS = {
    "internal_error": 500,
    "malformed_document": 400,
    "terminology_invariant": 400,
    "unknown_category": 404,
    "missing_field": 400,
    "invalid_url": 400,
    "invalid_email": 400,
    "duplicate_name": 409,
    "unknown_tool": 404,
    "immutable_field": 400,
    "validation_failed": 400,
    "duplicate_version": 409,
    "stale_event": 409,
    "query_syntax": 400,
    "pure_negation": 400,
    "depth_exceeded": 400,
    "empty_plan": 400,
    "invalid_weights": 500,
    "page_out_of_range": 400,
    "bad_facet_value": 400,
    "accession_space_exhausted": 500,
    "minting_failed": 502,
    "invalid_version_label": 400,
    "unknown_user": 404,
    "rating_out_of_range": 400,
    "unknown_collection": 404,
    "empty_role_set": 400,
    "unknown_role": 400,
    "unknown_publication": 404,
    "payload_too_large": 413,
    "missing_header": 400,
    "no_snapshot": 503,
    "forbidden": 403,
}


class PayloadTooLarge(ToolseekError):
    code = "payload_too_large"


class MissingHeader(ToolseekError):
    code = "missing_header"


class Forbidden(ToolseekError):
    code = "forbidden"


@dataclass(frozen=True)
class ApiConfig:
    listen: str = "127.0.0.1"
    port: int = 8080
    store_path: str = "./toolseek-store"
    terminology_path: str = ""
    rank_weights: RankWeights = RankWeights()
    linkcheck: LinkCheckPolicy = field(default_factory=LinkCheckPolicy)
    per_page_default: int = 20
    per_page_max: int = 100
    payload_limit: int = 32 * 1024 * 1024
    user_agent: str = "toolseek/0.1"

    @classmethod
    def from_file(cls, path: str | Path) -> "ApiConfig":
        raw = json.loads(Path(path).read_text("utf-8"))
        weights = RankWeights.from_dict(raw.get("rank_weights", {}))
        linkcheck_raw = raw.get("linkcheck", {})
        policy = LinkCheckPolicy(
            timeout=linkcheck_raw.get("timeout", 10.0),
            retries=linkcheck_raw.get("retries", 2),
            backoff=tuple(linkcheck_raw.get("backoff", (1.0, 2.0))),
            max_redirects=linkcheck_raw.get("max_redirects", 5),
            parallelism=linkcheck_raw.get("parallelism", 8),
            per_host_spacing=linkcheck_raw.get("per_host_spacing", 0.5),
            obsolete_after_failures=linkcheck_raw.get("obsolete_after_failures", 3),
            obsolete_after_days=linkcheck_raw.get("obsolete_after_days", 7.0),
            user_agent=linkcheck_raw.get("user_agent",
                                         raw.get("user_agent", "toolseek/0.1")),
        )
        config = cls(
            listen=raw.get("listen", "127.0.0.1"),
            port=raw.get("port", 8080),
            store_path=raw.get("store_path", "./toolseek-store"),
            terminology_path=raw.get("terminology_path", ""),
            rank_weights=weights,
            linkcheck=policy,
            per_page_default=raw.get("per_page_default", 20),
            per_page_max=raw.get("per_page_max", 100),
            payload_limit=raw.get("payload_limit", 32 * 1024 * 1024),
            user_agent=raw.get("user_agent", "toolseek/0.1"),
        )
        if not Path(config.terminology_path).exists():
            raise FileNotFoundError(
                f"terminology document {config.terminology_path!r} does not exist")
        return config


def engine_from_config(config: ApiConfig, **kwargs) -> Engine:
    return Engine.open(config.store_path, config.terminology_path,
                       weights=config.rank_weights,
                       linkcheck_policy=config.linkcheck, **kwargs)


def _json_response(body, status_code: int = 200,
                   headers: Optional[dict] = None) -> Response:
    return Response(content=wire_json(body), status_code=status_code,
                    media_type="application/json", headers=headers)


def _error_body(exc: ToolseekError) -> dict:
    body = {"error": {"code": exc.code, "message": str(exc)}}
    if exc.field is not None:
        body["error"]["field"] = exc.field
    position = getattr(exc, "position", None)
    if position is not None:
        body["error"]["position"] = position
    return body


def _require_user(request: Request) -> str:
    user = request.headers.get("X-User")
    if not user:
        raise MissingHeader("X-User header is required")
    return user


def _require_role(request: Request, *allowed: str) -> str:
    role = request.headers.get("X-Role", "")
    if role not in allowed:
        raise Forbidden(f"requires one of roles: {', '.join(allowed)}")
    return role


def _is_editor(request: Request) -> bool:
    return request.headers.get("X-Role", "") in EDITOR_ROLES


def _parse_bool(value: Optional[str]) -> bool:
    return (value or "").lower() in ("1", "true", "yes")


def _parse_int(value: Optional[str], default: int, name: str) -> int:
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError:
        from .registry import ValidationFailed
        raise ValidationFailed(f"{name} must be an integer, got {value!r}",
                               field=name) from None


def create_app(engine: Engine, config: Optional[ApiConfig] = None) -> FastAPI:
    config = config or ApiConfig()
    app = FastAPI(title="toolseek", docs_url=None, redoc_url=None)
    # the browser frontend may be served from another origin
    from starlette.middleware.cors import CORSMiddleware
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"],
                       expose_headers=["X-Generation"])

    @app.exception_handler(ToolseekError)
    async def domain_error_handler(request: Request, exc: ToolseekError):
        status = ERROR_STATUS.get(exc.code, 500)
        return _json_response(_error_body(exc), status_code=status)

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        body = {"error": {"code": "validation_failed", "message": str(exc.errors())}}
        return _json_response(body, status_code=400)

    def generation_headers() -> dict:
        return {"X-Generation": str(engine.indexes.snapshot.generation)}

    # -- reads ------------------------------------------------------------

    @app.get("/api/v1/healthz")
    def healthz():
        return _json_response({"status": "ok",
                               "generation": engine.indexes.snapshot.generation})

    @app.get("/api/v1/search")
    def search(request: Request):
        params = request.query_params
        filters = FilterSet(
            category=params.get("cat") or None,
            operating_systems=frozenset(params.getlist("os")),
            programming_languages=frozenset(params.getlist("lang")),
            interfaces=frozenset(params.getlist("iface")),
            technologies=frozenset(params.getlist("tech")),
        )
        response = engine.search(
            params.get("q", ""),
            filters,
            include_obsolete=_parse_bool(params.get("include_obsolete")),
            page=_parse_int(params.get("page"), 1, "page"),
            per_page=_parse_int(params.get("per_page"),
                                config.per_page_default, "per_page"),
        )
        return _json_response(Engine.search_body(response))

    @app.get("/api/v1/tools/{accession}")
    def get_tool(accession: str, request: Request):
        card = engine.registry.get_tool(accession,
                                        include_draft=_is_editor(request))
        return _json_response(engine.tool_body(card))

    @app.get("/api/v1/tools/{accession}/related")
    def related(accession: str, request: Request):
        k = _parse_int(request.query_params.get("k"), 5, "k")
        hits = engine.related(accession, k)
        return _json_response({"related": Engine.related_body(hits)})

    @app.get("/api/v1/categories")
    def categories():
        return _json_response({"categories": engine.categories_body()})

    @app.get("/api/v1/categories/{category_id}")
    def category(category_id: str):
        from .terminology import UnknownCategory, descendants
        node = engine.graph.categories.get(category_id)
        if node is None:
            raise UnknownCategory(f"unknown category {category_id!r}")
        return _json_response({
            "category_id": node.category_id,
            "label": node.label,
            "level": node.level,
            "parent_id": node.parent_id,
            "omics_field": node.omics_field,
            "children": list(engine.graph.children.get(category_id, ())),
            "descendants": sorted(descendants(category_id, engine.graph)),
        })

    # -- mutations ----------------------------------------------------------

    @app.post("/api/v1/tools")
    async def submit_tool(request: Request):
        body = await request.json()
        card = engine.registry.submit_tool(
            body.get("name", ""), body.get("description", ""),
            body.get("homepage_url", ""), body.get("webmaster_email", ""))
        return _json_response(card.to_dict(), status_code=201,
                              headers=generation_headers())

    @app.patch("/api/v1/tools/{accession}")
    async def edit_tool(accession: str, request: Request):
        editor = _require_user(request)
        if not request.headers.get("X-Role"):
            raise MissingHeader("X-Role header is required")
        body = await request.json()
        if "field_path" not in body:
            from .registry import ValidationFailed
            raise ValidationFailed("body must carry field_path", field="field_path")
        card = engine.registry.apply_edit(accession, body["field_path"],
                                          body.get("value"), editor)
        return _json_response(card.to_dict(), headers=generation_headers())

    @app.post("/api/v1/tools/{accession}/reviews")
    async def add_review(accession: str, request: Request):
        user = _require_user(request)
        body = await request.json()
        review = engine.community.add_review(user, accession,
                                             body.get("rating"),
                                             body.get("text"))
        return _json_response(review.to_dict(), status_code=201,
                              headers=generation_headers())

    @app.post("/api/v1/tools/{accession}/comments")
    async def add_comment(accession: str, request: Request):
        user = _require_user(request)
        body = await request.json()
        comment = engine.community.add_comment(user, accession, body.get("text", ""))
        return _json_response(comment, status_code=201,
                              headers=generation_headers())

    @app.post("/api/v1/tools/{accession}/versions")
    async def upload_version(accession: str,
                             version_label: str = Form(...),
                             operating_system: str = Form(""),
                             architecture: str = Form(""),
                             linked_publication: Optional[int] = Form(None),
                             archive: UploadFile = File(...)):
        payload = await archive.read()
        if len(payload) > config.payload_limit:
            raise PayloadTooLarge(
                f"archive exceeds the {config.payload_limit}-byte limit")
        version = engine.registry.add_version(
            accession, version_label, operating_system, architecture,
            linked_publication, payload)
        return _json_response(version.to_dict(), status_code=201,
                              headers=generation_headers())

    @app.put("/api/v1/users/{user_id}/collections/{name}")
    async def manage_collection(user_id: str, name: str, request: Request):
        body = await request.json()
        collection = engine.community.manage_bookmark(
            user_id, body.get("accession", ""), name, body.get("action", "add"))
        return _json_response(collection.to_dict(), headers=generation_headers())

    # -- admin ---------------------------------------------------------------

    @app.post("/api/v1/admin/reindex")
    def reindex(request: Request):
        _require_role(request, "admin", "biocurator")
        generation = engine.reindex()
        return _json_response({"generation": generation},
                              headers={"X-Generation": str(generation)})

    @app.post("/api/v1/admin/linkcheck")
    def linkcheck(request: Request):
        _require_role(request, "admin")
        report = engine.sweep()
        return _json_response(report.to_dict(), headers=generation_headers())

    return app
