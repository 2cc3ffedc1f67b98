"""Administrative command line.

Everything except `serve` embeds the engine in-process, so commands are
deterministic and need no running server. Exit codes: 0 success, 1
operational error, 2 usage error. Diagnostics go to stderr, data to stdout.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .engine import Engine, wire_json
from .errors import ToolseekError
from .identifiers import validate_doi
from .linkcheck import StubMapTransport
from .query import FilterSet
from .terminology import (InvariantViolation, MalformedDocument,
                          load_terminology)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _add_engine_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", default="./toolseek-store",
                        help="document store directory")
    parser.add_argument("--terminology", required=True,
                        help="terminology document path")


def _open_engine(args, transport=None) -> Engine:
    return Engine.open(args.store, args.terminology,
                       linkcheck_transport=transport)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toolseek")
    commands = parser.add_subparsers(dest="command", required=True)

    ingest = commands.add_parser("ingest", help="bulk-load tool records")
    ingest.add_argument("file", help="line-delimited JSON records")
    ingest.add_argument("--lenient", action="store_true",
                        help="warn on unknown fields instead of rejecting")
    _add_engine_options(ingest)

    index = commands.add_parser("index", help="index maintenance")
    index_commands = index.add_subparsers(dest="index_command", required=True)
    index_build = index_commands.add_parser("build", help="rebuild the snapshot")
    _add_engine_options(index_build)

    search = commands.add_parser("search", help="one-shot search")
    search.add_argument("query")
    search.add_argument("--cat", default=None, help="category filter")
    search.add_argument("--os", action="append", default=[], dest="os_filters")
    search.add_argument("--lang", action="append", default=[])
    search.add_argument("--iface", action="append", default=[])
    search.add_argument("--tech", action="append", default=[])
    search.add_argument("--page", type=int, default=1)
    search.add_argument("--per-page", type=int, default=20)
    search.add_argument("--include-obsolete", action="store_true")
    search.add_argument("--json", action="store_true",
                        help="print the service response body")
    _add_engine_options(search)

    linkcheck = commands.add_parser("linkcheck", help="link health sweeps")
    linkcheck_commands = linkcheck.add_subparsers(dest="linkcheck_command",
                                                  required=True)
    linkcheck_run = linkcheck_commands.add_parser("run", help="run one sweep")
    linkcheck_run.add_argument("--stub", default=None,
                               help="JSON file mapping URL to status for offline runs")
    _add_engine_options(linkcheck_run)

    serve = commands.add_parser("serve", help="start the REST service")
    serve.add_argument("--config", required=True, help="service config JSON")

    doi = commands.add_parser("doi", help="identifier utilities")
    doi_commands = doi.add_subparsers(dest="doi_command", required=True)
    doi_validate = doi_commands.add_parser("validate")
    doi_validate.add_argument("value")

    terminology = commands.add_parser("terminology", help="terminology utilities")
    terminology_commands = terminology.add_subparsers(dest="terminology_command",
                                                      required=True)
    terminology_check = terminology_commands.add_parser("check")
    terminology_check.add_argument("file")

    return parser


def _cmd_ingest(args) -> int:
    engine = _open_engine(args)
    with open(args.file, encoding="utf-8") as handle:
        report = engine.registry.ingest_records(handle, lenient=args.lenient)
    print(wire_json(report.to_dict()))
    for line, message in report.warnings:
        print(f"warning: line {line}: {message}", file=sys.stderr)
    return EXIT_OK


def _cmd_index_build(args) -> int:
    engine = _open_engine(args)
    print(engine.reindex())
    return EXIT_OK


def _cmd_search(args) -> int:
    engine = _open_engine(args)
    filters = FilterSet(
        category=args.cat,
        operating_systems=frozenset(args.os_filters),
        programming_languages=frozenset(args.lang),
        interfaces=frozenset(args.iface),
        technologies=frozenset(args.tech),
    )
    response = engine.search(args.query, filters,
                             include_obsolete=args.include_obsolete,
                             page=args.page, per_page=args.per_page)
    if args.json:
        print(wire_json(Engine.search_body(response)))
        return EXIT_OK
    print(f"{'ACCESSION':<13} {'SCORE':<8} NAME")
    for hit in response.page:
        print(f"{hit.accession:<13} {hit.scored.final_score:<8.4f} {hit.name}")
    print(f"total: {response.total_hits}  generation: {response.generation}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_linkcheck_run(args) -> int:
    transport = None
    if args.stub:
        url_map = json.loads(Path(args.stub).read_text("utf-8"))
        transport = StubMapTransport(url_map)
    engine = _open_engine(args, transport=transport)
    report = engine.sweep()
    print(wire_json(report.to_dict()))
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ApiConfig, create_app, engine_from_config
    config = ApiConfig.from_file(args.config)
    engine = engine_from_config(config)
    app = create_app(engine, config)
    uvicorn.run(app, host=config.listen, port=config.port, log_level="info")
    return EXIT_OK


def _cmd_doi_validate(args) -> int:
    print("true" if validate_doi(args.value) else "false")
    return EXIT_OK


def _cmd_terminology_check(args) -> int:
    text = Path(args.file).read_text("utf-8")
    try:
        graph = load_terminology(text)
    except MalformedDocument as exc:
        print(f"malformed: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except InvariantViolation as exc:
        for violation in exc.violations or []:
            print(f"{violation.rule}\t{violation.offender}\t{violation.detail}")
        if not exc.violations:
            print(f"{exc.code}\t{exc.offender}\t{exc}")
        return EXIT_ERROR
    print(f"ok: {len(graph.categories)} categories, {len(graph.concepts)} concepts")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "index":
            return _cmd_index_build(args)
        if args.command == "search":
            return _cmd_search(args)
        if args.command == "linkcheck":
            return _cmd_linkcheck_run(args)
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "doi":
            return _cmd_doi_validate(args)
        if args.command == "terminology":
            return _cmd_terminology_check(args)
    except ToolseekError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
