import json
from pathlib import Path

import pytest

from toolseek.cli import main

DATA = Path(__file__).parent / "data"


@pytest.fixture
def seeded_store(tmp_path):
    store = tmp_path / "store"
    code = main(["ingest", str(DATA / "f1_tools.jsonl"),
                 "--store", str(store),
                 "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    return store


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_ingest_prints_report(tmp_path, capsys):
    code, out, _err = run_cli(capsys, [
        "ingest", str(DATA / "f1_tools.jsonl"),
        "--store", str(tmp_path / "store"),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    report = json.loads(out)
    assert report["accepted"] == 4
    assert report["rejected"] == []


def test_ingest_missing_file_exits_one(tmp_path, capsys):
    code, out, err = run_cli(capsys, [
        "ingest", str(tmp_path / "missing.jsonl"),
        "--store", str(tmp_path / "store"),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 1
    assert out == ""
    assert err.strip()


def test_index_build_prints_generation(seeded_store, capsys):
    code, out, _err = run_cli(capsys, [
        "index", "build", "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    assert out.strip().isdigit()


def test_search_table_lists_hits(seeded_store, capsys):
    code, out, _err = run_cli(capsys, [
        "search", "cat:HTS.WGS", "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    assert "SAMtools" in out
    assert "qcheck" in out


def test_search_json_is_parseable(seeded_store, capsys):
    code, out, _err = run_cli(capsys, [
        "search", "QC", "--json", "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    body = json.loads(out)
    assert body["results"][0]["accession"] == "TOOL_000002"
    assert set(body) == {"total", "generation", "results", "facets"}


def test_search_filters(seeded_store, capsys):
    code, out, _err = run_cli(capsys, [
        "search", "cat:HTS.WGS", "--os", "Windows", "--json",
        "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    body = json.loads(out)
    assert [r["accession"] for r in body["results"]] == ["TOOL_000002"]


def test_search_bad_query_exits_one(seeded_store, capsys):
    code, _out, err = run_cli(capsys, [
        "search", "alignment AND", "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 1
    assert "query_syntax" in err


def test_doi_validate(capsys):
    code, out, _err = run_cli(capsys, [
        "doi", "validate", "10.5072/toolseek.TOOL_000001.1.9"])
    assert code == 0
    assert out.strip() == "true"
    code, out, _err = run_cli(capsys, ["doi", "validate", "doi:foo"])
    assert code == 0
    assert out.strip() == "false"


def test_terminology_check_ok(capsys):
    code, out, _err = run_cli(capsys, [
        "terminology", "check", str(DATA / "f1_terminology.json")])
    assert code == 0
    assert "7 categories" in out and "4 concepts" in out


def test_terminology_check_reports_violations(tmp_path, capsys):
    document = json.loads((DATA / "f1_terminology.json").read_text())
    document["categories"][2]["parent_id"] = "NOPE"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(document))
    code, out, _err = run_cli(capsys, ["terminology", "check", str(bad)])
    assert code == 1
    assert "dangling-parent" in out


def test_linkcheck_with_stub_map(seeded_store, tmp_path, capsys):
    lines = (DATA / "f1_tools.jsonl").read_text().splitlines()
    url_map = {json.loads(line)["homepage_url"]: 200 for line in lines}
    url_map["https://example.org/snpfindr"] = 404
    stub_file = tmp_path / "stub.json"
    stub_file.write_text(json.dumps(url_map))
    code, out, _err = run_cli(capsys, [
        "linkcheck", "run", "--stub", str(stub_file),
        "--store", str(seeded_store),
        "--terminology", str(DATA / "f1_terminology.json")])
    assert code == 0
    report = json.loads(out)
    assert report["probed"] == 4
    assert report["alive"] == 3
    assert report["broken"] == 1


def test_unknown_verb_exits_two(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["frobnicate"])
    assert excinfo.value.code == 2


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["doi", "validate", "x", "--bogus"])
    assert excinfo.value.code == 2
