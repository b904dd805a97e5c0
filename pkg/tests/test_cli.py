import json

import pytest

from examgraph.cli import main

from helpers import ROOTS_A, blueprint_dict, corpus_documents


@pytest.fixture
def workspace(tmp_path):
    """Corpus files on disk plus a data dir, ready for CLI runs."""
    documents, lexicon, _ = corpus_documents("envsci", ROOTS_A, chapters=3)
    doc_paths = []
    for document in documents:
        path = tmp_path / f"{document.doc_id}.txt"
        path.write_text(document.body, encoding="utf-8")
        doc_paths.append(path)
    lexicon_path = tmp_path / "hypernyms.json"
    lexicon_path.write_text(json.dumps(lexicon))
    blueprint_path = tmp_path / "blueprint.json"
    blueprint_path.write_text(json.dumps(blueprint_dict()))
    data_dir = tmp_path / "kgdata"
    return {
        "tmp": tmp_path,
        "docs": doc_paths,
        "documents": documents,
        "lexicon": lexicon_path,
        "blueprint": blueprint_path,
        "data_dir": str(data_dir),
    }


def ingest_all(workspace):
    for i, (path, document) in enumerate(zip(workspace["docs"],
                                             workspace["documents"])):
        argv = ["ingest", "--subject", "envsci", "--doc", str(path),
                "--doc-id", document.doc_id,
                "--chapter", document.chapter_path[0],
                "--lexicon", str(workspace["lexicon"]),
                "--data-dir", workspace["data_dir"]]
        if i > 0:
            argv.append("--append")
        assert main(argv) == 0


def test_ingest_emits_report_json(workspace, capsys):
    argv = ["ingest", "--subject", "envsci", "--doc", str(workspace["docs"][0]),
            "--chapter", "Ch 1", "--lexicon", str(workspace["lexicon"]),
            "--data-dir", workspace["data_dir"]]
    assert main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["subject"] == "envsci"
    assert report["triples_added"] > 0
    assert report["failures"] == []


def test_ingest_with_mock_llm_extractor(workspace, capsys):
    argv = ["ingest", "--subject", "envsci", "--doc", str(workspace["docs"][0]),
            "--chapter", "Ch 1", "--extractor", "mock-llm",
            "--data-dir", workspace["data_dir"]]
    assert main(argv) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["triples_added"] > 0
    assert report["failures"] == []


def test_reingest_without_append_fails_cleanly(workspace, capsys):
    ingest_all(workspace)
    argv = ["ingest", "--subject", "envsci", "--doc", str(workspace["docs"][0]),
            "--chapter", "Ch 1", "--data-dir", workspace["data_dir"]]
    assert main(argv) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error_code"] == "subject_collision"


def test_graph_stats_and_export(workspace, capsys, tmp_path):
    ingest_all(workspace)
    capsys.readouterr()  # discard ingest reports
    assert main(["graph", "stats", "--subject", "envsci",
                 "--data-dir", workspace["data_dir"]]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["nodes"]["concept"] == 12

    out = tmp_path / "snapshot.jsonl"
    assert main(["graph", "export", "--subject", "envsci",
                 "--out", str(out), "--data-dir", workspace["data_dir"]]) == 0
    first = json.loads(out.read_text().splitlines()[0])
    assert first["format"] == "kaqg-kg"


def test_rank_emits_sorted_scores(workspace, capsys):
    ingest_all(workspace)
    capsys.readouterr()  # discard ingest reports
    assert main(["rank", "--subject", "envsci", "--chapter", "Ch 1",
                 "--data-dir", workspace["data_dir"]]) == 0
    ranking = json.loads(capsys.readouterr().out)
    assert ranking, "chapter should have ranked concepts"
    scores = [entry["score"] for entry in ranking]
    assert scores == sorted(scores, reverse=True)
    assert all(set(entry) == {"node", "label", "score"} for entry in ranking)


def test_rank_facts_of_concept(workspace, capsys):
    ingest_all(workspace)
    capsys.readouterr()
    assert main(["rank", "--subject", "envsci", "--facts-of", "borlore",
                 "--top", "3", "--data-dir", workspace["data_dir"]]) == 0
    ranking = json.loads(capsys.readouterr().out)
    assert 1 <= len(ranking) <= 3
    assert all(entry["label"].startswith("bor") for entry in ranking)


def test_graph_export_to_stdout(workspace, capsysbinary):
    ingest_all(workspace)
    capsysbinary.readouterr()
    assert main(["graph", "export", "--subject", "envsci",
                 "--data-dir", workspace["data_dir"]]) == 0
    out = capsysbinary.readouterr().out
    header = json.loads(out.splitlines()[0])
    assert header["subject"] == "envsci"


def test_blueprint_validate(workspace, capsys):
    assert main(["blueprint", "validate",
                 "--blueprint", str(workspace["blueprint"])]) == 0
    result = json.loads(capsys.readouterr().out)
    assert result["valid"] is True
    assert result["total"] == 30
    assert sum(result["ratios"]) == pytest.approx(1.0)

    bad = workspace["tmp"] / "bad.json"
    data = blueprint_dict()
    data["sections"][0]["count"] = 5  # tiers sum to 10
    bad.write_text(json.dumps(data))
    assert main(["blueprint", "validate", "--blueprint", str(bad)]) == 1
    assert "error_code" in json.loads(capsys.readouterr().err)


def test_generate_deterministic_files(workspace, tmp_path):
    ingest_all(workspace)
    outs = []
    for name in ("exam1.json", "exam2.json"):
        out = tmp_path / name
        assert main(["generate", "--blueprint", str(workspace["blueprint"]),
                     "--seed", "42", "--mock", "--out", str(out),
                     "--data-dir", workspace["data_dir"]]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    exam = json.loads(outs[0])
    assert exam["item_count"] == 30
    assert exam["unfilled"] == []


def test_generate_partial_exam_exits_nonzero(workspace, capsys, tmp_path):
    ingest_all(workspace)
    blueprint = blueprint_dict()
    blueprint["sections"].append(
        {"chapter": "Ch 99", "count": 2, "tiers": {"basic": 2}})
    path = tmp_path / "over.json"
    path.write_text(json.dumps(blueprint))
    out = tmp_path / "exam.json"
    assert main(["generate", "--blueprint", str(path), "--seed", "1",
                 "--out", str(out), "--data-dir", workspace["data_dir"]]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error_code"] == "insufficient_material"
    exam = json.loads(out.read_text())
    assert exam["item_count"] == 30
    assert exam["unfilled"][0]["chapter"] == "Ch 99"


def test_evaluate_item(workspace, capsys, tmp_path):
    item = {"stem": "Define the borite process in one word.",
            "options": ["alpha", "beta", "gamma", "delta"],
            "answer_index": 1, "tier": "basic"}
    path = tmp_path / "item.json"
    path.write_text(json.dumps(item))
    assert main(["evaluate-item", "--item", str(path)]) == 0
    result = json.loads(capsys.readouterr().out)
    assert set(result) == {"difficulty", "target", "epsilon", "passed", "breakdown"}
    assert result["target"] == 9.0
    assert len(result["breakdown"]) == 7

    assert main(["evaluate-item", "--item", str(path), "--target", "21"]) == 0
    strict = json.loads(capsys.readouterr().out)
    assert strict["passed"] is False


def test_analyze_csv(workspace, capsys, tmp_path):
    rows = ["participant,q1,q2,q3"]
    for i in range(8):
        rows.append(f"p{i},{i % 2},{(i // 2) % 2},1")
    csv_path = tmp_path / "responses.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    groups_path = tmp_path / "groups.json"
    groups_path.write_text(json.dumps(
        {f"p{i}": ("a" if i < 4 else "b") for i in range(8)}))
    assert main(["analyze", "--responses", str(csv_path),
                 "--groups", str(groups_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["participants"] == 8
    assert report["item_stats"][2]["p_value"] == 1.0
    assert set(report["groups"]) == {"a", "b"}
    assert "anova" in report


def test_config_file_supplies_defaults_flags_win(workspace, capsys, tmp_path):
    ingest_all(workspace)
    capsys.readouterr()
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"data_dir": workspace["data_dir"]}))
    # data dir comes from the config file
    assert main(["graph", "stats", "--subject", "envsci",
                 "--config", str(config)]) == 0
    assert json.loads(capsys.readouterr().out)["subject"] == "envsci"
    # an explicit flag overrides the config value
    assert main(["graph", "stats", "--subject", "envsci",
                 "--config", str(config),
                 "--data-dir", str(tmp_path / "elsewhere")]) == 1
    assert json.loads(capsys.readouterr().err)["error_code"] == "unknown_subject"


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["rank", "--subject", "x", "--no-such-flag"])
    assert exc_info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc_info:
        main(["frobnicate"])
    assert exc_info.value.code == 2


def test_missing_snapshot_is_domain_error(workspace, capsys):
    assert main(["graph", "stats", "--subject", "nothing",
                 "--data-dir", workspace["data_dir"]]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["error_code"] == "unknown_subject"


def test_agents_run_smoke(workspace, capsys):
    ingest_all(workspace)
    capsys.readouterr()  # discard ingest reports
    assert main(["agents", "run", "--duration", "0.2", "--tcp", "127.0.0.1:0",
                 "--lexicon", str(workspace["lexicon"]),
                 "--data-dir", workspace["data_dir"]]) == 0
    status = json.loads(capsys.readouterr().out)
    assert status["status"] == "running"
    assert set(status["agents"]) == {"file_extraction", "kg_management",
                                     "question_generation", "llm",
                                     "question_evaluation"}
    assert status["subjects"] == ["envsci"]
    assert status["tcp"]["port"] > 0
