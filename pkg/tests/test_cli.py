import json

import pytest

from taxolink.cli import main

from conftest import write_eqf_csv, write_node_csv


def unit(axis, dim=4):
    vec = [0.0] * dim
    vec[axis] = 1.0
    return vec


def make_project(root):
    """A self-contained run directory: reference CSVs, replay vectors,
    annotations, documents, gold sets, and the TOML config."""
    write_node_csv(root / "occupations.csv", [
        ("o1", "software developer", "programmer\ncoder", "writes software"),
        ("o2", "baker", "", "bakes bread"),
        ("o3", "teacher", "tutor", "teaches pupils"),
    ])
    write_node_csv(root / "skills.csv", [
        ("s1", "java programming", "", ""),
        ("s2", "web development", "", ""),
        ("s3", "teamwork", "", ""),
    ])
    write_eqf_csv(root / "eqf.csv", [
        ("Bachelor degree", "IE", 6),
        ("Leaving certificate", "IE", 4),
        ("Doctorate", "IE", 8),
    ])

    replay = {
        # occupation nodes (S1 texts) double as title queries
        "software developer": unit(0),
        "baker": unit(1),
        "teacher": unit(2),
        # skill nodes; same keys serve the extracted mention surfaces
        "java programming": unit(0),
        "web development": unit(1),
        "teamwork": unit(2),
        # qualification nodes
        "Bachelor degree": unit(0),
        "Leaving certificate": unit(1),
        "Doctorate": unit(2),
        # occupation descriptions and alt labels (multi-field strategies)
        "writes software": unit(3),
        "bakes bread": unit(3),
        "teaches pupils": unit(3),
        "programmer": unit(3),
        "coder": unit(3),
        "tutor": unit(3),
        # full-text queries
        "We need a software developer": unit(0),
        "Bakery hiring now": unit(1),
        "Teach pupils maths": unit(2),
    }
    (root / "replay.json").write_text(json.dumps(replay), encoding="utf-8")

    docs = [
        {"id": "d1", "title": "software developer", "text": "We need a software developer"},
        {"id": "d2", "title": "baker", "text": "Bakery hiring now"},
        {"id": "d3", "title": "teacher", "text": "Teach pupils maths"},
    ]
    (root / "docs.jsonl").write_text(
        "\n".join(json.dumps(d) for d in docs) + "\n", encoding="utf-8")

    annotations = [
        {"id": "d1", "tokens": [["Needs", "java", "programming", "skills"]],
         "labels": [["O", "B-Skill", "I-Skill", "O"]],
         "entities": [{"kind": "Skill", "sentence": 0, "start": 1, "end": 3, "gold_id": "s1"}]},
        {"id": "d2", "tokens": [["Bakery", "needs", "teamwork"]],
         "labels": [["O", "O", "B-Skill"]],
         "entities": [{"kind": "Skill", "sentence": 0, "start": 2, "end": 3, "gold_id": "s3"}]},
        {"id": "d3", "tokens": [["web", "development", "required"]],
         "labels": [["B-Skill", "I-Skill", "O"]],
         "entities": [{"kind": "Skill", "sentence": 0, "start": 0, "end": 2, "gold_id": "s2"}]},
    ]
    (root / "annotations.jsonl").write_text(
        "\n".join(json.dumps(a) for a in annotations) + "\n", encoding="utf-8")

    gold_sl = [
        {"id": "d1", "text": "We need a software developer", "kind": "Occupation", "gold": ["o1"]},
        {"id": "d2", "text": "Bakery hiring now", "kind": "Occupation", "gold": ["o2"]},
        {"id": "d3", "text": "Teach pupils maths", "kind": "Occupation", "gold": ["o3"]},
    ]
    (root / "gold_sl.jsonl").write_text(
        "\n".join(json.dumps(g) for g in gold_sl) + "\n", encoding="utf-8")

    gold_el = [
        {"id": "d1", "text": "", "kind": "Skill", "gold": ["s1"],
         "gold_spans": [{"tokens": [1, 2], "label": "s1"}]},
        {"id": "d2", "text": "", "kind": "Skill", "gold": ["s3"],
         "gold_spans": [{"tokens": [2], "label": "s3"}]},
        {"id": "d3", "text": "", "kind": "Skill", "gold": ["s2"],
         "gold_spans": [{"tokens": [0, 1], "label": "s2"}]},
    ]
    (root / "gold_el.jsonl").write_text(
        "\n".join(json.dumps(g) for g in gold_el) + "\n", encoding="utf-8")

    (root / "config.toml").write_text(
        'version_tag = "fixture"\n'
        "[paths]\n"
        'occupations = "occupations.csv"\n'
        'skills = "skills.csv"\n'
        'eqf = "eqf.csv"\n'
        'cache_dir = "caches"\n'
        "[embedding]\n"
        'strategy = "s1"\n'
        "[provider]\n"
        'spec = "replay:replay.json"\n'
        "[labeler]\n"
        'spec = "gold:annotations.jsonl"\n'
        "[link]\n"
        "k = 3\n",
        encoding="utf-8",
    )
    return root / "config.toml"


@pytest.fixture
def project(tmp_path):
    return make_project(tmp_path)


def test_ingest_prints_counts(project, capsys):
    assert main(["ingest", "--config", str(project)]) == 0
    out = capsys.readouterr().out
    assert "occupations=3 skills=3 qualifications=3" in out


def test_ingest_missing_file_exit_2(project, capsys):
    (project.parent / "skills.csv").unlink()
    assert main(["ingest", "--config", str(project)]) == 2
    assert "skills.csv" in capsys.readouterr().err


def test_embed_builds_caches(project, capsys):
    assert main(["embed", "--config", str(project)]) == 0
    caches = sorted(p.name for p in (project.parent / "caches").iterdir())
    assert caches == ["occupation_s1.tlk", "qualification_s1.tlk", "skill_s1.tlk"]


def test_embed_rerun_is_byte_identical(project):
    assert main(["embed", "--config", str(project)]) == 0
    cache = project.parent / "caches" / "skill_s1.tlk"
    first = cache.read_bytes()
    assert main(["embed", "--config", str(project)]) == 0
    assert cache.read_bytes() == first


def test_embed_s5_record_count(project):
    assert main(["embed", "--config", str(project), "--kind", "occupation",
                 "--strategy", "s5"]) == 0
    from taxolink.embedding import cache_load
    records = cache_load(project.parent / "caches" / "occupation_s5.tlk")
    # o1: label+desc+2 alts = 4; o2: label+desc = 2; o3: label+desc+1 alt = 3
    assert len(records) == 9


def test_link_sl_in_order(project, capsys):
    root = project.parent
    assert main(["embed", "--config", str(project)]) == 0
    out_path = root / "sl.jsonl"
    assert main(["link", "--config", str(project), "--mode", "sl",
                 "--kind", "occupation", "--in", str(root / "docs.jsonl"),
                 "--out", str(out_path)]) == 0
    lines = [json.loads(line) for line in out_path.read_text().splitlines()]
    assert [obj["id"] for obj in lines] == ["d1", "d2", "d3"]
    assert lines[0]["candidates"][0]["node_id"] == "o1"
    assert lines[1]["candidates"][0]["node_id"] == "o2"


def test_link_empty_input(project, tmp_path, capsys):
    (tmp_path / "empty.jsonl").write_text("", encoding="utf-8")
    assert main(["embed", "--config", str(project)]) == 0
    out_path = tmp_path / "out.jsonl"
    assert main(["link", "--config", str(project), "--mode", "sl",
                 "--kind", "occupation", "--in", str(tmp_path / "empty.jsonl"),
                 "--out", str(out_path)]) == 0
    assert out_path.read_text() == ""


def test_link_title_uses_title_field(project):
    root = project.parent
    assert main(["embed", "--config", str(project)]) == 0
    out_path = root / "title.jsonl"
    assert main(["link", "--config", str(project), "--mode", "title",
                 "--kind", "occupation", "--in", str(root / "docs.jsonl"),
                 "--out", str(out_path)]) == 0
    lines = [json.loads(line) for line in out_path.read_text().splitlines()]
    assert [obj["candidates"][0]["node_id"] for obj in lines] == ["o1", "o2", "o3"]


def test_link_el_matches_annotations(project):
    root = project.parent
    assert main(["embed", "--config", str(project)]) == 0
    out_path = root / "el.jsonl"
    assert main(["link", "--config", str(project), "--mode", "el",
                 "--in", str(root / "docs.jsonl"), "--out", str(out_path)]) == 0
    lines = [json.loads(line) for line in out_path.read_text().splitlines()]
    assert [m["surface"] for obj in lines for m in obj["mentions"]] == [
        "java programming", "teamwork", "web development",
    ]
    assert lines[0]["mentions"][0]["token_span"] == [1, 3]
    assert lines[0]["mentions"][0]["candidates"][0]["node_id"] == "s1"


def test_eval_sl_accuracy_one(project, capsys):
    root = project.parent
    main(["embed", "--config", str(project)])
    main(["link", "--config", str(project), "--mode", "sl", "--kind", "occupation",
          "--in", str(root / "docs.jsonl"), "--out", str(root / "sl.jsonl")])
    report_path = root / "sl_report.json"
    assert main(["eval", "--config", str(project), "--mode", "sl",
                 "--results", str(root / "sl.jsonl"), "--gold", str(root / "gold_sl.jsonl"),
                 "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["metrics"]["accuracy_at_1"] == 1.0
    assert report["counts"]["instances"] == 3
    assert "accuracy@1" in capsys.readouterr().out


def test_eval_el_entity_level(project):
    root = project.parent
    main(["embed", "--config", str(project)])
    main(["link", "--config", str(project), "--mode", "el",
          "--in", str(root / "docs.jsonl"), "--out", str(root / "el.jsonl")])
    report_path = root / "el_report.json"
    assert main(["eval", "--config", str(project), "--mode", "el",
                 "--results", str(root / "el.jsonl"), "--gold", str(root / "gold_el.jsonl"),
                 "--out", str(report_path)]) == 0
    report = json.loads(report_path.read_text())
    assert report["metrics"]["accuracy_at_1"] == 1.0
    assert report["metrics"]["f1_strict"] == 1.0


def test_eval_disjoint_ids_exit_4(project, tmp_path, capsys):
    root = project.parent
    main(["embed", "--config", str(project)])
    main(["link", "--config", str(project), "--mode", "sl", "--kind", "occupation",
          "--in", str(root / "docs.jsonl"), "--out", str(root / "sl.jsonl")])
    bad_gold = tmp_path / "bad_gold.jsonl"
    bad_gold.write_text(json.dumps(
        {"id": "zz", "text": "x", "kind": "Occupation", "gold": ["o1"]}) + "\n",
        encoding="utf-8")
    assert main(["eval", "--config", str(project), "--mode", "sl",
                 "--results", str(root / "sl.jsonl"), "--gold", str(bad_gold)]) == 4


def test_compare_builds_table(project, capsys):
    root = project.parent
    main(["embed", "--config", str(project)])
    for mode, out in (("sl", "sl.jsonl"), ("title", "title.jsonl"), ("el", "el_s.jsonl")):
        main(["link", "--config", str(project), "--mode", mode, "--kind", "occupation",
              "--in", str(root / "docs.jsonl"), "--out", str(root / out)])
    main(["eval", "--config", str(project), "--mode", "sl",
          "--results", str(root / "sl.jsonl"), "--gold", str(root / "gold_sl.jsonl"),
          "--out", str(root / "r_sl.json")])
    main(["eval", "--config", str(project), "--mode", "title",
          "--results", str(root / "title.jsonl"), "--gold", str(root / "gold_sl.jsonl"),
          "--out", str(root / "r_title.json")])
    capsys.readouterr()
    assert main(["compare", "--sl", str(root / "r_sl.json"),
                 "--title", str(root / "r_title.json"),
                 "--out", str(root / "table.json")]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0].split()[0] == "method"
    assert [line.split()[0] for line in lines[1:]] == ["sl", "title"]
    table = json.loads((root / "table.json").read_text())
    assert table["accuracy_at_1"]["sl"]["Occupation"] == 1.0


def test_eval_qualification_resolves_levels(project, tmp_path):
    root = project.parent
    main(["embed", "--config", str(project)])
    docs = tmp_path / "qdocs.jsonl"
    docs.write_text(json.dumps({"id": "q1", "text": "Bachelor degree"}) + "\n", encoding="utf-8")
    # exact-label replay: "Bachelor degree" retrieves q0001 (level 6)
    main(["link", "--config", str(project), "--mode", "sl", "--kind", "qualification",
          "--in", str(docs), "--out", str(root / "q.jsonl")])
    gold = tmp_path / "qgold.jsonl"
    gold.write_text(json.dumps(
        {"id": "q1", "text": "Bachelor degree", "kind": "Qualification", "gold": ["EQF6"]}) + "\n",
        encoding="utf-8")
    report_path = root / "q_report.json"
    assert main(["eval", "--config", str(project), "--mode", "sl",
                 "--results", str(root / "q.jsonl"), "--gold", str(gold),
                 "--out", str(report_path)]) == 0
    assert json.loads(report_path.read_text())["metrics"]["accuracy_at_1"] == 1.0


def test_service_provider_unreachable_exit_3(project, tmp_path, capsys):
    config = tmp_path / "svc.toml"
    config.write_text(
        "[paths]\n"
        f'occupations = "{project.parent / "occupations.csv"}"\n'
        'cache_dir = "caches"\n'
        "[provider]\n"
        'spec = "service:127.0.0.1:1"\n',
        encoding="utf-8",
    )
    assert main(["embed", "--config", str(config)]) == 3


def test_link_jobs_parallel_preserves_order(project):
    root = project.parent
    main(["embed", "--config", str(project)])
    out1 = root / "sl_serial.jsonl"
    out2 = root / "sl_parallel.jsonl"
    main(["link", "--config", str(project), "--mode", "sl", "--kind", "occupation",
          "--in", str(root / "docs.jsonl"), "--out", str(out1)])
    main(["link", "--config", str(project), "--mode", "sl", "--kind", "occupation",
          "--jobs", "4", "--in", str(root / "docs.jsonl"), "--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_per_document_errors_continue_run(project, tmp_path, capsys):
    root = project.parent
    main(["embed", "--config", str(project)])
    docs = tmp_path / "docs.jsonl"
    docs.write_text(
        json.dumps({"id": "ok", "text": "We need a software developer"}) + "\n"
        + json.dumps({"id": "bad", "text": "no replay vector exists"}) + "\n",
        encoding="utf-8")
    out_path = tmp_path / "out.jsonl"
    code = main(["link", "--config", str(project), "--mode", "sl", "--kind", "occupation",
                 "--in", str(docs), "--out", str(out_path)])
    assert code == 1
    lines = out_path.read_text().splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["id"] == "ok"
    assert "bad" in capsys.readouterr().err
