#!/usr/bin/env python3
# End-to-end CLI run in a temporary directory: write reference CSVs, a replay
# vector file, documents, gold sets, and a config; then ingest -> embed ->
# link -> eval -> compare.

import json
import subprocess
import sys
import tempfile
from pathlib import Path

root = Path(tempfile.mkdtemp(prefix="taxolink-demo-"))
print(f"working in {root}\n")

(root / "occupations.csv").write_text(
    "id,preferredLabel,altLabels,description\n"
    "o1,software developer,\"programmer\ncoder\",writes software\n"
    "o2,baker,,bakes bread\n"
    "o3,teacher,tutor,teaches pupils\n",
    encoding="utf-8",
)

unit = lambda axis: [1.0 if i == axis else 0.0 for i in range(4)]
replay = {
    "software developer": unit(0), "baker": unit(1), "teacher": unit(2),
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
(root / "docs.jsonl").write_text("\n".join(json.dumps(d) for d in docs) + "\n",
                                 encoding="utf-8")

gold = [
    {"id": "d1", "text": docs[0]["text"], "kind": "Occupation", "gold": ["o1"]},
    {"id": "d2", "text": docs[1]["text"], "kind": "Occupation", "gold": ["o2"]},
    {"id": "d3", "text": docs[2]["text"], "kind": "Occupation", "gold": ["o3", "UNK"]},
]
(root / "gold.jsonl").write_text("\n".join(json.dumps(g) for g in gold) + "\n",
                                 encoding="utf-8")

(root / "config.toml").write_text(
    "[paths]\n"
    'occupations = "occupations.csv"\n'
    'cache_dir = "caches"\n'
    "[embedding]\n"
    'strategy = "s1"\n'
    "[provider]\n"
    'spec = "replay:replay.json"\n'
    "[link]\n"
    "k = 3\n"
    'kind = "occupation"\n',
    encoding="utf-8",
)


def run(*args):
    cmd = [sys.executable, "-m", "taxolink.cli", *args]
    print("$ taxolink", " ".join(args))
    subprocess.run(cmd, check=True)
    print()


config = str(root / "config.toml")
run("ingest", "--config", config)
run("embed", "--config", config)
run("link", "--config", config, "--mode", "sl",
    "--in", str(root / "docs.jsonl"), "--out", str(root / "sl.jsonl"))
print((root / "sl.jsonl").read_text())
run("eval", "--config", config, "--mode", "sl",
    "--results", str(root / "sl.jsonl"), "--gold", str(root / "gold.jsonl"),
    "--out", str(root / "sl_report.json"))
run("link", "--config", config, "--mode", "title",
    "--in", str(root / "docs.jsonl"), "--out", str(root / "title.jsonl"))
run("eval", "--config", config, "--mode", "title",
    "--results", str(root / "title.jsonl"), "--gold", str(root / "gold.jsonl"),
    "--out", str(root / "title_report.json"))
run("compare", "--sl", str(root / "sl_report.json"),
    "--title", str(root / "title_report.json"))
