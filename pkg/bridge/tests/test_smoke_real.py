"""Real-model smoke check, gated behind TAXOLINK_SMOKE_ASSETS.

Needs a directory with:

* ``skills.csv`` — the skills reference in the canonical engine schema;
* ``skills_eval.jsonl`` — the public skills evaluation set, sentence level
  (``{"id", "text", "kind": "Skill", "gold": [...]}``), UNK labels included.

Plus a working sentence-transformers install able to load
``sentence-transformers/all-mpnet-base-v2`` (network or local cache). With
preferred-label embeddings the sentence-level Accuracy@1 on that set lands at
0.2211 give or take encoder/tokenizer drift; the gate is +/- 0.03.
"""

import json
import os
import re
import subprocess
import sys
import time
from pathlib import Path

import pytest

ASSETS = os.environ.get("TAXOLINK_SMOKE_ASSETS")
SRC_DIR = str(Path(__file__).resolve().parents[1] / "src")

pytestmark = pytest.mark.skipif(
    not ASSETS,
    reason="TAXOLINK_SMOKE_ASSETS not set: public eval set / model weights absent",
)


@pytest.fixture(scope="module")
def bridge_address():
    proc = subprocess.Popen(
        [sys.executable, "-m", "taxolink_bridge",
         "--embed-model", "sentence-transformers/all-mpnet-base-v2",
         "--listen", "127.0.0.1:0"],
        stderr=subprocess.PIPE, text=True,
        env={**os.environ, "PYTHONPATH": SRC_DIR},
    )
    line = proc.stderr.readline()
    match = re.search(r"listening on ([\d.]+:\d+)", line)
    if not match:
        proc.kill()
        pytest.fail(f"bridge did not start: {line!r}")
    yield match.group(1)
    proc.kill()


def test_sl_accuracy_matches_published_value(tmp_path, bridge_address):
    assets = Path(ASSETS)
    config = tmp_path / "config.toml"
    config.write_text(
        "[paths]\n"
        f'skills = "{assets / "skills.csv"}"\n'
        f'cache_dir = "{tmp_path / "caches"}"\n'
        "[embedding]\n"
        'strategy = "s1"\n'
        "[provider]\n"
        f'spec = "service:{bridge_address}"\n'
        "[link]\n"
        "k = 10\n"
        'kind = "skill"\n',
        encoding="utf-8",
    )
    eval_set = assets / "skills_eval.jsonl"
    docs = tmp_path / "docs.jsonl"
    with open(eval_set, encoding="utf-8") as fh, open(docs, "w", encoding="utf-8") as out:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                out.write(json.dumps({"id": obj["id"], "text": obj["text"]}) + "\n")

    started = time.monotonic()
    run = [sys.executable, "-m", "taxolink.cli"]
    subprocess.run(run + ["embed", "--config", str(config)], check=True)
    subprocess.run(run + ["link", "--config", str(config), "--mode", "sl",
                          "--in", str(docs), "--out", str(tmp_path / "sl.jsonl")],
                   check=True)
    subprocess.run(run + ["eval", "--config", str(config), "--mode", "sl",
                          "--results", str(tmp_path / "sl.jsonl"),
                          "--gold", str(eval_set),
                          "--out", str(tmp_path / "report.json")], check=True)
    elapsed = time.monotonic() - started
    report = json.loads((tmp_path / "report.json").read_text())
    accuracy = report["metrics"]["accuracy_at_1"]
    assert abs(accuracy - 0.2211) <= 0.03, f"Accuracy@1 {accuracy:.4f} off published value"
    assert elapsed <= 1800, f"took {elapsed / 60:.1f} min on CPU"
