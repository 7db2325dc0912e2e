import json
import random

import numpy as np
import pytest

from taxolink.embedding import EmbeddingRecord, FieldKind, HashProvider, ReplayProvider
from taxolink.entity_linking import (
    MentionLinkResult,
    MissingIndexError,
    aggregate_to_sentence,
    link_document,
    link_mention,
    result_to_json,
)
from taxolink.entity_recognition import Document, GoldReplayLabeler, Mention
from taxolink.taxonomy import EntityKind
from taxolink.vector_index import RankedCandidate, build_index


def rec(node_id, vector, kind=EntityKind.SKILL):
    return EmbeddingRecord(node_id=node_id, entity_kind=kind,
                           field_kind=FieldKind.PREFERRED_LABEL, alt_index=0,
                           vector=np.array(vector, dtype=np.float32))


def mention(surface="Java skills", kind=EntityKind.SKILL, span=(0, 2)):
    return Mention(entity_kind=kind, sentence_index=0, token_span=span,
                   char_span=(0, len(surface)), surface=surface, joined=surface)


def cand(node_id, score, field=FieldKind.PREFERRED_LABEL, alt=0):
    return RankedCandidate(node_id=node_id, score=score, field_kind=field, alt_index=alt)


def test_link_mention_self_retrieval():
    indexes = {EntityKind.SKILL: build_index([rec("A", [1, 0]), rec("B", [0, 1])])}
    provider = ReplayProvider({"Java skills": [1.0, 0.0]})
    result = link_mention(mention(), indexes, provider, k=2)
    assert result.candidates[0].node_id == "A"
    assert result.candidates[0].score == pytest.approx(1.0, abs=1e-9)


def test_link_mention_missing_index():
    indexes = {EntityKind.SKILL: build_index([rec("A", [1, 0])])}
    provider = ReplayProvider({"BSc": [1.0, 0.0]})
    with pytest.raises(MissingIndexError, match="Qualification"):
        link_mention(mention("BSc", EntityKind.QUALIFICATION), indexes, provider)


def test_kind_isolation():
    indexes = {
        EntityKind.SKILL: build_index([rec("s1", [1, 0]), rec("s2", [0, 1])]),
        EntityKind.OCCUPATION: build_index([
            rec("o1", [1, 0], EntityKind.OCCUPATION),
            rec("o2", [0, 1], EntityKind.OCCUPATION),
        ]),
    }
    provider = HashProvider(2)
    skill_result = link_mention(mention("welding", EntityKind.SKILL), indexes, provider, k=5)
    assert {c.node_id for c in skill_result.candidates} <= {"s1", "s2"}
    occ_result = link_mention(mention("welder", EntityKind.OCCUPATION), indexes, provider, k=5)
    assert {c.node_id for c in occ_result.candidates} <= {"o1", "o2"}


class SilentLabeler:
    def label(self, tokens):
        return ["O"] * len(tokens)


def test_link_document_no_mentions_yields_empty():
    indexes = {EntityKind.SKILL: build_index([rec("A", [1, 0])])}
    out = link_document(Document("nothing to see"), SilentLabeler(), indexes, HashProvider(2))
    assert out == []


def test_link_document_orders_mentions(tmp_path):
    annotation = {
        "id": "d1",
        "tokens": [["Java", "and", "SQL"]],
        "labels": [["B-Skill", "O", "B-Skill"]],
        "entities": [],
    }
    path = tmp_path / "ann.jsonl"
    path.write_text(json.dumps(annotation) + "\n", encoding="utf-8")
    labeler = GoldReplayLabeler.from_file(path)
    indexes = {EntityKind.SKILL: build_index([rec("A", [1, 0]), rec("B", [0, 1])])}
    provider = ReplayProvider({"Java": [1.0, 0.0], "SQL": [0.0, 1.0]})
    results = link_document(Document("Java and SQL", id="d1"), labeler, indexes, provider, k=1)
    assert [(r.mention.surface, r.candidates[0].node_id) for r in results] == [
        ("Java", "A"), ("SQL", "B"),
    ]


def test_aggregate_empty():
    assert aggregate_to_sentence([]) == []


def test_aggregate_keeps_max_score_per_node():
    r1 = MentionLinkResult(mention("a"), (cand("A", 0.9), cand("B", 0.2)))
    r2 = MentionLinkResult(mention("b"), (cand("A", 0.7), cand("C", 0.5)))
    merged = aggregate_to_sentence([r1, r2])
    assert [(c.node_id, c.score) for c in merged] == [("A", 0.9), ("C", 0.5), ("B", 0.2)]


def test_aggregate_disjoint_union():
    r1 = MentionLinkResult(mention("a"), (cand("A", 0.9), cand("B", 0.8)))
    r2 = MentionLinkResult(mention("b"), (cand("C", 0.7), cand("D", 0.6), cand("E", 0.5)))
    assert len(aggregate_to_sentence([r1, r2])) == 5


def test_aggregate_order_insensitive():
    rng = random.Random(23)
    results = []
    for i in range(6):
        cands = tuple(cand(f"n{rng.randint(0, 9)}", round(rng.uniform(0, 1), 3),
                           field=rng.choice(list(FieldKind)), alt=rng.randint(0, 2))
                      for _ in range(rng.randint(0, 4)))
        results.append(MentionLinkResult(mention(f"m{i}", span=(i, i + 1)), cands))
    base = aggregate_to_sentence(results)
    for _ in range(10):
        shuffled = results[:]
        rng.shuffle(shuffled)
        assert aggregate_to_sentence(shuffled) == base


def test_result_to_json_shape():
    result = MentionLinkResult(mention(), (cand("A", 0.5),))
    obj = result_to_json("doc9", [result])
    assert obj == {
        "id": "doc9",
        "mentions": [
            {
                "kind": "Skill",
                "surface": "Java skills",
                "char_span": [0, 11],
                "token_span": [0, 2],
                "candidates": [{"node_id": "A", "score": 0.5}],
            }
        ],
    }
