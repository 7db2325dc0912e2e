"""Independent oracles and fixture builders shared across test modules.

The oracles here deliberately avoid the library's own search/attribution
code paths: plain loops, per-pair cosines, exhaustive argmax.
"""

from __future__ import annotations

import math
import random

from taxolink.embedding import EmbeddingRecord, FieldKind
from taxolink.taxonomy import EntityKind

import numpy as np


def brute_force_top_k(records: list[EmbeddingRecord], query, k: int):
    """Every cosine, grouped by node, per-node max, sorted (score desc, id
    asc), truncated. Returns [(node_id, score)]."""
    q = [float(x) for x in query]
    qn = math.sqrt(sum(x * x for x in q))
    per_node: dict[str, float] = {}
    for rec in records:
        v = [float(x) for x in rec.vector]
        vn = math.sqrt(sum(x * x for x in v))
        score = sum(a * b for a, b in zip(v, q)) / (vn * qn)
        if rec.node_id not in per_node or score > per_node[rec.node_id]:
            per_node[rec.node_id] = score
    ranked = sorted(per_node.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]


def random_records(rng: random.Random, max_nodes: int = 200, max_per_node: int = 5,
                   max_dim: int = 16, kind: EntityKind = EntityKind.SKILL):
    """A random multi-vector index payload with occasional duplicate scores."""
    dim = rng.randint(2, max_dim)
    n_nodes = rng.randint(1, max_nodes)
    records = []
    for i in range(n_nodes):
        node_id = f"n{i:04d}"
        for _ in range(rng.randint(1, max_per_node)):
            vec = np.array([rng.uniform(-1, 1) for _ in range(dim)], dtype=np.float32)
            if not np.any(vec):
                vec[0] = np.float32(1.0)
            records.append(
                EmbeddingRecord(node_id=node_id, entity_kind=kind,
                                field_kind=FieldKind.PREFERRED_LABEL, alt_index=0,
                                vector=vec)
            )
    return records, dim


def naive_span_prf(pred: list[tuple], gold: list[tuple]):
    """Strict span P/R/F1 by direct recount over multiset matches."""
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    gold_left = list(gold)
    tp = 0
    for item in pred:
        if item in gold_left:
            gold_left.remove(item)
            tp += 1
    p = tp / len(pred) if pred else 0.0
    r = tp / len(gold) if gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def brute_force_attribution(mention_tokens: frozenset[int], gold_spans):
    """Argmax Jaccard with earliest-start tie-break over (token set, label,
    start) gold spans; UNK when nothing overlaps."""
    best = ("UNK", 0.0, None)
    for tokens, label, start in gold_spans:
        inter = len(mention_tokens & tokens)
        union = len(mention_tokens | tokens)
        j = inter / union if union else 0.0
        if j <= 0.0:
            continue
        _, best_j, best_start = best
        if j > best_j or (j == best_j and (best_start is None or start < best_start)):
            best = (label, j, start)
    return best[0]


def write_csv(path, header: str, rows: list[str]) -> None:
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
