"""Measurement suite: in-KB filtering, strict span F1, Jaccard attribution,
Accuracy@1, and the cross-method comparison table.

Evaluation-set files are JSON Lines. Sentence level:
``{"id": ..., "text": ..., "kind": ..., "gold": ["id1", "UNK", ...]}``;
entity level adds ``"gold_spans": [{"tokens": [i, ...], "label": ...}]``
with token indices over the instance's own tokenization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .entity_linking import MentionLinkResult
from .vector_index import RankedCandidate


class EvalError(Exception):
    """Evaluation cannot proceed (empty set, malformed input)."""


class EvalMismatchError(EvalError):
    """Instance ids disagree between result and gold files or across methods."""


UNK = "UNK"


@dataclass(frozen=True)
class GoldSpan:
    tokens: tuple[int, ...]
    label: str
    kind: str | None = None

    def token_set(self) -> frozenset[int]:
        return frozenset(self.tokens)

    @property
    def start(self) -> int:
        return min(self.tokens) if self.tokens else -1


@dataclass(frozen=True)
class GoldInstance:
    instance_id: str
    text: str
    entity_kind: str
    gold_labels: tuple[str, ...]
    gold_spans: tuple[GoldSpan, ...] = ()

    def __post_init__(self) -> None:
        if not self.gold_labels:
            raise ValueError(f"instance {self.instance_id!r} has no gold labels")


@dataclass
class EvalReport:
    method: str
    entity_kind: str
    accuracy_at_1: float | None = None
    precision: float | None = None
    recall: float | None = None
    f1_strict: float | None = None
    instances: int = 0
    entities: int = 0
    unk_removed: int = 0
    trace: list[dict] = field(default_factory=list)

    def instance_ids(self) -> list[str]:
        return [rec["instance_id"] for rec in self.trace]

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "kind": self.entity_kind,
            "metrics": {
                "accuracy_at_1": self.accuracy_at_1,
                "precision": self.precision,
                "recall": self.recall,
                "f1_strict": self.f1_strict,
            },
            "counts": {
                "instances": self.instances,
                "entities": self.entities,
                "unk_removed": self.unk_removed,
            },
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EvalReport":
        metrics = obj.get("metrics", {})
        counts = obj.get("counts", {})
        return cls(
            method=obj.get("method", ""),
            entity_kind=obj.get("kind", ""),
            accuracy_at_1=metrics.get("accuracy_at_1"),
            precision=metrics.get("precision"),
            recall=metrics.get("recall"),
            f1_strict=metrics.get("f1_strict"),
            instances=counts.get("instances", 0),
            entities=counts.get("entities", 0),
            unk_removed=counts.get("unk_removed", 0),
            trace=list(obj.get("trace", [])),
        )

    def render(self) -> str:
        lines = [f"method={self.method} kind={self.entity_kind}"]
        rows = [
            ("accuracy@1", self.accuracy_at_1),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1_strict", self.f1_strict),
        ]
        for name, value in rows:
            if value is not None:
                lines.append(f"  {name:<12} {value:.4f}")
        lines.append(f"  {'instances':<12} {self.instances}")
        lines.append(f"  {'entities':<12} {self.entities}")
        lines.append(f"  {'unk_removed':<12} {self.unk_removed}")
        return "\n".join(lines)


def load_eval_set(path: str | Path) -> list[GoldInstance]:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvalError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
            spans = tuple(
                GoldSpan(tokens=tuple(s["tokens"]), label=s["label"], kind=s.get("kind"))
                for s in obj.get("gold_spans", [])
            )
            instances.append(
                GoldInstance(
                    instance_id=str(obj["id"]),
                    text=obj.get("text", ""),
                    entity_kind=obj.get("kind", ""),
                    gold_labels=tuple(obj["gold"]),
                    gold_spans=spans,
                )
            )
    return instances


def filter_in_kb(instances: list[GoldInstance]) -> tuple[list[GoldInstance], int]:
    """Drop UNK gold labels (and UNK-labeled spans); instances left with no
    gold at all are dropped. Returns (kept instances, removed UNK count)."""
    kept = []
    removed = 0
    for inst in instances:
        labels = tuple(lab for lab in inst.gold_labels if lab != UNK)
        removed += len(inst.gold_labels) - len(labels)
        if not labels:
            continue
        spans = tuple(span for span in inst.gold_spans if span.label != UNK)
        kept.append(
            GoldInstance(
                instance_id=inst.instance_id,
                text=inst.text,
                entity_kind=inst.entity_kind,
                gold_labels=labels,
                gold_spans=spans,
            )
        )
    return kept, removed


def span_f1_strict(pred: list[tuple], gold: list[tuple]) -> tuple[float, float, float]:
    """Strict span F1: a prediction counts only on exact (span, kind) match,
    with multiset multiplicity. Both sides empty scores a perfect 1."""
    if not pred and not gold:
        return 1.0, 1.0, 1.0
    pred_counts: dict[tuple, int] = {}
    for item in pred:
        pred_counts[item] = pred_counts.get(item, 0) + 1
    tp = 0
    for item in gold:
        if pred_counts.get(item, 0) > 0:
            pred_counts[item] -= 1
            tp += 1
    precision = tp / len(pred) if pred else 0.0
    recall = tp / len(gold) if gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def jaccard(a: frozenset | set, b: frozenset | set) -> float:
    """|a ∩ b| / |a ∪ b|, with 0 for two empty sets."""
    union = len(a | b)
    if union == 0:
        return 0.0
    return len(a & b) / union


def attribute_mentions(results: list[MentionLinkResult],
                       gold_spans: list[GoldSpan]) -> list[tuple[MentionLinkResult, str]]:
    """Pair each extracted mention with the gold span of maximal token-set
    Jaccard overlap (ties: earliest gold start); no overlap at all yields
    UNK. Token indices of both sides must refer to the same tokenization."""
    attributed = []
    for result in results:
        mention_tokens = result.mention.token_set()
        best_label = UNK
        best_score = 0.0
        best_start = None
        for span in gold_spans:
            score = jaccard(mention_tokens, span.token_set())
            if score <= 0.0:
                continue
            if score > best_score or (score == best_score and
                                      (best_start is None or span.start < best_start)):
                best_label = span.label
                best_score = score
                best_start = span.start
        attributed.append((result, best_label))
    return attributed


def accuracy_at_1(records: list[tuple], label_of=None) -> float:
    """Fraction of records whose rank-1 candidate hits the gold set.

    Each record is (candidates, gold) where candidates is a ranked list of
    RankedCandidate or plain node-id strings, and gold is a label or a
    collection of labels. UNK-gold records are excluded first (in-KB); a
    record with no candidates counts as a miss.
    """
    hits = 0
    total = 0
    for candidates, gold in records:
        gold_set = {gold} if isinstance(gold, str) else set(gold)
        gold_set.discard(UNK)
        if not gold_set:
            continue
        total += 1
        if not candidates:
            continue
        top = candidates[0]
        top_id = top.node_id if isinstance(top, RankedCandidate) else top
        if label_of is not None:
            top_id = label_of(top_id)
        if top_id in gold_set:
            hits += 1
    if total == 0:
        raise EvalError("empty evaluation set: no in-KB records to score")
    return hits / total


def evaluate_sentence_level(results_by_id: dict[str, list], instances: list[GoldInstance],
                            method: str, entity_kind: str, label_of=None) -> EvalReport:
    """Score sentence-level candidate lists against gold instances.

    ``results_by_id`` maps instance id to a ranked candidate list. Ids must
    cover exactly the (in-KB filtered) instances.
    """
    in_kb, unk_removed = filter_in_kb(instances)
    gold_ids = {inst.instance_id for inst in in_kb}
    missing = sorted(gold_ids - set(results_by_id))
    if missing:
        raise EvalMismatchError(f"no results for instance ids: {missing[:5]}")
    records = []
    trace = []
    entities = 0
    for inst in in_kb:
        candidates = results_by_id[inst.instance_id]
        records.append((candidates, inst.gold_labels))
        entities += len(inst.gold_labels)
        top = candidates[0] if candidates else None
        top_id = (top.node_id if isinstance(top, RankedCandidate) else top) if top else None
        shown = label_of(top_id) if (label_of and top_id is not None) else top_id
        trace.append(
            {
                "instance_id": inst.instance_id,
                "gold": list(inst.gold_labels),
                "top1": shown,
                "hit": shown in set(inst.gold_labels) if shown is not None else False,
            }
        )
    report = EvalReport(method=method, entity_kind=entity_kind,
                        instances=len(in_kb), entities=entities,
                        unk_removed=unk_removed, trace=trace)
    report.accuracy_at_1 = accuracy_at_1(records, label_of=label_of)
    return report


def evaluate_entity_level(results_by_id: dict[str, list[MentionLinkResult]],
                          instances: list[GoldInstance], method: str,
                          entity_kind: str, label_of=None) -> EvalReport:
    """Score per-mention results: Jaccard attribution then Accuracy@1 over
    attributed (non-UNK) mentions, plus strict span F1 over token spans."""
    in_kb, unk_removed = filter_in_kb(instances)
    gold_ids = {inst.instance_id for inst in in_kb}
    missing = sorted(gold_ids - set(results_by_id))
    if missing:
        raise EvalMismatchError(f"no results for instance ids: {missing[:5]}")

    records = []
    trace = []
    pred_spans: list[tuple] = []
    gold_spans_all: list[tuple] = []
    entities = 0
    for inst in in_kb:
        results = results_by_id[inst.instance_id]
        entities += len(inst.gold_spans) or len(inst.gold_labels)
        attributed = attribute_mentions(results, list(inst.gold_spans))
        inst_records = []
        for result, gold_label in attributed:
            inst_records.append(
                {
                    "surface": result.mention.surface,
                    "token_span": list(result.mention.token_span),
                    "attributed": gold_label,
                    "top1": result.candidates[0].node_id if result.candidates else None,
                }
            )
            if gold_label != UNK:
                records.append((list(result.candidates), gold_label))
        trace.append(
            {
                "instance_id": inst.instance_id,
                "gold": list(inst.gold_labels),
                "mentions": inst_records,
            }
        )
        for result in results:
            span = tuple(range(result.mention.token_span[0], result.mention.token_span[1]))
            pred_spans.append((span, result.mention.entity_kind.value))
        for span in inst.gold_spans:
            gold_spans_all.append((tuple(sorted(span.tokens)), span.kind or inst.entity_kind))

    report = EvalReport(method=method, entity_kind=entity_kind,
                        instances=len(in_kb), entities=entities,
                        unk_removed=unk_removed, trace=trace)
    if records:
        report.accuracy_at_1 = accuracy_at_1(records, label_of=label_of)
    else:
        report.accuracy_at_1 = 0.0
    precision, recall, f1 = span_f1_strict(pred_spans, gold_spans_all)
    report.precision, report.recall, report.f1_strict = precision, recall, f1
    return report


@dataclass
class ComparisonTable:
    methods: list[str]
    kinds: list[str]
    cells: dict[tuple[str, str], float]  # (method, kind) -> accuracy@1

    def to_json(self) -> dict:
        return {
            "methods": self.methods,
            "kinds": self.kinds,
            "accuracy_at_1": {
                method: {kind: self.cells.get((method, kind)) for kind in self.kinds
                         if (method, kind) in self.cells}
                for method in self.methods
            },
        }

    def render(self) -> str:
        width = max(len(k) for k in self.kinds) + 2
        header = "method".ljust(8) + "".join(kind.ljust(width) for kind in self.kinds)
        lines = [header]
        for method in self.methods:
            row = method.ljust(8)
            for kind in self.kinds:
                value = self.cells.get((method, kind))
                row += ("-" if value is None else f"{value:.4f}").ljust(width)
            lines.append(row)
        return "\n".join(lines)


def compare_methods(sl_reports: dict[str, EvalReport],
                    el_reports: dict[str, EvalReport],
                    title_reports: dict[str, EvalReport] | None = None) -> ComparisonTable:
    """Build the per-kind Accuracy@1 comparison across methods.

    Every report must be sentence level (entity-linking results aggregated to
    sentences first) over the same instance ids per kind.
    """
    by_method = {"sl": sl_reports, "el": el_reports, "title": title_reports or {}}
    kinds: list[str] = []
    for reports in by_method.values():
        for kind in reports:
            if kind not in kinds:
                kinds.append(kind)
    cells = {}
    for kind in kinds:
        id_sets = {}
        for method, reports in by_method.items():
            report = reports.get(kind)
            if report is None:
                continue
            id_sets[method] = set(report.instance_ids())
            cells[(method, kind)] = report.accuracy_at_1
        distinct = {frozenset(ids) for ids in id_sets.values()}
        if len(distinct) > 1:
            raise EvalMismatchError(f"instance ids differ across methods for kind {kind!r}")
    return ComparisonTable(methods=[m for m in ("sl", "el", "title")
                                    if any((m, k) in cells for k in kinds)],
                           kinds=kinds, cells=cells)
