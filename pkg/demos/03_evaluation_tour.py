#!/usr/bin/env python3
# The measurement toolbox: in-KB filtering, strict span F1, Jaccard
# attribution, Accuracy@1, and the cross-method table.

from taxolink import (
    EntityKind,
    FieldKind,
    GoldInstance,
    GoldSpan,
    Mention,
    MentionLinkResult,
    RankedCandidate,
    accuracy_at_1,
    compare_methods,
    filter_in_kb,
    jaccard,
    span_f1_strict,
)
from taxolink.evaluation import EvalReport, attribute_mentions


def mention_result(span, candidates=()):
    mention = Mention(entity_kind=EntityKind.SKILL, sentence_index=0, token_span=span,
                      char_span=(0, 1), surface="m", joined="m")
    cands = tuple(RankedCandidate(node_id=c, score=1.0 - i * 0.1,
                                  field_kind=FieldKind.PREFERRED_LABEL)
                  for i, c in enumerate(candidates))
    return MentionLinkResult(mention=mention, candidates=cands)

# 1. In-KB filtering: UNK gold labels are removed before scoring; instances
# that only had UNK disappear entirely.
instances = [
    GoldInstance("a", "knows Java", "Skill", ("esco/java", "UNK")),
    GoldInstance("b", "drivers licence", "Skill", ("UNK",)),
]
kept, removed = filter_in_kb(instances)
print(f"in-KB filter: kept {len(kept)} of {len(instances)} instances, "
      f"removed {removed} UNK labels")

# 2. Strict span F1 only credits exact (span, kind) matches.
gold = [((0, 2), "Skill")]
pred = [((0, 2), "Skill"), ((3, 4), "Skill")]
precision, recall, f1 = span_f1_strict(pred, gold)
print(f"strict span F1: P={precision} R={recall} F1={f1:.4f}")

# 3. Jaccard overlap attributes extracted mentions to gold spans.
print(f"jaccard({{1,2,3}}, {{2,3,4}}) = {jaccard({1, 2, 3}, {2, 3, 4})}")
spans = [GoldSpan((5, 6), "esco/java"), GoldSpan((9,), "esco/sql")]
results = [mention_result((5, 7), candidates=("esco/java",)),
           mention_result((0, 1), candidates=("esco/sql",))]
for result, label in attribute_mentions(results, spans):
    print(f"  mention tokens {result.mention.token_span} -> {label}")

# 4. Accuracy@1 over attributed records (UNK-attributed rows drop out).
records = [(list(r.candidates), label) for r, label in attribute_mentions(results, spans)]
print(f"accuracy@1 = {accuracy_at_1(records):.4f}")

# 5. The comparison table renders one row per method, one column per kind.
def report(method, kind, accuracy):
    return EvalReport(method=method, entity_kind=kind, accuracy_at_1=accuracy,
                      instances=2,
                      trace=[{"instance_id": i, "gold": [], "top1": None, "hit": False}
                             for i in ("a", "b")])

table = compare_methods(
    {"Occupation": report("sl", "Occupation", 0.50), "Skill": report("sl", "Skill", 0.25)},
    {"Occupation": report("el", "Occupation", 0.45), "Skill": report("el", "Skill", 0.40)},
    {"Occupation": report("title", "Occupation", 0.55)},
)
print("\n" + table.render())
