#!/usr/bin/env python3
# The mention-level pipeline, step by step: tokenize, label, repair the BIO
# sequence, extract mentions, link each one, then merge to a sentence-level
# candidate list.

from taxolink import (
    Document,
    EntityKind,
    HashProvider,
    ReferenceSet,
    Strategy,
    TaxonomyNode,
    aggregate_to_sentence,
    build_embeddings,
    build_index,
    extract_mentions,
    repair_bio,
    tokenize,
)
from taxolink.entity_linking import link_mentions

doc = Document("Looking for Java skills. Team player wanted!", id="vacancy-1")
sentences = tokenize(doc)
for sentence in sentences:
    print(f"sentence {sentence.sentence_index}: {sentence.surfaces()}")

# Pretend a sequence labeler produced these noisy outputs. The repair pass
# fills the O gap in the first sentence and drops the dangling I in the
# second, yielding valid BIO either way.
raw_labels = [
    ["O", "O", "B-Skill", "O", "O"],          # "Java skills" split by a stray O
    ["O", "O", "O", "I-Skill"],               # dangling I at sentence end
]
raw_labels[0][3] = "I-Skill"
print("\nraw labels:   ", raw_labels)
repaired = [repair_bio(labels) for labels in raw_labels]
print("repaired:     ", repaired)

mentions = []
for sentence, labels in zip(sentences, repaired):
    mentions.extend(extract_mentions(sentence, labels))
for mention in mentions:
    print(f"\nmention: {mention.surface!r} kind={mention.entity_kind.value} "
          f"tokens={mention.token_span} chars={mention.char_span}")

# Link the mentions against a small skills reference.
skills = ReferenceSet(entity_kind=EntityKind.SKILL, nodes=(
    TaxonomyNode(id="sk/java", entity_kind=EntityKind.SKILL,
                 preferred_label="Java skills"),
    TaxonomyNode(id="sk/sql", entity_kind=EntityKind.SKILL,
                 preferred_label="SQL"),
))
provider = HashProvider(dim=32)
indexes = {EntityKind.SKILL: build_index(
    build_embeddings(skills, Strategy.PREFERRED_LABEL, provider))}

results = link_mentions(mentions, indexes, provider, k=2)
for result in results:
    top = result.candidates[0]
    print(f"linked {result.mention.surface!r} -> {top.node_id} ({top.score:+.4f})")

print("\nsentence-level aggregation (max score per node):")
for cand in aggregate_to_sentence(results):
    print(f"  {cand.node_id:8s} {cand.score:+.4f}")
