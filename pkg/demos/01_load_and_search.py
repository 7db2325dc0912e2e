#!/usr/bin/env python3
# Build a small reference set, embed it under two strategies, and run exact
# cosine top-k searches against it.

from taxolink import (
    EntityKind,
    HashProvider,
    ReferenceSet,
    Strategy,
    TaxonomyNode,
    build_embeddings,
    build_index,
    build_node_texts,
    query_top_k,
)

nodes = (
    TaxonomyNode(id="occ/1", entity_kind=EntityKind.OCCUPATION,
                 preferred_label="software developer",
                 description="designs and writes software",
                 alt_labels=("programmer", "coder")),
    TaxonomyNode(id="occ/2", entity_kind=EntityKind.OCCUPATION,
                 preferred_label="baker",
                 description="prepares bread and pastry"),
    TaxonomyNode(id="occ/3", entity_kind=EntityKind.OCCUPATION,
                 preferred_label="nurse",
                 description="cares for patients",
                 alt_labels=("staff nurse",)),
)
occupations = ReferenceSet(entity_kind=EntityKind.OCCUPATION, nodes=nodes)

provider = HashProvider(dim=32)  # deterministic stand-in for a real encoder

# Strategy 1: one vector per node, from the preferred label only.
print("== one embedding per node (preferred label) ==")
for kind, alt, text in build_node_texts(nodes[0], Strategy.PREFERRED_LABEL):
    print(f"  {kind.name}[{alt}]: {text!r}")
records = build_embeddings(occupations, Strategy.PREFERRED_LABEL, provider)
index = build_index(records)
print(f"index: {len(index)} vectors over {index.node_count} nodes, dim {index.dim}")

query = provider.embed(["software developer"])[0]
for cand in query_top_k(index, query, k=3):
    print(f"  {cand.node_id:8s} score={cand.score:+.4f} via {cand.field_kind.name}")

# Strategy 5: several vectors per node (label, description, each alt label);
# a query scores a node by the best of its vectors.
print("\n== multiple embeddings per node (separate alt labels) ==")
for kind, alt, text in build_node_texts(nodes[0], Strategy.ALL_FIELDS_SEPARATE):
    print(f"  {kind.name}[{alt}]: {text!r}")
records5 = build_embeddings(occupations, Strategy.ALL_FIELDS_SEPARATE, provider)
index5 = build_index(records5)
print(f"index: {len(index5)} vectors over {index5.node_count} nodes")

query = provider.embed(["coder"])[0]  # matches occ/1 through an alt label
for cand in query_top_k(index5, query, k=3):
    print(f"  {cand.node_id:8s} score={cand.score:+.4f} via {cand.field_kind.name}")
