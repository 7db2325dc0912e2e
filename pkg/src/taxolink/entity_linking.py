"""Per-mention retrieval and the entity-to-sentence aggregation.

Each recognized mention is embedded (raw document slice, original casing and
punctuation) and searched against the index of its own entity kind only. When
recognition finds nothing, the document links to nothing; there is no silent
fallback to whole-text linking.
"""

from __future__ import annotations

from dataclasses import dataclass

from .entity_recognition import Document, Mention, TokenizedSentence, recognize, recognize_sentences
from .taxonomy import EntityKind
from .vector_index import RankedCandidate, VectorIndex, query_top_k


class MissingIndexError(ValueError):
    """No vector index is loaded for a mention's entity kind."""


@dataclass(frozen=True)
class MentionLinkResult:
    mention: Mention
    candidates: tuple[RankedCandidate, ...]


def link_mention(mention: Mention, indexes: dict[EntityKind, VectorIndex],
                 provider, k: int = 10) -> MentionLinkResult:
    index = indexes.get(mention.entity_kind)
    if index is None:
        raise MissingIndexError(f"no index loaded for kind {mention.entity_kind.value}")
    vector = provider.embed([mention.surface])[0]
    return MentionLinkResult(mention=mention, candidates=tuple(query_top_k(index, vector, k)))


def link_mentions(mentions: list[Mention], indexes: dict[EntityKind, VectorIndex],
                  provider, k: int = 10) -> list[MentionLinkResult]:
    return [link_mention(m, indexes, provider, k) for m in mentions]


def link_document(doc: Document, labeler, indexes: dict[EntityKind, VectorIndex],
                  provider, k: int = 10) -> list[MentionLinkResult]:
    """Recognize mentions, then link each one; document order preserved."""
    return link_mentions(recognize(doc, labeler), indexes, provider, k)


def link_sentences(sentences: list[TokenizedSentence], labeler,
                   indexes: dict[EntityKind, VectorIndex], provider,
                   k: int = 10) -> list[MentionLinkResult]:
    """Same pipeline over pre-tokenized sentences (annotation-file tokens)."""
    return link_mentions(recognize_sentences(sentences, labeler), indexes, provider, k)


def aggregate_to_sentence(results: list[MentionLinkResult]) -> list[RankedCandidate]:
    """Merge all mentions' candidate lists into one sentence-level ranking:
    per node keep the maximum score, then sort score-descending with ties by
    ascending node id. Insensitive to the order of the input results."""
    best: dict[str, RankedCandidate] = {}
    for result in results:
        for cand in result.candidates:
            cur = best.get(cand.node_id)
            if cur is None or cand.score > cur.score:
                best[cand.node_id] = cand
            elif cand.score == cur.score:
                # exact ties: deterministic tag choice regardless of input order
                if (cand.field_kind.value, cand.alt_index) < (cur.field_kind.value, cur.alt_index):
                    best[cand.node_id] = cand
    return sorted(best.values(), key=lambda c: (-c.score, c.node_id))


def result_to_json(doc_id: str, results: list[MentionLinkResult]) -> dict:
    """One output object per document for the JSON Lines stream."""
    return {
        "id": doc_id,
        "mentions": [
            {
                "kind": r.mention.entity_kind.value,
                "surface": r.mention.surface,
                "char_span": list(r.mention.char_span),
                "token_span": list(r.mention.token_span),
                "candidates": [
                    {"node_id": c.node_id, "score": c.score} for c in r.candidates
                ],
            }
            for r in results
        ],
    }
