"""Whole-text linking: embed a query and retrieve nearest taxonomy nodes.

Title linking is the same retrieval with the job title as the query text; it
gets its own entry point so method comparisons can name it explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .taxonomy import EntityKind
from .vector_index import RankedCandidate, VectorIndex, query_top_k


@dataclass(frozen=True)
class SentenceQuery:
    text: str
    entity_kind: EntityKind
    k: int = 10

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("query text is empty")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class LinkResult:
    query: SentenceQuery
    candidates: tuple[RankedCandidate, ...] = field(default=())


def link_sentence(query: SentenceQuery, index: VectorIndex, provider) -> LinkResult:
    if index.entity_kind is not query.entity_kind:
        raise ValueError(
            f"query kind {query.entity_kind.value} does not match index kind {index.entity_kind.value}"
        )
    provider_dim = getattr(provider, "dim", None)
    if provider_dim is not None and provider_dim != index.dim:
        raise ValueError(f"provider dim {provider_dim} != index dim {index.dim}")
    vector = provider.embed([query.text])[0]
    return LinkResult(query=query, candidates=tuple(query_top_k(index, vector, query.k)))


def link_title(title: str, index: VectorIndex, provider, k: int = 10) -> LinkResult:
    """Alias of :func:`link_sentence` with the title as query text."""
    return link_sentence(SentenceQuery(text=title, entity_kind=index.entity_kind, k=k), index, provider)
