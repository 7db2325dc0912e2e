"""Exact cosine top-k search over embedding records.

Multi-embedding strategies leave several vectors per node in the index;
queries aggregate to node level by taking each node's maximum cosine. Exact
brute-force search is deliberate: the reference sets stay below ~40k vectors,
where a dense matmul answers in milliseconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingRecord, FieldKind
from .taxonomy import EntityKind


@dataclass(frozen=True)
class RankedCandidate:
    node_id: str
    score: float
    field_kind: FieldKind
    alt_index: int = 0


def cosine(u, v) -> float:
    """Plain cosine similarity of two vectors, computed in float64."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dim mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine undefined for zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


class VectorIndex:
    """Dense in-memory index over one entity kind's embedding records."""

    def __init__(self, entity_kind: EntityKind, matrix: np.ndarray,
                 node_ids: list[str], tags: list[tuple[FieldKind, int]]):
        self.entity_kind = entity_kind
        self.matrix = matrix  # float32, one row per record
        self.node_ids = node_ids
        self.tags = tags
        self.dim = int(matrix.shape[1])

        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        if np.any(norms == 0.0):
            bad = node_ids[int(np.argmin(norms))]
            raise ValueError(f"zero-norm vector in index (node {bad!r})")
        self.normalized = bool(np.all(np.abs(norms - 1.0) <= 1e-5))

        # Records regrouped by node id (ascending), stable within a node, so
        # per-node reductions and id-ascending tie-breaks fall out of order.
        unique_ids = sorted(set(node_ids))
        gid_of = {node_id: gid for gid, node_id in enumerate(unique_ids)}
        gids = np.array([gid_of[node_id] for node_id in node_ids])
        self._grouped_order = np.argsort(gids, kind="stable")
        grouped_gids = gids[self._grouped_order]
        self._group_starts = np.searchsorted(grouped_gids, np.arange(len(unique_ids)))
        self._group_ids = unique_ids
        self._norms = norms
        self._unit64: np.ndarray | None = None

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def node_count(self) -> int:
        return len(self._group_ids)

    def _unit_rows(self) -> np.ndarray:
        if self._unit64 is None:
            m = self.matrix.astype(np.float64)
            self._unit64 = m / self._norms[:, None]
        return self._unit64


def build_index(records: list[EmbeddingRecord]) -> VectorIndex:
    if not records:
        raise ValueError("cannot build an index from zero records")
    kinds = {rec.entity_kind for rec in records}
    if len(kinds) != 1:
        raise ValueError(f"records mix entity kinds: {sorted(k.value for k in kinds)}")
    dims = {int(rec.vector.shape[0]) for rec in records}
    if len(dims) != 1:
        raise ValueError(f"records have mixed dims: {sorted(dims)}")
    matrix = np.vstack([rec.vector for rec in records]).astype(np.float32)
    return VectorIndex(
        entity_kind=kinds.pop(),
        matrix=matrix,
        node_ids=[rec.node_id for rec in records],
        tags=[(rec.field_kind, rec.alt_index) for rec in records],
    )


def query_top_k(index: VectorIndex, query, k: int) -> list[RankedCandidate]:
    """Top-k nodes by max-over-records cosine, score descending, ties by
    ascending node id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise ValueError(f"query dim {q.shape[0]} != index dim {index.dim}")
    qnorm = float(np.linalg.norm(q))
    if qnorm == 0.0:
        raise ValueError("cosine undefined for zero-norm query")

    scores = index._unit_rows() @ (q / qnorm)
    grouped = scores[index._grouped_order]
    starts = index._group_starts
    n_nodes = index.node_count

    node_scores = np.empty(n_nodes)
    best_record = np.empty(n_nodes, dtype=np.intp)
    for gid in range(n_nodes):
        lo = starts[gid]
        hi = starts[gid + 1] if gid + 1 < n_nodes else len(grouped)
        local = int(np.argmax(grouped[lo:hi]))
        node_scores[gid] = grouped[lo + local]
        best_record[gid] = index._grouped_order[lo + local]

    ranking = np.lexsort((np.arange(n_nodes), -node_scores))[:k]
    out = []
    for gid in ranking:
        rec = int(best_record[gid])
        field_kind, alt_index = index.tags[rec]
        out.append(
            RankedCandidate(
                node_id=index._group_ids[gid],
                score=float(node_scores[gid]),
                field_kind=field_kind,
                alt_index=alt_index,
            )
        )
    return out
