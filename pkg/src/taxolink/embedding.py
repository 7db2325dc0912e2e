"""Embedding providers, node-text strategies, and the binary vector cache.

A provider maps a batch of texts to one float32 vector each. Three concrete
providers are included:

* :class:`ReplayProvider` — fixed text->vector mapping, for tests and
  reproducible runs;
* :class:`HashProvider` — deterministic pseudo-embeddings derived from
  SHA-256, no model required;
* :class:`ServiceProvider` — JSON-lines client for a real model served over
  TCP (request ``{"op": "embed", "texts": [...]}``).
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .lineproto import LineClient, ServiceError
from .taxonomy import EntityKind, ReferenceSet, TaxonomyNode


class ProviderError(Exception):
    """Provider unavailable or returned malformed vectors."""


class CacheFormatError(Exception):
    """Vector cache file is not in the expected binary format."""


class Strategy(Enum):
    """How a taxonomy node's text fields become one or more embeddings."""

    PREFERRED_LABEL = "s1"
    DESCRIPTION = "s2"
    LABEL_AND_DESCRIPTION = "s3"
    ALL_FIELDS_COMBINED = "s4"
    ALL_FIELDS_SEPARATE = "s5"

    @classmethod
    def parse(cls, value: str) -> "Strategy":
        low = value.strip().lower()
        for strategy in cls:
            if low in (strategy.value, strategy.name.lower()):
                return strategy
        raise ValueError(f"unknown embedding strategy: {value!r}")


class FieldKind(Enum):
    PREFERRED_LABEL = 0
    DESCRIPTION = 1
    LABEL_AND_DESCRIPTION = 2
    COMBINED_ALT_LABELS = 3
    ALT_LABEL = 4


@dataclass(eq=False)
class EmbeddingRecord:
    """One vector attached to (node, field slot)."""

    node_id: str
    entity_kind: EntityKind
    field_kind: FieldKind
    alt_index: int
    vector: np.ndarray  # float32, 1-d

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.node_id == other.node_id
            and self.entity_kind is other.entity_kind
            and self.field_kind is other.field_kind
            and self.alt_index == other.alt_index
            and self.vector.dtype == other.vector.dtype
            and np.array_equal(self.vector, other.vector)
        )


def _check_texts(texts: list[str]) -> None:
    if not texts:
        raise ValueError("texts must be non-empty")
    for i, text in enumerate(texts):
        if not text or not text.strip():
            raise ValueError(f"text at position {i} is empty")


def _as_matrix(vectors, count: int, dim: int | None) -> np.ndarray:
    try:
        matrix = np.asarray(vectors, dtype=np.float32)
    except (TypeError, ValueError) as exc:
        raise ProviderError(f"provider returned ragged or non-numeric vectors: {exc}") from exc
    if matrix.ndim != 2 or matrix.shape[0] != count:
        raise ProviderError(f"provider returned shape {matrix.shape}, expected ({count}, dim)")
    if dim is not None and matrix.shape[1] != dim:
        raise ProviderError(f"provider dim mismatch: declared {dim}, got {matrix.shape[1]}")
    if not np.all(np.isfinite(matrix)):
        raise ProviderError("provider returned non-finite values")
    return matrix


class ReplayProvider:
    """Serves pre-recorded vectors from an in-memory text->vector mapping."""

    def __init__(self, mapping: dict[str, list[float]]):
        if not mapping:
            raise ProviderError("replay mapping is empty")
        dims = {len(v) for v in mapping.values()}
        if len(dims) != 1:
            raise ProviderError(f"replay mapping has mixed dims: {sorted(dims)}")
        self.dim = dims.pop()
        self._mapping = {text: np.asarray(vec, dtype=np.float32) for text, vec in mapping.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayProvider":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def embed(self, texts: list[str]) -> np.ndarray:
        _check_texts(texts)
        rows = []
        for text in texts:
            vec = self._mapping.get(text)
            if vec is None:
                raise ProviderError(f"no replay vector for text {text!r}")
            rows.append(vec)
        return _as_matrix(rows, len(texts), self.dim)


class HashProvider:
    """Deterministic pseudo-embeddings: SHA-256 bytes mapped to a unit vector.

    Identical text always yields the identical vector, across runs and
    platforms, which is what reproducibility tests need. Carries no semantic
    signal beyond exact-text identity.
    """

    def __init__(self, dim: int = 16):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim

    def _one(self, text: str) -> np.ndarray:
        data = text.encode("utf-8")
        buf = b""
        counter = 0
        while len(buf) < self.dim * 4:
            buf += hashlib.sha256(data + counter.to_bytes(4, "little")).digest()
            counter += 1
        words = np.frombuffer(buf[: self.dim * 4], dtype="<u4").astype(np.float64)
        vec = words / 2147483648.0 - 1.0  # [-1, 1)
        norm = float(np.linalg.norm(vec))
        return (vec / norm).astype(np.float32)

    def embed(self, texts: list[str]) -> np.ndarray:
        _check_texts(texts)
        return _as_matrix([self._one(t) for t in texts], len(texts), self.dim)


class ServiceProvider:
    """Client for an embedding service speaking the JSON-lines protocol."""

    def __init__(self, address: str, timeout: float = 120.0):
        try:
            self._client = LineClient(address, timeout=timeout)
        except ServiceError as exc:
            raise ProviderError(str(exc)) from exc
        self.dim: int | None = None

    def embed(self, texts: list[str]) -> np.ndarray:
        _check_texts(texts)
        try:
            reply = self._client.request({"op": "embed", "texts": list(texts)})
        except ServiceError as exc:
            raise ProviderError(str(exc)) from exc
        vectors = reply.get("vectors")
        declared = reply.get("dim")
        if vectors is None or declared is None:
            raise ProviderError(f"embed response missing vectors/dim: {sorted(reply)}")
        if self.dim is None:
            self.dim = int(declared)
        elif self.dim != declared:
            raise ProviderError(f"service changed dim mid-session: {self.dim} -> {declared}")
        return _as_matrix(vectors, len(texts), self.dim)

    def close(self) -> None:
        self._client.close()


def build_node_texts(node: TaxonomyNode, strategy: Strategy) -> list[tuple[FieldKind, int, str]]:
    """Expand one node into (field_kind, alt_index, text) entries per strategy.

    Empty descriptions fall back to the preferred label for the single-field
    strategies and are omitted from the multi-field ones; empty fields are
    never sent to a provider.
    """
    label = node.preferred_label
    desc = node.description
    if strategy is Strategy.PREFERRED_LABEL:
        return [(FieldKind.PREFERRED_LABEL, 0, label)]
    if strategy is Strategy.DESCRIPTION:
        return [(FieldKind.DESCRIPTION, 0, desc if desc else label)]
    if strategy is Strategy.LABEL_AND_DESCRIPTION:
        text = f"{label}. {desc}" if desc else label
        return [(FieldKind.LABEL_AND_DESCRIPTION, 0, text)]

    entries: list[tuple[FieldKind, int, str]] = [(FieldKind.PREFERRED_LABEL, 0, label)]
    if desc:
        entries.append((FieldKind.DESCRIPTION, 0, desc))
    if strategy is Strategy.ALL_FIELDS_COMBINED:
        if node.alt_labels:
            entries.append((FieldKind.COMBINED_ALT_LABELS, 0, "\n".join(node.alt_labels)))
        return entries
    for i, alt in enumerate(node.alt_labels):
        entries.append((FieldKind.ALT_LABEL, i, alt))
    return entries


def build_embeddings(
    refset: ReferenceSet,
    strategy: Strategy,
    provider,
    batch_size: int = 64,
    normalize: bool = True,
) -> list[EmbeddingRecord]:
    """Embed every node of a reference set, in stable node order.

    Vectors are L2-normalized in float32 by default so cosine comparison
    downstream reduces to a dot product; cosine scores are unchanged either
    way.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    plan: list[tuple[str, FieldKind, int, str]] = []
    for node in refset:
        for field_kind, alt_index, text in build_node_texts(node, strategy):
            plan.append((node.id, field_kind, alt_index, text))

    records: list[EmbeddingRecord] = []
    for start in range(0, len(plan), batch_size):
        batch = plan[start : start + batch_size]
        try:
            matrix = provider.embed([text for _, _, _, text in batch])
        except ProviderError as exc:
            raise ProviderError(f"while embedding node {batch[0][0]!r}: {exc}") from exc
        for (node_id, field_kind, alt_index, _), row in zip(batch, matrix):
            vec = row
            if normalize:
                norm = float(np.linalg.norm(row))
                if norm == 0.0:
                    raise ProviderError(f"zero-norm vector for node {node_id!r}")
                vec = (row / np.float32(norm)).astype(np.float32)
            records.append(
                EmbeddingRecord(
                    node_id=node_id,
                    entity_kind=refset.entity_kind,
                    field_kind=field_kind,
                    alt_index=alt_index,
                    vector=vec,
                )
            )
    return records


# Binary cache layout, all little-endian:
#   magic "TXLK" | u16 version=1 | u8 normalized | u32 dim | u64 count
#   per record: u16 id-length, id bytes (UTF-8), u8 entity kind, u8 field
#   kind, u16 alt index, dim * f32.
CACHE_MAGIC = b"TXLK"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sHBIQ")
_REC_FIXED = struct.Struct("<BBH")

_KIND_CODES = {EntityKind.OCCUPATION: 0, EntityKind.SKILL: 1, EntityKind.QUALIFICATION: 2}
_KIND_FROM_CODE = {v: k for k, v in _KIND_CODES.items()}


def _records_normalized(records: list[EmbeddingRecord]) -> bool:
    return all(abs(float(np.linalg.norm(r.vector)) - 1.0) <= 1e-5 for r in records)


def cache_save(records: list[EmbeddingRecord], path: str | Path, normalized: bool | None = None) -> None:
    """Write records to the binary cache. ``normalized=None`` auto-detects."""
    dims = {int(r.vector.shape[0]) for r in records}
    if len(dims) > 1:
        raise CacheFormatError(f"records have mixed dims: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    if normalized is None:
        normalized = bool(records) and _records_normalized(records)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, int(normalized), dim, len(records)))
        for rec in records:
            id_bytes = rec.node_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise CacheFormatError(f"node id too long: {rec.node_id[:40]!r}...")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(_REC_FIXED.pack(_KIND_CODES[rec.entity_kind], rec.field_kind.value, rec.alt_index))
            fh.write(np.ascontiguousarray(rec.vector, dtype="<f4").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CacheFormatError(f"truncated cache file while reading {what}")
    return data


def read_cache_header(path: str | Path) -> tuple[int, bool, int, int]:
    """Return (version, normalized, dim, count) without loading the records."""
    with open(path, "rb") as fh:
        magic, version, normalized, dim, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
    if magic != CACHE_MAGIC:
        raise CacheFormatError(f"bad magic {magic!r}, not a vector cache")
    if version != CACHE_VERSION:
        raise CacheFormatError(f"unsupported cache version {version}")
    return version, bool(normalized), dim, count


def cache_load(path: str | Path) -> list[EmbeddingRecord]:
    """Read records back; bit-exact inverse of :func:`cache_save`."""
    with open(path, "rb") as fh:
        magic, version, _normalized, dim, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
        if magic != CACHE_MAGIC:
            raise CacheFormatError(f"bad magic {magic!r}, not a vector cache")
        if version != CACHE_VERSION:
            raise CacheFormatError(f"unsupported cache version {version}")
        records = []
        for i in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(fh, 2, f"record {i} id length"))
            node_id = _read_exact(fh, id_len, f"record {i} id").decode("utf-8")
            kind_code, field_code, alt_index = _REC_FIXED.unpack(
                _read_exact(fh, _REC_FIXED.size, f"record {i} tags")
            )
            if kind_code not in _KIND_FROM_CODE:
                raise CacheFormatError(f"record {i}: unknown entity-kind code {kind_code}")
            try:
                field_kind = FieldKind(field_code)
            except ValueError:
                raise CacheFormatError(f"record {i}: unknown field-kind code {field_code}") from None
            raw = _read_exact(fh, dim * 4, f"record {i} vector")
            vector = np.frombuffer(raw, dtype="<f4").copy()
            records.append(
                EmbeddingRecord(
                    node_id=node_id,
                    entity_kind=_KIND_FROM_CODE[kind_code],
                    field_kind=field_kind,
                    alt_index=alt_index,
                    vector=vector,
                )
            )
        if fh.read(1):
            raise CacheFormatError("trailing bytes after last record")
    return records
