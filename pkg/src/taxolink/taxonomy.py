"""Reference-set ingestion: ESCO occupations, ESCO skills, EQF qualifications.

Canonical CSV schemas (UTF-8, header row mandatory, RFC-4180 quoting):

* occupations.csv / skills.csv: ``id,preferredLabel,altLabels,description``
  where ``altLabels`` is a newline-separated list inside one quoted cell.
* eqf.csv: ``qualification,country,eqf_level``.

Official ESCO v1.1.1 exports do not use these exact columns; see
:func:`canonicalize_esco_export` for the documented mapping.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path


class EntityKind(str, Enum):
    OCCUPATION = "Occupation"
    SKILL = "Skill"
    QUALIFICATION = "Qualification"

    @classmethod
    def parse(cls, value: str) -> "EntityKind":
        low = value.strip().lower()
        for kind in cls:
            if kind.value.lower() == low or kind.name.lower() == low:
                return kind
        raise ValueError(f"unknown entity kind: {value!r}")


class IngestError(Exception):
    """A reference file is missing, malformed, or violates a node invariant."""


NODE_COLUMNS = ["id", "preferredLabel", "altLabels", "description"]
EQF_COLUMNS = ["qualification", "country", "eqf_level"]


@dataclass(frozen=True)
class TaxonomyNode:
    """One ESCO occupation/skill or one EQF qualification entry."""

    id: str
    entity_kind: EntityKind
    preferred_label: str
    description: str = ""
    alt_labels: tuple[str, ...] = ()
    eqf_level: int | None = None
    country: str | None = None

    @property
    def retrieval_label(self) -> str:
        """Label an evaluation compares against: the node id, except for
        qualifications where the target is the level bucket ``EQF<level>``."""
        if self.entity_kind is EntityKind.QUALIFICATION:
            return f"EQF{self.eqf_level}"
        return self.id


@dataclass
class ReferenceSet:
    """An immutable-by-convention collection of nodes of one entity kind."""

    entity_kind: EntityKind
    nodes: tuple[TaxonomyNode, ...]
    version_tag: str = ""
    _by_id: dict[str, TaxonomyNode] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, TaxonomyNode] = {}
        for node in self.nodes:
            if node.entity_kind is not self.entity_kind:
                raise IngestError(
                    f"node {node.id!r} has kind {node.entity_kind.value}, "
                    f"expected {self.entity_kind.value}"
                )
            if node.id in by_id:
                raise IngestError(f"duplicate node id: {node.id!r}")
            by_id[node.id] = node
        self._by_id = by_id

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def get(self, node_id: str) -> TaxonomyNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise KeyError(f"no {self.entity_kind.value} node with id {node_id!r}") from None

    def __contains__(self, node_id: str) -> bool:
        return node_id in self._by_id


def get_node(refset: ReferenceSet, node_id: str) -> TaxonomyNode:
    return refset.get(node_id)


def split_alt_labels(raw: str) -> tuple[str, ...]:
    """Split a newline-separated label cell, trimming each label and dropping
    empties and duplicates (first occurrence wins)."""
    seen = set()
    labels = []
    for part in raw.split("\n"):
        label = part.strip()
        if label and label not in seen:
            seen.add(label)
            labels.append(label)
    return tuple(labels)


def _read_rows(path: str | Path, required: list[str]) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"reference file not found: {path}")
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [col for col in required if col not in header]
            if missing:
                raise IngestError(f"{path}: missing required column(s) {missing}")
            return list(reader)
    except (OSError, csv.Error) as exc:
        raise IngestError(f"{path}: unreadable ({exc})") from exc


def _load_node_csv(path: str | Path, kind: EntityKind, version_tag: str) -> ReferenceSet:
    nodes = []
    seen: set[str] = set()
    for row_no, row in enumerate(_read_rows(path, NODE_COLUMNS), start=2):
        node_id = (row["id"] or "").strip()
        label = (row["preferredLabel"] or "").strip()
        if not node_id:
            raise IngestError(f"{path}: row {row_no}: empty id")
        if not label:
            raise IngestError(f"{path}: row {row_no}: empty preferred label for id {node_id!r}")
        if node_id in seen:
            raise IngestError(f"{path}: duplicate id {node_id!r}")
        seen.add(node_id)
        nodes.append(
            TaxonomyNode(
                id=node_id,
                entity_kind=kind,
                preferred_label=label,
                description=(row["description"] or "").strip(),
                alt_labels=split_alt_labels(row["altLabels"] or ""),
            )
        )
    return ReferenceSet(entity_kind=kind, nodes=tuple(nodes), version_tag=version_tag)


def load_occupations(path: str | Path, version_tag: str = "") -> ReferenceSet:
    """Load the occupations reference set from its canonical CSV."""
    return _load_node_csv(path, EntityKind.OCCUPATION, version_tag)


def load_skills(path: str | Path, version_tag: str = "") -> ReferenceSet:
    """Load the skills reference set from its canonical CSV."""
    return _load_node_csv(path, EntityKind.SKILL, version_tag)


def load_eqf(path: str | Path, version_tag: str = "") -> ReferenceSet:
    """Load the qualifications reference set.

    Each row becomes one node with a synthetic id ``q0001, q0002, ...`` (row
    order), the qualification string as preferred label, and the level bucket
    ``EQF<level>`` as retrieval label.
    """
    nodes = []
    for row_no, row in enumerate(_read_rows(path, EQF_COLUMNS), start=2):
        qualification = (row["qualification"] or "").strip()
        if not qualification:
            raise IngestError(f"{path}: row {row_no}: missing qualification string")
        raw_level = (row["eqf_level"] or "").strip()
        try:
            level = int(raw_level)
        except ValueError:
            raise IngestError(f"{path}: row {row_no}: non-integer eqf_level {raw_level!r}") from None
        if not 1 <= level <= 8:
            raise IngestError(f"{path}: row {row_no}: eqf_level {level} outside 1..8")
        nodes.append(
            TaxonomyNode(
                id=f"q{row_no - 1:04d}",
                entity_kind=EntityKind.QUALIFICATION,
                preferred_label=qualification,
                eqf_level=level,
                country=(row["country"] or "").strip(),
            )
        )
    return ReferenceSet(entity_kind=EntityKind.QUALIFICATION, nodes=tuple(nodes), version_tag=version_tag)


def load_reference_set(path: str | Path, kind: EntityKind, version_tag: str = "") -> ReferenceSet:
    if kind is EntityKind.OCCUPATION:
        return load_occupations(path, version_tag)
    if kind is EntityKind.SKILL:
        return load_skills(path, version_tag)
    return load_eqf(path, version_tag)


def save_reference_set(refset: ReferenceSet, path: str | Path) -> None:
    """Write a reference set back to its canonical CSV (round-trips exactly)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if refset.entity_kind is EntityKind.QUALIFICATION:
            writer.writerow(EQF_COLUMNS)
            for node in refset:
                writer.writerow([node.preferred_label, node.country or "", node.eqf_level])
        else:
            writer.writerow(NODE_COLUMNS)
            for node in refset:
                writer.writerow(
                    [node.id, node.preferred_label, "\n".join(node.alt_labels), node.description]
                )


# Column mapping from official ESCO v1.1.1 classification exports to the
# canonical schema. Occupations carry a short numeric code ("2330.1"); skills
# only have a concept URI, so the URI is the id there.
ESCO_EXPORT_MAPPING = {
    EntityKind.OCCUPATION: {"id": "code", "preferredLabel": "preferredLabel",
                            "altLabels": "altLabels", "description": "description"},
    EntityKind.SKILL: {"id": "conceptUri", "preferredLabel": "preferredLabel",
                       "altLabels": "altLabels", "description": "description"},
}


def canonicalize_esco_export(src: str | Path, dst: str | Path, kind: EntityKind) -> int:
    """Convert an official ESCO v1.1.1 export CSV (occupations_en.csv or
    skills_en.csv) to the canonical schema. Returns the row count."""
    if kind is EntityKind.QUALIFICATION:
        raise ValueError("qualifications are not part of the ESCO exports")
    mapping = ESCO_EXPORT_MAPPING[kind]
    rows = _read_rows(src, list(mapping.values()))
    with open(dst, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(NODE_COLUMNS)
        for row in rows:
            writer.writerow([row[mapping[col]] or "" for col in NODE_COLUMNS])
    return len(rows)
