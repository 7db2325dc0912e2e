import csv
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from taxolink.taxonomy import EntityKind, ReferenceSet, TaxonomyNode


def write_node_csv(path, rows):
    """rows: (id, preferredLabel, altLabels, description) tuples."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "preferredLabel", "altLabels", "description"])
        writer.writerows(rows)


def write_eqf_csv(path, rows):
    """rows: (qualification, country, eqf_level) tuples."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["qualification", "country", "eqf_level"])
        writer.writerows(rows)


@pytest.fixture
def cook_node():
    return TaxonomyNode(
        id="s1", entity_kind=EntityKind.SKILL, preferred_label="cook",
        description="prepares food", alt_labels=("chef", "line cook"),
    )


@pytest.fixture
def five_node_set():
    """Five occupations with 0..3 alt labels and one empty description."""
    nodes = (
        TaxonomyNode(id="o1", entity_kind=EntityKind.OCCUPATION,
                     preferred_label="baker", description="bakes bread"),
        TaxonomyNode(id="o2", entity_kind=EntityKind.OCCUPATION,
                     preferred_label="cook", description="prepares food",
                     alt_labels=("chef",)),
        TaxonomyNode(id="o3", entity_kind=EntityKind.OCCUPATION,
                     preferred_label="teacher", description="",
                     alt_labels=("tutor", "educator")),
        TaxonomyNode(id="o4", entity_kind=EntityKind.OCCUPATION,
                     preferred_label="nurse", description="cares for patients",
                     alt_labels=("carer", "aide", "orderly")),
        TaxonomyNode(id="o5", entity_kind=EntityKind.OCCUPATION,
                     preferred_label="welder", description="joins metal"),
    )
    return ReferenceSet(entity_kind=EntityKind.OCCUPATION, nodes=nodes, version_tag="fixture")
