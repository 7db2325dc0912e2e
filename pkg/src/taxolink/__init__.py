"""taxolink: link plain-text job vacancies to taxonomy nodes.

Two retrieval methodologies over the same vector index: whole-text sentence
linking and mention-level entity linking, plus the evaluation harness that
compares them.
"""

from .embedding import (
    CacheFormatError,
    EmbeddingRecord,
    FieldKind,
    HashProvider,
    ProviderError,
    ReplayProvider,
    ServiceProvider,
    Strategy,
    build_embeddings,
    build_node_texts,
    cache_load,
    cache_save,
)
from .entity_linking import (
    MentionLinkResult,
    MissingIndexError,
    aggregate_to_sentence,
    link_document,
    link_mention,
)
from .entity_recognition import (
    Document,
    GoldReplayLabeler,
    InvalidBioError,
    LabelerError,
    Mention,
    ServiceLabeler,
    Token,
    TokenizedSentence,
    extract_mentions,
    is_valid_bio,
    recognize,
    repair_bio,
    strip_special_tokens,
    tokenize,
)
from .evaluation import (
    EvalError,
    EvalMismatchError,
    EvalReport,
    GoldInstance,
    GoldSpan,
    accuracy_at_1,
    attribute_mentions,
    compare_methods,
    filter_in_kb,
    jaccard,
    span_f1_strict,
)
from .sentence_linking import LinkResult, SentenceQuery, link_sentence, link_title
from .taxonomy import (
    EntityKind,
    IngestError,
    ReferenceSet,
    TaxonomyNode,
    get_node,
    load_eqf,
    load_occupations,
    load_skills,
    save_reference_set,
)
from .vector_index import RankedCandidate, VectorIndex, build_index, cosine, query_top_k

__version__ = "0.1.0"

__all__ = [
    "CacheFormatError",
    "Document",
    "EmbeddingRecord",
    "EntityKind",
    "EvalError",
    "EvalMismatchError",
    "EvalReport",
    "FieldKind",
    "GoldInstance",
    "GoldReplayLabeler",
    "GoldSpan",
    "HashProvider",
    "IngestError",
    "InvalidBioError",
    "LabelerError",
    "LinkResult",
    "Mention",
    "MentionLinkResult",
    "MissingIndexError",
    "ProviderError",
    "RankedCandidate",
    "ReferenceSet",
    "ReplayProvider",
    "SentenceQuery",
    "ServiceLabeler",
    "ServiceProvider",
    "Strategy",
    "TaxonomyNode",
    "Token",
    "TokenizedSentence",
    "VectorIndex",
    "accuracy_at_1",
    "aggregate_to_sentence",
    "attribute_mentions",
    "build_embeddings",
    "build_index",
    "build_node_texts",
    "cache_load",
    "cache_save",
    "compare_methods",
    "cosine",
    "extract_mentions",
    "filter_in_kb",
    "get_node",
    "is_valid_bio",
    "jaccard",
    "link_document",
    "link_mention",
    "link_sentence",
    "link_title",
    "load_eqf",
    "load_occupations",
    "load_skills",
    "query_top_k",
    "recognize",
    "repair_bio",
    "save_reference_set",
    "span_f1_strict",
    "strip_special_tokens",
    "tokenize",
]
