"""Mention detection: tokenize, obtain BIO labels, repair them, emit mentions.

Labels are plain strings: ``"O"``, ``"B-Skill"``, ``"I-Occupation"``, ... over
the three entity kinds. The sequence labeler itself is pluggable; this module
ships a gold-replay labeler (labels read from an annotation file) and a
JSON-lines service client.

Token indices: every mention carries a document-global token span, counted
over the label-bearing token stream (i.e. after special-token removal), which
is what overlap-based attribution downstream indexes against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

from .lineproto import LineClient, ServiceError
from .taxonomy import EntityKind


class LabelerError(Exception):
    """Labeler unavailable, or its output violates the labeling contract."""


class InvalidBioError(ValueError):
    """A label sequence reached extraction without being repaired first."""


BIO_KINDS = tuple(kind.value for kind in EntityKind)

SPECIAL_TOKENS = frozenset({"[SEP]", "[CLS]", "[PAD]", "[UNK]", "<s>", "</s>", "<pad>"})

ABBREVIATIONS = frozenset({"e.g.", "i.e.", "etc.", "Mr.", "Ms.", "Dr.", "vs.", "No."})

PUNCT_CHARS = frozenset(".,;:!?()[]{}'\"/&")

_SENTENCE_END = frozenset(".!?")


@dataclass(frozen=True)
class Document:
    text: str
    id: str = ""

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("document text is empty")


class Token(NamedTuple):
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class TokenizedSentence:
    tokens: tuple[Token, ...]
    sentence_index: int
    first_token_index: int
    source: str  # the full document text the offsets refer to

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Mention:
    """A contiguous token run hypothesized to denote one taxonomy entity."""

    entity_kind: EntityKind
    sentence_index: int
    token_span: tuple[int, int]  # document-global, end exclusive
    char_span: tuple[int, int]
    surface: str  # exact document slice
    joined: str  # covered token surfaces joined by single spaces

    def token_set(self) -> frozenset[int]:
        return frozenset(range(self.token_span[0], self.token_span[1]))


def bio_parse(label: str) -> tuple[str, str | None]:
    """Split a BIO label into (prefix, kind); raises on anything outside the
    O / B-kind / I-kind vocabulary."""
    if label == "O":
        return "O", None
    if len(label) > 2 and label[1] == "-" and label[0] in "BI":
        kind = label[2:]
        if kind in BIO_KINDS:
            return label[0], kind
    raise ValueError(f"invalid BIO label {label!r}")


def is_valid_bio(labels: list[str]) -> bool:
    """True when every I- tag continues a same-kind B-/I- tag."""
    prev_prefix, prev_kind = "O", None
    for label in labels:
        prefix, kind = bio_parse(label)
        if prefix == "I" and not (prev_prefix in ("B", "I") and prev_kind == kind):
            return False
        prev_prefix, prev_kind = prefix, kind
    return True


def tokenize(doc: Document) -> list[TokenizedSentence]:
    """Deterministic rule-based chunking.

    Sentences split after ``.``, ``!`` or ``?`` followed by whitespace, unless
    the whitespace-delimited chunk ending there is a known abbreviation.
    Tokens split on whitespace with punctuation characters detached as
    single-character tokens; offsets always slice the document to the token
    surface.
    """
    text = doc.text
    n = len(text)
    spans: list[tuple[int, int]] = []
    start = 0
    i = 0
    while i < n:
        if text[i] in _SENTENCE_END and i + 1 < n and text[i + 1].isspace():
            j = i
            while j > start and not text[j - 1].isspace():
                j -= 1
            if text[j : i + 1] not in ABBREVIATIONS:
                spans.append((start, i + 1))
                i += 1
                while i < n and text[i].isspace():
                    i += 1
                start = i
                continue
        i += 1
    if start < n:
        spans.append((start, n))

    sentences = []
    token_cursor = 0
    for lo, hi in spans:
        tokens = _tokenize_span(text, lo, hi)
        if not tokens:
            continue
        sentences.append(
            TokenizedSentence(
                tokens=tuple(tokens),
                sentence_index=len(sentences),
                first_token_index=token_cursor,
                source=text,
            )
        )
        token_cursor += len(tokens)
    return sentences


def _tokenize_span(text: str, lo: int, hi: int) -> list[Token]:
    tokens = []
    i = lo
    while i < hi:
        if text[i].isspace():
            i += 1
        elif text[i] in PUNCT_CHARS:
            tokens.append(Token(text[i], i, i + 1))
            i += 1
        else:
            j = i
            while j < hi and not text[j].isspace() and text[j] not in PUNCT_CHARS:
                j += 1
            tokens.append(Token(text[i:j], i, j))
            i = j
    return tokens


def sentences_from_tokens(token_lists: list[list[str]]) -> list[TokenizedSentence]:
    """Build sentences over a synthetic document (tokens joined by single
    spaces, sentences by newlines) from pre-tokenized input, e.g. an
    annotation file's own token lists."""
    parts: list[str] = []
    cursor = 0
    token_cursor = 0
    built: list[tuple[list[Token], int]] = []
    for token_list in token_lists:
        tokens = []
        for j, surface in enumerate(token_list):
            if parts:
                parts.append("\n" if j == 0 else " ")
                cursor += 1
            elif j > 0:
                parts.append(" ")
                cursor += 1
            tokens.append(Token(surface, cursor, cursor + len(surface)))
            parts.append(surface)
            cursor += len(surface)
        built.append((tokens, token_cursor))
        token_cursor += len(tokens)
    source = "".join(parts)
    return [
        TokenizedSentence(tokens=tuple(tokens), sentence_index=idx,
                          first_token_index=first, source=source)
        for idx, (tokens, first) in enumerate(built)
    ]


def strip_special_tokens(tokens: list, labels: list[str], special=SPECIAL_TOKENS) -> tuple[list, list[str]]:
    """Drop positions whose token surface is a special marker, from tokens and
    labels in lockstep. Tokens may be strings or :class:`Token` objects."""
    if len(tokens) != len(labels):
        raise ValueError(f"{len(tokens)} tokens vs {len(labels)} labels")
    kept_tokens, kept_labels = [], []
    for token, label in zip(tokens, labels):
        surface = token.surface if isinstance(token, Token) else token
        if surface in special:
            continue
        kept_tokens.append(token)
        kept_labels.append(label)
    return kept_tokens, kept_labels


def repair_bio(labels: list[str]) -> list[str]:
    """Normalize a raw label sequence into valid BIO.

    Three corrections, in order: (a) an O directly between a B/I and an I of
    the same kind becomes that I; (b) a lone sentence-final I with no
    same-kind B/I right before it becomes O; (c) any remaining I whose
    predecessor is O or another kind becomes a B of its own kind.
    """
    out = list(labels)
    n = len(out)
    for t in range(1, n - 1):
        if out[t] != "O":
            continue
        prev_prefix, prev_kind = bio_parse(out[t - 1])
        next_prefix, next_kind = bio_parse(out[t + 1])
        if prev_prefix in ("B", "I") and next_prefix == "I" and prev_kind == next_kind:
            out[t] = f"I-{next_kind}"
    if n:
        last_prefix, last_kind = bio_parse(out[-1])
        if last_prefix == "I":
            prev_ok = False
            if n > 1:
                prev_prefix, prev_kind = bio_parse(out[-2])
                prev_ok = prev_prefix in ("B", "I") and prev_kind == last_kind
            if not prev_ok:
                out[-1] = "O"
    for t in range(n):
        prefix, kind = bio_parse(out[t])
        if prefix != "I":
            continue
        headless = t == 0
        if not headless:
            prev_prefix, prev_kind = bio_parse(out[t - 1])
            headless = prev_prefix == "O" or prev_kind != kind
        if headless:
            out[t] = f"B-{kind}"
    return out


def extract_mentions(sentence: TokenizedSentence, labels: list[str]) -> list[Mention]:
    """Turn maximal B I* runs into mentions. Expects repaired labels; an
    orphan I- tag means the repair step was skipped and raises."""
    tokens = sentence.tokens
    if len(labels) != len(tokens):
        raise ValueError(f"{len(tokens)} tokens vs {len(labels)} labels")
    mentions = []
    t = 0
    while t < len(labels):
        prefix, kind = bio_parse(labels[t])
        if prefix == "I":
            raise InvalidBioError(f"orphan {labels[t]!r} at token {t}; repair_bio was skipped")
        if prefix == "O":
            t += 1
            continue
        start = t
        t += 1
        while t < len(labels):
            nxt_prefix, nxt_kind = bio_parse(labels[t])
            if nxt_prefix == "I" and nxt_kind == kind:
                t += 1
            else:
                break
        run = tokens[start:t]
        char_span = (run[0].start, run[-1].end)
        mentions.append(
            Mention(
                entity_kind=EntityKind(kind),
                sentence_index=sentence.sentence_index,
                token_span=(sentence.first_token_index + start, sentence.first_token_index + t),
                char_span=char_span,
                surface=sentence.source[char_span[0] : char_span[1]],
                joined=" ".join(tok.surface for tok in run),
            )
        )
    return mentions


def mentions_to_bio(length: int, mentions: list[Mention], first_token_index: int = 0) -> list[str]:
    """Inverse of extraction for one sentence: lay mentions back onto a label
    sequence of the given length."""
    labels = ["O"] * length
    for mention in mentions:
        lo = mention.token_span[0] - first_token_index
        hi = mention.token_span[1] - first_token_index
        labels[lo] = f"B-{mention.entity_kind.value}"
        for t in range(lo + 1, hi):
            labels[t] = f"I-{mention.entity_kind.value}"
    return labels


@dataclass(frozen=True)
class GoldEntity:
    kind: str
    sentence: int
    start: int
    end: int
    gold_id: str


@dataclass(frozen=True)
class AnnotatedDoc:
    doc_id: str
    sentences: tuple[tuple[str, ...], ...]
    labels: tuple[tuple[str, ...], ...]
    entities: tuple[GoldEntity, ...]


class GoldReplayLabeler:
    """Replays labels recorded in an annotation file (JSON Lines, one object
    per document with parallel ``tokens`` and ``labels`` sentence lists)."""

    def __init__(self, docs: list[AnnotatedDoc]):
        self.docs = {doc.doc_id: doc for doc in docs}
        self._by_tokens: dict[tuple[str, ...], tuple[str, ...]] = {}
        for doc in docs:
            for sent_tokens, sent_labels in zip(doc.sentences, doc.labels):
                if len(sent_tokens) != len(sent_labels):
                    raise LabelerError(
                        f"doc {doc.doc_id!r}: {len(sent_tokens)} tokens vs {len(sent_labels)} labels"
                    )
                self._by_tokens[sent_tokens] = sent_labels

    @classmethod
    def from_file(cls, path: str | Path) -> "GoldReplayLabeler":
        docs = []
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise LabelerError(f"{path}:{line_no}: invalid JSON ({exc})") from exc
                docs.append(
                    AnnotatedDoc(
                        doc_id=str(obj["id"]),
                        sentences=tuple(tuple(s) for s in obj["tokens"]),
                        labels=tuple(tuple(s) for s in obj["labels"]),
                        entities=tuple(
                            GoldEntity(
                                kind=e["kind"],
                                sentence=e["sentence"],
                                start=e["start"],
                                end=e["end"],
                                gold_id=e["gold_id"],
                            )
                            for e in obj.get("entities", [])
                        ),
                    )
                )
        return cls(docs)

    def doc_sentences(self, doc_id: str) -> list[list[str]] | None:
        doc = self.docs.get(doc_id)
        return [list(s) for s in doc.sentences] if doc else None

    def label(self, tokens: list[str]) -> list[str]:
        labels = self._by_tokens.get(tuple(tokens))
        if labels is None:
            raise LabelerError(f"no recorded labels for token sequence {tokens[:8]!r}...")
        return list(labels)


class ServiceLabeler:
    """Client for a token-classification service speaking the JSON-lines
    protocol (request ``{"op": "label", "tokens": [[...], ...]}``)."""

    def __init__(self, address: str, timeout: float = 120.0):
        try:
            self._client = LineClient(address, timeout=timeout)
        except ServiceError as exc:
            raise LabelerError(str(exc)) from exc

    def label_batch(self, batch: list[list[str]]) -> list[list[str]]:
        try:
            reply = self._client.request({"op": "label", "tokens": [list(s) for s in batch]})
        except ServiceError as exc:
            raise LabelerError(str(exc)) from exc
        labels = reply.get("labels")
        if labels is None or len(labels) != len(batch):
            raise LabelerError(f"label response malformed: {str(reply)[:200]}")
        return [list(s) for s in labels]

    def label(self, tokens: list[str]) -> list[str]:
        return self.label_batch([tokens])[0]

    def close(self) -> None:
        self._client.close()


def _label_all(labeler, batch: list[list[str]]) -> list[list[str]]:
    if hasattr(labeler, "label_batch"):
        label_sets = labeler.label_batch(batch)
    else:
        label_sets = [labeler.label(tokens) for tokens in batch]
    for tokens, labels in zip(batch, label_sets):
        if len(labels) != len(tokens):
            raise LabelerError(f"labeler returned {len(labels)} labels for {len(tokens)} tokens")
        for label in labels:
            try:
                bio_parse(label)
            except ValueError as exc:
                raise LabelerError(str(exc)) from exc
    return label_sets


def recognize_sentences(sentences: list[TokenizedSentence], labeler,
                        special=SPECIAL_TOKENS) -> list[Mention]:
    """Label, strip specials, repair, and extract — over pre-built sentences."""
    if not sentences:
        return []
    label_sets = _label_all(labeler, [s.surfaces() for s in sentences])
    mentions = []
    token_cursor = 0
    for sentence, labels in zip(sentences, label_sets):
        kept_tokens, kept_labels = strip_special_tokens(list(sentence.tokens), labels, special)
        repaired = repair_bio(kept_labels)
        stripped = TokenizedSentence(
            tokens=tuple(kept_tokens),
            sentence_index=sentence.sentence_index,
            first_token_index=token_cursor,
            source=sentence.source,
        )
        mentions.extend(extract_mentions(stripped, repaired))
        token_cursor += len(kept_tokens)
    return mentions


def recognize(doc: Document, labeler) -> list[Mention]:
    """Full mention-detection pipeline over a raw document."""
    return recognize_sentences(tokenize(doc), labeler)
