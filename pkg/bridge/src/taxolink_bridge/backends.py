"""Model backends behind the bridge protocols.

Two families, each with a deterministic built-in test backend so the protocol
can be exercised hermetically, plus lazily-loaded real models:

* embedding: ``hash:<dim>`` (SHA-256 pseudo-vectors) or any
  sentence-transformers model id;
* labeling: ``demo`` (capitalized runs become Skill mentions) or any
  transformers token-classification model id.
"""

from __future__ import annotations

import hashlib

import numpy as np

BIO_VOCABULARY = frozenset(
    ["O"] + [f"{p}-{k}" for k in ("Occupation", "Skill", "Qualification") for p in "BI"]
)


class BackendError(Exception):
    pass


# --- embedding ----------------------------------------------------------


class HashEmbedder:
    """Deterministic pseudo-embeddings for tests: SHA-256 bytes to a unit
    vector. Token count = whitespace words, so truncation is observable."""

    def __init__(self, dim: int = 16):
        if dim < 1:
            raise BackendError("hash embedder dim must be >= 1")
        self.dim = dim

    def token_count(self, text: str) -> int:
        return len(text.split())

    def truncate(self, text: str, max_tokens: int) -> str:
        return " ".join(text.split()[:max_tokens])

    def encode(self, texts: list[str], normalize: bool) -> np.ndarray:
        rows = []
        for text in texts:
            buf = b""
            counter = 0
            data = text.encode("utf-8")
            while len(buf) < self.dim * 4:
                buf += hashlib.sha256(b"bridge:" + data + counter.to_bytes(4, "little")).digest()
                counter += 1
            words = np.frombuffer(buf[: self.dim * 4], dtype="<u4").astype(np.float64)
            vec = words / 2147483648.0 - 1.0
            if normalize:
                vec = vec / np.linalg.norm(vec)
            rows.append(vec.astype(np.float32))
        return np.vstack(rows) if rows else np.zeros((0, self.dim), dtype=np.float32)


class SentenceTransformerEmbedder:
    """Wraps a sentence-transformers model; loaded on first use."""

    def __init__(self, model_id: str, max_tokens: int):
        self.model_id = model_id
        self._max_tokens = max_tokens
        self._model = None

    def _load(self):
        if self._model is None:
            try:
                from sentence_transformers import SentenceTransformer
            except ImportError as exc:
                raise BackendError(
                    f"sentence-transformers not installed; cannot load {self.model_id!r}"
                ) from exc
            self._model = SentenceTransformer(self.model_id)
            self._model.max_seq_length = self._max_tokens
        return self._model

    @property
    def dim(self) -> int:
        return int(self._load().get_sentence_embedding_dimension())

    def token_count(self, text: str) -> int:
        tokenizer = self._load().tokenizer
        return len(tokenizer(text, add_special_tokens=True)["input_ids"])

    def truncate(self, text: str, max_tokens: int) -> str:
        # the model truncates internally; text passes through unchanged
        return text

    def encode(self, texts: list[str], normalize: bool) -> np.ndarray:
        model = self._load()
        if not texts:
            return np.zeros((0, self.dim), dtype=np.float32)
        out = model.encode(list(texts), normalize_embeddings=normalize,
                           convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(out, dtype=np.float32)


def make_embedder(spec: str, max_tokens: int):
    if spec.startswith("hash:") or spec == "hash":
        _, _, arg = spec.partition(":")
        return HashEmbedder(int(arg) if arg else 16)
    return SentenceTransformerEmbedder(spec, max_tokens)


# --- labeling -----------------------------------------------------------


class DemoLabeler:
    """Deterministic rule labeler for tests: maximal runs of capitalized
    tokens become one Skill mention each."""

    def label_sentences(self, batch: list[list[str]]) -> tuple[list[list[str]], int]:
        out = []
        for tokens in batch:
            labels = []
            in_run = False
            for token in tokens:
                if token[:1].isupper():
                    labels.append("I-Skill" if in_run else "B-Skill")
                    in_run = True
                else:
                    labels.append("O")
                    in_run = False
            out.append(labels)
        return out, 0


def collapse_word_labels(word_ids: list[int | None], subword_labels: list[str],
                         word_count: int) -> list[str]:
    """First-subword collapse: each word takes the label of its first
    subword; words never reached (over-long input) default to O."""
    labels = ["O"] * word_count
    seen: set[int] = set()
    for word_id, label in zip(word_ids, subword_labels):
        if word_id is None or word_id in seen:
            continue
        seen.add(word_id)
        if word_id < word_count:
            labels[word_id] = label
    return labels


def guard_vocabulary(labels: list[str]) -> tuple[list[str], int]:
    """Map anything outside the O/B-kind/I-kind vocabulary to O; return the
    guarded labels and how many were mapped."""
    mapped = 0
    out = []
    for label in labels:
        if label in BIO_VOCABULARY:
            out.append(label)
        else:
            out.append("O")
            mapped += 1
    return out, mapped


class TransformersLabeler:
    """Wraps a transformers token-classification model, word-level output via
    first-subword collapse; loaded on first use."""

    def __init__(self, model_id: str, max_tokens: int):
        self.model_id = model_id
        self.max_tokens = max_tokens
        self._pair = None

    def _load(self):
        if self._pair is None:
            try:
                import torch  # noqa: F401
                from transformers import AutoModelForTokenClassification, AutoTokenizer
            except ImportError as exc:
                raise BackendError(
                    f"transformers/torch not installed; cannot load {self.model_id!r}"
                ) from exc
            tokenizer = AutoTokenizer.from_pretrained(self.model_id)
            model = AutoModelForTokenClassification.from_pretrained(self.model_id)
            model.eval()
            self._pair = (tokenizer, model)
        return self._pair

    def label_sentences(self, batch: list[list[str]]) -> tuple[list[list[str]], int]:
        import torch

        tokenizer, model = self._load()
        out: list[list[str]] = []
        mapped_total = 0
        for tokens in batch:
            if not tokens:
                out.append([])
                continue
            encoding = tokenizer(tokens, is_split_into_words=True, return_tensors="pt",
                                 truncation=True, max_length=self.max_tokens)
            with torch.no_grad():
                logits = model(**encoding).logits[0]
            ids = logits.argmax(dim=-1).tolist()
            subword_labels = [model.config.id2label[i] for i in ids]
            word_labels = collapse_word_labels(encoding.word_ids(0), subword_labels, len(tokens))
            guarded, mapped = guard_vocabulary(word_labels)
            mapped_total += mapped
            out.append(guarded)
        return out, mapped_total


def make_labeler(spec: str, max_tokens: int):
    if spec == "demo":
        return DemoLabeler()
    return TransformersLabeler(spec, max_tokens)
