"""Newline-delimited JSON server over stdio or TCP.

One request object per line, one response object per line. Malformed requests
answer ``{"error": ...}`` and the connection stays open. Requests:

* ``{"op": "embed", "texts": [...]}`` ->
  ``{"vectors": [[...], ...], "dim": n}`` plus ``"truncated": [i, ...]``
  when any input exceeded the token budget;
* ``{"op": "label", "tokens": [[...], ...]}`` -> ``{"labels": [[...], ...]}``
  plus ``"mapped_to_o": n`` when out-of-vocabulary labels were guarded.
"""

from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass

from .backends import BackendError, guard_vocabulary, make_embedder, make_labeler


@dataclass
class BridgeConfig:
    embed_model: str | None = None
    label_model: str | None = None
    max_tokens: int = 256
    normalize: bool = True
    listen: str | None = None  # host:port; None means stdio

    def __post_init__(self) -> None:
        if not self.embed_model and not self.label_model:
            raise ValueError("configure at least one of embed_model/label_model")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


class Bridge:
    """Request handling shared by the stdio and TCP frontends."""

    def __init__(self, config: BridgeConfig):
        self.config = config
        self.embedder = (make_embedder(config.embed_model, config.max_tokens)
                         if config.embed_model else None)
        self.labeler = (make_labeler(config.label_model, config.max_tokens)
                        if config.label_model else None)
        self.vocabulary_warnings = 0
        self._lock = threading.Lock()

    # -- request handlers --------------------------------------------

    def handle_embed(self, request: dict) -> dict:
        if self.embedder is None:
            return {"error": "no embedding model configured"}
        texts = request.get("texts")
        if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
            return {"error": "embed request needs a list of strings under 'texts'"}
        truncated = []
        prepared = []
        for i, text in enumerate(texts):
            if self.embedder.token_count(text) > self.config.max_tokens:
                truncated.append(i)
                text = self.embedder.truncate(text, self.config.max_tokens)
            prepared.append(text)
        matrix = self.embedder.encode(prepared, self.config.normalize)
        dim = int(matrix.shape[1]) if matrix.size else int(getattr(self.embedder, "dim"))
        reply = {"vectors": [row.tolist() for row in matrix], "dim": dim}
        if truncated:
            reply["truncated"] = truncated
        return reply

    def handle_label(self, request: dict) -> dict:
        if self.labeler is None:
            return {"error": "no token-classification model configured"}
        tokens = request.get("tokens")
        if (not isinstance(tokens, list)
                or any(not isinstance(s, list) for s in tokens)
                or any(not isinstance(t, str) for s in tokens for t in s)):
            return {"error": "label request needs a list of token lists under 'tokens'"}
        label_sets, mapped = self.labeler.label_sentences(tokens)
        guarded_sets = []
        for labels in label_sets:
            guarded, extra = guard_vocabulary(labels)
            mapped += extra
            guarded_sets.append(guarded)
        with self._lock:
            self.vocabulary_warnings += mapped
        reply = {"labels": guarded_sets}
        if mapped:
            reply["mapped_to_o"] = mapped
        return reply

    def handle_line(self, line: str) -> dict:
        try:
            request = json.loads(line)
        except json.JSONDecodeError as exc:
            return {"error": f"invalid JSON: {exc}"}
        if not isinstance(request, dict):
            return {"error": "request must be a JSON object"}
        op = request.get("op")
        try:
            if op == "embed":
                return self.handle_embed(request)
            if op == "label":
                return self.handle_label(request)
        except BackendError as exc:
            return {"error": str(exc)}
        return {"error": f"unknown op {op!r}"}

    # -- frontends -----------------------------------------------------

    def serve_stdio(self, stdin, stdout) -> None:
        for line in stdin:
            if not line.strip():
                continue
            reply = self.handle_line(line)
            stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
            stdout.flush()

    def serve_tcp(self, ready=None, stop=None) -> None:
        host, _, port = self.config.listen.rpartition(":")
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, int(port)))
        sock.listen(16)
        if ready is not None:
            ready(sock.getsockname())
        try:
            while stop is None or not stop.is_set():
                try:
                    conn, _ = sock.accept()
                except OSError:
                    break
                threading.Thread(target=self._serve_connection, args=(conn,),
                                 daemon=True).start()
        finally:
            sock.close()

    def _serve_connection(self, conn) -> None:
        with conn, conn.makefile("r", encoding="utf-8") as reader, \
                conn.makefile("w", encoding="utf-8") as writer:
            for line in reader:
                if not line.strip():
                    continue
                reply = self.handle_line(line)
                try:
                    writer.write(json.dumps(reply, ensure_ascii=False) + "\n")
                    writer.flush()
                except OSError:
                    return
