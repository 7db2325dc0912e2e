"""Newline-delimited JSON client used to talk to embedding/labeling services.

One request object per line out, one response object per line back. A response
of the form ``{"error": ...}`` is surfaced as :class:`ServiceError`.
"""

from __future__ import annotations

import json
import socket
import threading


class ServiceError(Exception):
    """The service is unreachable or answered with an error/garbage line."""


def parse_address(address: str) -> tuple[str, int]:
    host, sep, port = address.rpartition(":")
    if not sep or not host:
        raise ServiceError(f"bad service address {address!r}, expected host:port")
    try:
        return host, int(port)
    except ValueError:
        raise ServiceError(f"bad port in service address {address!r}") from None


class LineClient:
    """Blocking JSON-lines client over TCP. One in-flight request at a time;
    a lock makes it safe to share across worker threads."""

    def __init__(self, address: str, timeout: float = 60.0):
        self.address = address
        host, port = parse_address(address)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise ServiceError(f"cannot connect to service at {address}: {exc}") from exc
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")
        self._lock = threading.Lock()

    def request(self, payload: dict) -> dict:
        line = json.dumps(payload, ensure_ascii=False)
        with self._lock:
            try:
                self._writer.write(line + "\n")
                self._writer.flush()
                reply = self._reader.readline()
            except OSError as exc:
                raise ServiceError(f"service i/o failure at {self.address}: {exc}") from exc
        if not reply:
            raise ServiceError(f"service at {self.address} closed the connection")
        try:
            obj = json.loads(reply)
        except json.JSONDecodeError as exc:
            raise ServiceError(f"service sent invalid JSON: {reply[:200]!r}") from exc
        if isinstance(obj, dict) and "error" in obj:
            raise ServiceError(f"service error: {obj['error']}")
        return obj

    def close(self) -> None:
        for stream in (self._writer, self._reader):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self._sock.close()
        except OSError:
            pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
