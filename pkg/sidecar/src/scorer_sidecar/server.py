"""Line-protocol request loop.

One JSON record per line. ``{id, tokens}`` answers ``{id, labels}``;
``{id, tokens, span, candidate}`` answers ``{id, similarity}``; anything
the server cannot act on answers ``{id, error}`` and the loop continues.
Tokens past ``max_seq_len`` are never shown to the backend: their labels
are O and the response carries ``truncated: true``.
"""

from __future__ import annotations

import json
import logging
import math
import socketserver
from typing import IO

from .backends import Backend
from .config import SidecarConfig

logger = logging.getLogger(__name__)


def _error(rid: object, message: str) -> dict:
    return {"id": rid, "error": message}


def _request_id(record: dict) -> int | None:
    try:
        return int(record["id"])
    except (KeyError, TypeError, ValueError):
        return None


def handle_record(record: object, backend: Backend, config: SidecarConfig) -> dict:
    """Answer one decoded request record. Always returns a response record."""
    if not isinstance(record, dict):
        return _error(None, "request must be a JSON object")
    rid = _request_id(record)
    if rid is None:
        return _error(None, "request is missing an integer 'id'")

    tokens = record.get("tokens")
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        return _error(rid, "request is missing a string-array 'tokens' field")
    window = tokens[: config.max_seq_len]

    if "span" in record or "candidate" in record:
        span = record.get("span")
        candidate = record.get("candidate")
        if (
            not isinstance(span, list)
            or len(span) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in span)
        ):
            return _error(rid, "'span' must be a [start, end] pair of integers")
        if not isinstance(candidate, str) or not candidate:
            return _error(rid, "'candidate' must be a non-empty string")
        start, end = span
        if not 0 <= start < end <= len(tokens):
            return _error(rid, f"span [{start}, {end}) out of range for {len(tokens)} tokens")
        if end > len(window):
            return _error(rid, "span extends past the tagging window")
        try:
            value = float(backend.similarity(window, (start, end), candidate))
        except Exception as exc:  # backend failures must not kill the loop
            logger.exception("similarity failed for id %d", rid)
            return _error(rid, f"similarity failed: {exc}")
        if not math.isfinite(value):
            return _error(rid, "backend produced a non-finite similarity")
        return {"id": rid, "similarity": value}

    try:
        labels = list(backend.tag(window))
    except Exception as exc:
        logger.exception("tagging failed for id %d", rid)
        return _error(rid, f"tagging failed: {exc}")
    if len(labels) != len(window) or not all(isinstance(x, str) for x in labels):
        return _error(rid, f"backend returned {len(labels)} labels for {len(window)} tokens")
    response: dict = {"id": rid, "labels": labels + ["O"] * (len(tokens) - len(window))}
    if len(window) < len(tokens):
        response["truncated"] = True
    return response


def serve(config: SidecarConfig, backend: Backend, reader: IO[bytes], writer: IO[bytes]) -> int:
    """Answer requests from ``reader`` until end-of-stream.

    Returns the number of records answered. Every response is flushed
    immediately; callers on the other end of a pipe block on it.
    """
    answered = 0
    for raw in reader:
        line = raw.decode("utf-8", errors="replace").strip()
        if not line:
            continue
        try:
            record: object = json.loads(line)
        except json.JSONDecodeError:
            logger.warning("malformed request line: %r", line[:200])
            response = _error(None, "malformed request line")
        else:
            response = handle_record(record, backend, config)
        try:
            writer.write((json.dumps(response, ensure_ascii=False) + "\n").encode("utf-8"))
            writer.flush()
        except (BrokenPipeError, ValueError):
            logger.info("client went away after %d records", answered)
            return answered
        answered += 1
    return answered


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        count = serve(self.server.sidecar_config, self.server.sidecar_backend, self.rfile, self.wfile)
        logger.info("connection from %s closed after %d records", self.client_address, count)


class SidecarServer(socketserver.TCPServer):
    """Sequential TCP front end; one connection served at a time."""

    allow_reuse_address = True

    def __init__(self, address: tuple[str, int], config: SidecarConfig, backend: Backend):
        super().__init__(address, _Handler)
        self.sidecar_config = config
        self.sidecar_backend = backend
