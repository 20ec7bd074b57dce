"""Plausibility scorers: the tagging contract, a gazetteer tagger, and a
line-protocol client for external taggers.

A scorer maps tokens to a valid BIO label sequence of the same length.
The gazetteer tagger compiles the training split's entity inventories
into a longest-match tagger and needs no model downloads. The external
client speaks newline-delimited JSON records over a subprocess pipe or a
TCP socket, correlating concurrent requests by integer id.
"""

from __future__ import annotations

import itertools
import json
import logging
import socket
import subprocess
import threading
from dataclasses import dataclass
from typing import IO, Callable, Protocol, Sequence

from .corpus import (
    BIO_LABELS,
    Corpus,
    SurfaceMatcher,
    build_type_inventories,
    rebuild_labels,
)
from .corpus import EntityMention

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


class ScorerError(Exception):
    """Base class for scorer failures."""


class ScorerTransportError(ScorerError):
    """Endpoint unreachable, stream closed, or malformed frame."""


class ScorerTimeoutError(ScorerTransportError):
    """No response for a request within the deadline."""


class ScorerContractError(ScorerError):
    """Remote answered, but the labels violate the tagging contract."""


class Scorer(Protocol):
    def tag(self, tokens: Sequence[str]) -> tuple[str, ...]:
        """Return one BIO label per token."""
        ...


def _check_labels(
    tokens: Sequence[str], labels: Sequence[str], lenient: bool
) -> tuple[str, ...]:
    """Enforce the contract: length match, known tags, legal B/I structure."""
    if len(labels) != len(tokens):
        raise ScorerContractError(
            f"{len(tokens)} tokens but {len(labels)} labels from scorer"
        )
    out = list(labels)
    prev = "O"
    for i, lab in enumerate(out):
        if lab not in BIO_LABELS:
            raise ScorerContractError(f"unknown label {lab!r} from scorer")
        if lab.startswith("I-") and prev != lab and prev != "B-" + lab[2:]:
            if not lenient:
                raise ScorerContractError(
                    f"illegal {lab} at position {i} (previous label {prev!r})"
                )
            logger.warning("repaired illegal %s at position %d to B-%s", lab, i, lab[2:])
            out[i] = lab = "B-" + lab[2:]
        prev = lab
    return tuple(out)


class GazetteerScorer:
    """Longest-match tagger over the entity inventories of a training corpus.

    Overlap resolution (longest, then leftmost, then PER > LOC > ORG)
    reuses the shared surface matcher, so this tagger and the
    missing-annotation mapper always agree. Stateless after construction;
    safe for concurrent use.
    """

    def __init__(self, matcher: SurfaceMatcher):
        self._matcher = matcher

    def tag(self, tokens: Sequence[str]) -> tuple[str, ...]:
        spans = self._matcher.match(tokens)
        mentions = [
            EntityMention(0, start, length, etype, " ".join(tokens[start : start + length]))
            for start, length, etype in spans
        ]
        return rebuild_labels(len(tokens), mentions)


def gazetteer_tagger(train: Corpus) -> GazetteerScorer:
    """Compile a gazetteer scorer from a BIO training corpus.

    The inventories come from the split being augmented; a stand-in for a
    fine-tuned validator, so any surface unseen in training tags as O.
    """
    if not train.sentences:
        raise ValueError("cannot compile a gazetteer from an empty corpus")
    inventories = build_type_inventories(train)
    if not any(inventories.values()):
        logger.warning("training corpus has no entity mentions; gazetteer will tag all O")
    logger.info(
        "gazetteer inventories: %s",
        {t: len(s) for t, s in inventories.items()},
    )
    return GazetteerScorer(SurfaceMatcher(inventories))


@dataclass(frozen=True)
class ExternalScorerConfig:
    """Where the external tagger lives and how strictly to hold it.

    Exactly one of ``command`` (subprocess argv) or ``address``
    ((host, port) TCP endpoint) must be set.
    """

    command: tuple[str, ...] | None = None
    address: tuple[str, int] | None = None
    timeout: float = DEFAULT_TIMEOUT
    lenient: bool = False

    def __post_init__(self) -> None:
        if (self.command is None) == (self.address is None):
            raise ValueError("exactly one of command or address must be given")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")


class _Pending:
    __slots__ = ("event", "payload")

    def __init__(self) -> None:
        self.event = threading.Event()
        self.payload: dict | None = None


class ExternalScorer:
    """Client for the line-protocol tagger; supports concurrent requests.

    One record per UTF-8 line. Requests carry {id, tokens}; the remote
    answers each exactly once with {id, labels} or {id, error}. A reader
    thread dispatches responses to waiters by id, so calls from multiple
    threads can be in flight at once and per-connection ordering is never
    assumed. Also speaks the similarity extension
    {id, tokens, span, candidate} -> {id, similarity}.
    """

    def __init__(self, config: ExternalScorerConfig):
        self._config = config
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._pending: dict[int, _Pending] = {}
        self._closed = False
        self._proc: subprocess.Popen | None = None
        self._sock: socket.socket | None = None

        if config.command is not None:
            try:
                self._proc = subprocess.Popen(
                    config.command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            except OSError as exc:
                raise ScorerTransportError(f"cannot spawn scorer: {exc}") from exc
            assert self._proc.stdin is not None and self._proc.stdout is not None
            self._writer: IO[bytes] = self._proc.stdin
            self._reader: IO[bytes] = self._proc.stdout
        else:
            assert config.address is not None
            try:
                self._sock = socket.create_connection(config.address, timeout=config.timeout)
            except OSError as exc:
                raise ScorerTransportError(f"cannot connect to scorer: {exc}") from exc
            self._sock.settimeout(None)
            self._writer = self._sock.makefile("wb")
            self._reader = self._sock.makefile("rb")

        self._thread = threading.Thread(target=self._read_loop, daemon=True)
        self._thread.start()

    # -- transport ---------------------------------------------------------

    def _read_loop(self) -> None:
        while True:
            try:
                line = self._reader.readline()
            except (OSError, ValueError):
                line = b""
            if not line:
                self._fail_all("scorer stream closed")
                return
            text = line.decode("utf-8", errors="replace").strip()
            if not text:
                continue
            try:
                record = json.loads(text)
                rid = int(record["id"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                logger.warning("unparseable scorer record: %r", text[:200])
                continue
            with self._lock:
                waiter = self._pending.pop(rid, None)
            if waiter is None:
                logger.warning("response for unknown or already-answered id %d", rid)
                continue
            waiter.payload = record
            waiter.event.set()

    def _fail_all(self, reason: str) -> None:
        with self._lock:
            pending = list(self._pending.values())
            self._pending.clear()
            self._closed = True
        for waiter in pending:
            waiter.payload = {"error": reason, "_transport": True}
            waiter.event.set()

    def _roundtrip(self, request: dict) -> dict:
        waiter = _Pending()
        with self._lock:
            if self._closed:
                raise ScorerTransportError("scorer connection is closed")
            rid = next(self._ids)
            request = {"id": rid, **request}
            self._pending[rid] = waiter
        line = json.dumps(request, ensure_ascii=False) + "\n"
        try:
            with self._lock:
                self._writer.write(line.encode("utf-8"))
                self._writer.flush()
        except (OSError, ValueError) as exc:
            with self._lock:
                self._pending.pop(rid, None)
            raise ScorerTransportError(f"write to scorer failed: {exc}") from exc
        if not waiter.event.wait(self._config.timeout):
            with self._lock:
                self._pending.pop(rid, None)
            raise ScorerTimeoutError(
                f"no response for request {rid} within {self._config.timeout}s"
            )
        assert waiter.payload is not None
        if waiter.payload.get("_transport"):
            raise ScorerTransportError(str(waiter.payload.get("error")))
        return waiter.payload

    # -- protocol ----------------------------------------------------------

    def tag(self, tokens: Sequence[str]) -> tuple[str, ...]:
        response = self._roundtrip({"tokens": list(tokens)})
        if "error" in response:
            raise ScorerContractError(f"scorer reported: {response['error']}")
        labels = response.get("labels")
        if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
            raise ScorerContractError("response is missing a string-array 'labels' field")
        return _check_labels(tokens, labels, self._config.lenient)

    def similarity(self, tokens: Sequence[str], span: tuple[int, int], candidate: str) -> float:
        """Contextual similarity of a candidate surface for a span; in [-1, 1]."""
        response = self._roundtrip(
            {"tokens": list(tokens), "span": [span[0], span[1]], "candidate": candidate}
        )
        if "error" in response:
            raise ScorerContractError(f"scorer reported: {response['error']}")
        value = response.get("similarity")
        if not isinstance(value, (int, float)):
            raise ScorerContractError("response is missing a numeric 'similarity' field")
        return float(value)

    def close(self) -> None:
        with self._lock:
            self._closed = True
        try:
            self._writer.close()  # EOF tells a subprocess remote to finish
        except (OSError, ValueError):
            pass
        if self._proc is not None:
            try:
                self._proc.terminate()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
        if self._sock is not None:
            try:
                # wakes the reader thread; plain close would leave the fd
                # open while the rb makefile still references it
                self._sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        try:
            self._reader.close()
        except (OSError, ValueError):
            pass
        if self._sock is not None:
            try:
                self._sock.close()
            except OSError:
                pass
        self._thread.join(timeout=5)

    def __enter__(self) -> "ExternalScorer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class CallableScorer:
    """Adapt a plain function to the scorer contract (handy in tests)."""

    def __init__(self, fn: Callable[[Sequence[str]], Sequence[str]], lenient: bool = False):
        self._fn = fn
        self._lenient = lenient

    def tag(self, tokens: Sequence[str]) -> tuple[str, ...]:
        return _check_labels(tokens, self._fn(tokens), self._lenient)
