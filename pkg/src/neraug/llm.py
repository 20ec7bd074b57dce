"""Prompted augmentation and few-shot tagging over a chat-completion endpoint.

Two prompt families: one asks the model to rewrite a sentence with new
entities of the same types, the other asks it to emit BIO labels for an
input sentence given worked examples. Responses are free text, so both
directions ship a repair rule: label responses are scanned for the first
run of valid labels whose length matches the token count, and rewritten
text has its labels recovered by anchoring on the unchanged non-entity
tokens. Every request/response pair can be mirrored to a replay log so
experiments rerun offline and deterministically.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections.abc import Set
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Sequence

import requests

from .augment import ProvenanceRecord, Replacement
from .corpus import (
    BIO_LABELS,
    Corpus,
    EntityMention,
    TaggedSentence,
    extract_mentions,
    rebuild_labels,
)

logger = logging.getLogger(__name__)

DEFAULT_CREDENTIAL_ENV = "LLM_API_KEY"
AUGMENTED_MARKER = "AUGMENTED TEXT"

AUG_PREAMBLE = (
    "You are an expert in augmenting data for named entities for {language} language. "
    "The input contains the ORIGINAL TEXT followed by the AUGMENTED TEXT. "
    "Perform augmentation by replacing named entities with new entities of the same "
    "type and return the AUGMENTED TEXT. "
    "Three examples are given for your reference:"
)
FEWSHOT_PREAMBLE = (
    "You are an expert in identifying named entities for {language}. "
    "The INPUT contains text followed by an OUTPUT sequence of BIO labels. "
    "Perform named entity recognition and return the labels. "
    "Three examples are provided for your reference:"
)


class LlmError(Exception):
    """Base class for endpoint and parsing failures."""


class LlmAuthError(LlmError):
    """Credential missing from the environment or rejected by the endpoint."""


class LlmTransportError(LlmError):
    """Endpoint unreachable, non-success status, or timeout after retries."""


class LlmResponseError(LlmError):
    """Well-formed transport, malformed completion body."""


class LlmParseError(LlmError):
    """Model text did not yield labels or augmented tokens under the repair rules."""


@dataclass(frozen=True)
class AugExample:
    original: str
    augmented: str

    def __post_init__(self) -> None:
        if not self.original.strip() or not self.augmented.strip():
            raise ValueError("example texts must be non-empty")


@dataclass(frozen=True)
class NerExample:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.tokens) != len(self.labels):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.labels)} labels in example"
            )
        if not self.tokens:
            raise ValueError("example must have at least one token")


# three worked examples covering PER, LOC, and ORG
DEFAULT_NER_EXAMPLES = (
    NerExample(
        tuple("Foreign advisor Sartaj Aziz will visit Afghanistan today.".split()),
        ("O", "O", "B-PER", "I-PER", "O", "O", "B-LOC", "O"),
    ),
    NerExample(
        tuple("The State Bank of Pakistan raised interest rates on Monday .".split()),
        ("O", "B-ORG", "I-ORG", "I-ORG", "I-ORG", "O", "O", "O", "O", "O", "O"),
    ),
    NerExample(
        tuple("Sana Javed met party workers in Karachi .".split()),
        ("B-PER", "I-PER", "O", "O", "O", "O", "B-LOC", "O"),
    ),
)
DEFAULT_AUG_EXAMPLES = (
    AugExample(
        "Foreign advisor Sartaj Aziz will visit Afghanistan today.",
        "Foreign advisor Shah Mahmood Qureshi will visit Iran today.",
    ),
    AugExample(
        "The State Bank of Pakistan raised interest rates on Monday .",
        "The National Bank of Pakistan raised interest rates on Monday .",
    ),
    AugExample(
        "Sana Javed met party workers in Karachi .",
        "Hira Mani met party workers in Multan .",
    ),
)


def build_aug_prompt(
    language: str, examples: Sequence[AugExample], input_text: str
) -> str:
    """Rewrite-instruction prompt: preamble, numbered examples, then the input."""
    if not examples:
        raise ValueError("at least one example is required")
    if not input_text.strip():
        raise ValueError("input text must be non-empty")
    lines = [AUG_PREAMBLE.format(language=language)]
    for i, ex in enumerate(examples, start=1):
        lines.append(f"EXAMPLE {i}:")
        lines.append(f"ORIGINAL TEXT: {ex.original}")
        lines.append(f"AUGMENTED TEXT: {ex.augmented}")
    lines.append(f"ORIGINAL TEXT: {input_text}")
    lines.append("AUGMENTED TEXT:")
    return "\n".join(lines)


def build_fewshot_ner_prompt(
    language: str, examples: Sequence[NerExample], tokens: Sequence[str]
) -> str:
    """Labeling prompt: preamble, numbered INPUT/OUTPUT examples, then the input."""
    if not examples:
        raise ValueError("at least one example is required")
    if not tokens:
        raise ValueError("input tokens must be non-empty")
    lines = [FEWSHOT_PREAMBLE.format(language=language)]
    for i, ex in enumerate(examples, start=1):
        lines.append(f"EXAMPLE {i}:")
        lines.append(f"INPUT: {' '.join(ex.tokens)}")
        lines.append(f"OUTPUT: {' '.join(ex.labels)}")
    lines.append(f"INPUT: {' '.join(tokens)}")
    lines.append("OUTPUT:")
    return "\n".join(lines)


def parse_label_sequence(
    response_text: str, n_tokens: int, valid_labels: Set[str] = BIO_LABELS
) -> tuple[str, ...]:
    """First maximal run of valid labels whose length equals n_tokens.

    Runs are maximal stretches of whitespace-separated fields that are all
    valid labels; anything else (chatter, punctuation) breaks a run.
    """
    if n_tokens < 1:
        raise ValueError(f"n_tokens must be >= 1, got {n_tokens}")
    if not response_text.strip():
        raise LlmParseError("empty response")
    runs: list[list[str]] = []
    current: list[str] = []
    for word in response_text.split():
        if word in valid_labels:
            current.append(word)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)
    for run in runs:
        if len(run) == n_tokens:
            return tuple(run)
    raise LlmParseError(
        f"no run of {n_tokens} valid labels in response "
        f"(run lengths found: {[len(r) for r in runs]})"
    )


def parse_augmented_text(response_text: str) -> tuple[str, ...]:
    """Tokens after the final AUGMENTED TEXT marker (whole response if absent)."""
    if not response_text.strip():
        raise LlmParseError("empty response")
    pos = response_text.rfind(AUGMENTED_MARKER)
    tail = response_text if pos < 0 else response_text[pos + len(AUGMENTED_MARKER) :]
    tail = tail.lstrip().lstrip(":").strip()
    tokens = tuple(tail.split())
    if not tokens:
        raise LlmParseError("no text after the AUGMENTED TEXT marker")
    return tokens


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str  # full chat-completions URL
    model: str
    temperature: float = 0.0  # deterministic decoding by default
    max_tokens: int = 512
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = 60.0
    retries: int = 3
    backoff: float = 0.5  # first retry delay; doubles per attempt

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ValueError("endpoint must be non-empty")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")
        if self.retries < 0:
            raise ValueError(f"retries must be >= 0, got {self.retries}")


@dataclass
class ChatExchange:
    """An ordered message list plus, once completed, the response and usage."""

    messages: tuple[tuple[str, str], ...]  # (role, content)
    response_text: str | None = None
    usage: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.messages = tuple(self.messages)
        roles = {"system", "user", "assistant"}
        for role, _ in self.messages:
            if role not in roles:
                raise ValueError(f"unknown role {role!r}")
        if not any(role == "user" for role, _ in self.messages):
            raise ValueError("at least one user message is required")


class ReplayLog:
    """Mirror of every exchange, usable as an offline response source.

    In record mode each completed call appends one JSON line
    {request, response}. In replay mode the log is loaded up front and
    requests are served from it by exact request match; a miss is an error,
    so replayed runs never touch the network.
    """

    def __init__(self, path: str, mode: str = "record"):
        if mode not in ("record", "replay"):
            raise ValueError(f"mode must be 'record' or 'replay', got {mode!r}")
        self.path = path
        self.mode = mode
        self._lock = threading.Lock()
        self._responses: dict[str, str] = {}
        if mode == "replay":
            with open(path, encoding="utf-8") as fp:
                for lineno, line in enumerate(fp, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    rec = json.loads(line)
                    # the log stores extracted assistant text, not the raw
                    # endpoint envelope; reject anything else up front
                    if (
                        not isinstance(rec, dict)
                        or not isinstance(rec.get("request"), dict)
                        or not isinstance(rec.get("response"), str)
                    ):
                        raise ValueError(
                            f"{path} line {lineno}: replay records are "
                            "{request: object, response: string}"
                        )
                    self._responses[json.dumps(rec["request"], sort_keys=True)] = rec[
                        "response"
                    ]

    def lookup(self, request: dict) -> str | None:
        return self._responses.get(json.dumps(request, sort_keys=True))

    def record(self, request: dict, response: str) -> None:
        line = json.dumps(
            {"request": request, "response": response}, ensure_ascii=False, sort_keys=True
        )
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fp:
                fp.write(line + "\n")


def _request_payload(cfg: LlmConfig, exchange: ChatExchange) -> dict:
    return {
        "model": cfg.model,
        "messages": [{"role": r, "content": c} for r, c in exchange.messages],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    }


def chat_complete(
    cfg: LlmConfig, exchange: ChatExchange, replay: ReplayLog | None = None
) -> str:
    """Send the exchange to the endpoint and return the assistant text.

    Transient failures (connection errors, timeouts, 429, 5xx) retry with
    exponential backoff; authentication failures do not. The credential is
    read from the configured environment variable only.
    """
    payload = _request_payload(cfg, exchange)
    if replay is not None and replay.mode == "replay":
        text = replay.lookup(payload)
        if text is None:
            raise LlmTransportError("request not found in replay log")
        exchange.response_text = text
        return text

    key = os.environ.get(cfg.credential_env)
    if not key:
        raise LlmAuthError(
            f"no credential in environment variable {cfg.credential_env}"
        )
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    last: Exception | None = None
    for attempt in range(cfg.retries + 1):
        if attempt:
            time.sleep(cfg.backoff * 2 ** (attempt - 1))
        try:
            resp = requests.post(
                cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout
            )
        except requests.RequestException as exc:
            last = LlmTransportError(f"request failed: {exc}")
            logger.warning("attempt %d: %s", attempt + 1, last)
            continue
        if resp.status_code in (401, 403):
            raise LlmAuthError(f"endpoint rejected the credential ({resp.status_code})")
        if resp.status_code == 429 or resp.status_code >= 500:
            last = LlmTransportError(f"status {resp.status_code}")
            logger.warning("attempt %d: %s", attempt + 1, last)
            continue
        if resp.status_code != 200:
            raise LlmTransportError(f"status {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise LlmResponseError(f"malformed completion body: {exc}") from exc
        if not isinstance(text, str):
            raise LlmResponseError("completion content is not text")
        exchange.response_text = text
        exchange.usage = body.get("usage", {}) or {}
        if replay is not None and replay.mode == "record":
            replay.record(payload, text)
        return text
    assert last is not None
    raise last


def _segments(
    sentence: TaggedSentence, mentions: Sequence[EntityMention]
) -> list[tuple[str, tuple[str, ...] | EntityMention]]:
    """Alternate ('gap', tokens) and ('ent', mention), covering the sentence."""
    segs: list[tuple[str, tuple[str, ...] | EntityMention]] = []
    pos = 0
    for m in mentions:
        segs.append(("gap", sentence.tokens[pos : m.start]))
        segs.append(("ent", m))
        pos = m.end
    segs.append(("gap", sentence.tokens[pos:]))
    return segs


def recover_labels(
    sentence: TaggedSentence, new_tokens: Sequence[str]
) -> TaggedSentence | None:
    """Re-label rewritten tokens by anchoring on the unchanged non-entity runs.

    The source's O-token runs must reappear, in order, around non-empty
    replacement spans; each replacement span inherits the corresponding
    source mention's type. Shorter replacement spans are preferred when the
    anchoring is ambiguous. Returns None when no consistent alignment
    exists — in particular when two source mentions are adjacent, since no
    anchor separates their replacements.
    """
    mentions = extract_mentions(Corpus((sentence,), "BIO"))
    if not mentions:
        return None
    segs = _segments(sentence, mentions)
    interior = [p for k, p in segs[2:-1] if k == "gap"]
    if any(len(g) == 0 for g in interior):
        return None
    toks = tuple(new_tokens)

    spans: list[tuple[int, int]] = []

    def match(seg_idx: int, pos: int) -> bool:
        if seg_idx == len(segs):
            return pos == len(toks)
        kind, payload = segs[seg_idx]
        if kind == "gap":
            gap = payload
            if toks[pos : pos + len(gap)] != gap:
                return False
            return match(seg_idx + 1, pos + len(gap))
        for length in range(1, len(toks) - pos + 1):
            spans.append((pos, length))
            if match(seg_idx + 1, pos + length):
                return True
            spans.pop()
        return False

    if not match(0, 0):
        return None
    new_mentions = [
        EntityMention(0, start, length, m.etype, " ".join(toks[start : start + length]))
        for (start, length), m in zip(spans, mentions)
    ]
    return TaggedSentence(toks, rebuild_labels(len(toks), new_mentions))


def generative_augment(
    corpus: Corpus,
    cfg: LlmConfig,
    language: str,
    examples: Sequence[AugExample] = DEFAULT_AUG_EXAMPLES,
    replay: ReplayLog | None = None,
    in_flight: int = 1,
) -> tuple[Corpus, list[ProvenanceRecord]]:
    """Rewrite each entity-bearing sentence via the endpoint and relabel it.

    Per-sentence endpoint, parse, and alignment failures drop that sentence
    with a log line; they are never fatal. Output keeps origin order.
    """

    def work(args: tuple[int, TaggedSentence]) -> tuple[TaggedSentence, ProvenanceRecord] | None:
        si, sentence = args
        prompt = build_aug_prompt(language, examples, " ".join(sentence.tokens))
        exchange = ChatExchange((("user", prompt),))
        try:
            response = chat_complete(cfg, exchange, replay)
            new_tokens = parse_augmented_text(response)
        except LlmError as exc:
            logger.warning("sentence %d dropped: %s", si, exc)
            return None
        relabeled = recover_labels(sentence, new_tokens)
        if relabeled is None:
            logger.warning("sentence %d dropped: could not align the rewritten text", si)
            return None
        olds = extract_mentions(Corpus((sentence,), "BIO"))
        news = extract_mentions(Corpus((relabeled,), "BIO"))
        replacements = tuple(
            Replacement(o.surface, n.surface, -1, 0.0) for o, n in zip(olds, news)
        )
        return relabeled, ProvenanceRecord(si, 1, "generative", replacements, float("nan"))

    jobs = [
        (si, sent)
        for si, sent in enumerate(corpus.sentences)
        if any(lab != "O" for lab in sent.labels)
    ]
    if in_flight > 1:
        with ThreadPoolExecutor(max_workers=in_flight) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    sentences = []
    records = []
    for item in results:
        if item is None:
            continue
        sentences.append(item[0])
        records.append(item[1])
    return Corpus(tuple(sentences), "BIO"), records


def fewshot_tag(
    corpus: Corpus,
    cfg: LlmConfig,
    language: str,
    examples: Sequence[NerExample] = DEFAULT_NER_EXAMPLES,
    replay: ReplayLog | None = None,
    in_flight: int = 1,
) -> Corpus:
    """Label every sentence with few-shot prompting plus the length-repair rule.

    A sentence whose response yields no run of matching length falls back
    to all-O labels (logged) so the output corpus keeps its shape.
    """

    def work(args: tuple[int, TaggedSentence]) -> TaggedSentence:
        si, sentence = args
        prompt = build_fewshot_ner_prompt(language, examples, sentence.tokens)
        exchange = ChatExchange((("user", prompt),))
        try:
            response = chat_complete(cfg, exchange, replay)
            labels = parse_label_sequence(response, len(sentence.tokens))
        except LlmError as exc:
            logger.warning("sentence %d falls back to all-O: %s", si, exc)
            return TaggedSentence(sentence.tokens, ("O",) * len(sentence.tokens))
        prev = "O"
        fixed = []
        for lab in labels:
            # model output may open a span with I-X; repair like the lenient parser
            if lab.startswith("I-") and prev != lab and prev != "B-" + lab[2:]:
                lab = "B-" + lab[2:]
            fixed.append(lab)
            prev = lab
        return TaggedSentence(sentence.tokens, tuple(fixed))

    jobs = list(enumerate(corpus.sentences))
    if in_flight > 1:
        with ThreadPoolExecutor(max_workers=in_flight) as pool:
            tagged = list(pool.map(work, jobs))
    else:
        tagged = [work(j) for j in jobs]
    return Corpus(tuple(tagged), "BIO")
