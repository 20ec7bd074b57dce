"""Gazetteer tagger and the external wire-protocol client."""

import json
import os
import socket
import socketserver
import sys
import threading

import numpy as np
import pytest

from neraug.corpus import SurfaceMatcher, build_type_inventories
from neraug.scorer import (
    CallableScorer,
    ExternalScorer,
    ExternalScorerConfig,
    ScorerContractError,
    ScorerTimeoutError,
    ScorerTransportError,
    gazetteer_tagger,
)

from conftest import bio

REMOTE = os.path.join(os.path.dirname(__file__), "wire_remote.py")


def remote_config(mode: str, **kwargs) -> ExternalScorerConfig:
    return ExternalScorerConfig(command=(sys.executable, REMOTE, mode), **kwargs)


class TestGazetteer:
    def train(self):
        return bio(
            ("Sartaj Aziz visited Lahore", "B-PER I-PER O B-LOC"),
            ("PIA suspended flights", "B-ORG O O"),
        )

    def test_known_surface_tagged(self):
        scorer = gazetteer_tagger(self.train())
        assert scorer.tag(["x", "Sartaj", "Aziz", "y"]) == ("O", "B-PER", "I-PER", "O")

    def test_unknown_tokens_all_o(self):
        scorer = gazetteer_tagger(self.train())
        assert scorer.tag(["nothing", "here"]) == ("O", "O")

    def test_deterministic_and_idempotent(self):
        scorer = gazetteer_tagger(self.train())
        tokens = ["PIA", "and", "Sartaj", "Aziz"]
        assert scorer.tag(tokens) == scorer.tag(tokens)

    def test_empty_corpus_rejected(self):
        from neraug.corpus import Corpus

        with pytest.raises(ValueError, match="empty"):
            gazetteer_tagger(Corpus((), "BIO"))

    def test_mention_free_corpus_tags_all_o(self, caplog):
        scorer = gazetteer_tagger(bio(("just filler", "O O")))
        assert scorer.tag(["just", "filler"]) == ("O", "O")

    def test_matches_brute_force_matcher_on_random_sentences(self):
        train = self.train()
        scorer = gazetteer_tagger(train)
        matcher = SurfaceMatcher(build_type_inventories(train))
        rng = np.random.default_rng(17)
        pieces = ["Sartaj", "Aziz", "Lahore", "PIA", "f1", "f2", "f3"]
        for _ in range(100):
            tokens = [pieces[i] for i in rng.integers(0, len(pieces), size=rng.integers(1, 12))]
            labels = scorer.tag(tokens)
            spans = matcher.match(tokens)
            expect = ["O"] * len(tokens)
            for start, length, etype in spans:
                expect[start] = f"B-{etype}"
                for i in range(start + 1, start + length):
                    expect[i] = f"I-{etype}"
            assert list(labels) == expect


class TestCallableScorer:
    def test_contract_enforced(self):
        scorer = CallableScorer(lambda toks: ["O"] * (len(toks) + 1))
        with pytest.raises(ScorerContractError, match="labels"):
            scorer.tag(["a"])

    def test_lenient_repair(self):
        scorer = CallableScorer(lambda toks: ["I-PER"] + ["O"] * (len(toks) - 1), lenient=True)
        assert scorer.tag(["a", "b"]) == ("B-PER", "O")

    def test_unknown_label_always_rejected(self):
        scorer = CallableScorer(lambda toks: ["B-GPE"], lenient=True)
        with pytest.raises(ScorerContractError, match="unknown"):
            scorer.tag(["a"])


class TestExternalScorerSubprocess:
    def test_all_o_accepted(self):
        with ExternalScorer(remote_config("all-o")) as scorer:
            assert scorer.tag(["a", "b", "c"]) == ("O", "O", "O")

    def test_rule_tagging(self):
        with ExternalScorer(remote_config("tag")) as scorer:
            assert scorer.tag(["Pak", "q", "x"]) == ("B-PER", "I-PER", "O")

    def test_wrong_length_is_contract_error(self):
        with ExternalScorer(remote_config("wrong-length")) as scorer:
            with pytest.raises(ScorerContractError, match="labels"):
                scorer.tag(["a", "b"])

    def test_invalid_bio_strict_rejects(self):
        with ExternalScorer(remote_config("invalid-bio")) as scorer:
            with pytest.raises(ScorerContractError, match="illegal"):
                scorer.tag(["a", "b"])

    def test_invalid_bio_lenient_repairs(self):
        with ExternalScorer(remote_config("invalid-bio", lenient=True)) as scorer:
            assert scorer.tag(["a", "b"]) == ("B-PER", "O")

    def test_error_record_raises(self):
        with ExternalScorer(remote_config("error")) as scorer:
            with pytest.raises(ScorerContractError, match="synthetic"):
                scorer.tag(["a"])

    def test_timeout(self):
        with ExternalScorer(remote_config("slow", timeout=0.05)) as scorer:
            with pytest.raises(ScorerTimeoutError):
                scorer.tag(["a"])

    def test_closed_stream_is_transport_error(self):
        scorer = ExternalScorer(remote_config("tag"))
        scorer.close()
        with pytest.raises(ScorerTransportError):
            scorer.tag(["a"])

    def test_similarity_extension(self):
        with ExternalScorer(remote_config("tag")) as scorer:
            value = scorer.similarity(["a", "b"], (0, 1), "xyz")
            assert value == pytest.approx((3 % 7) / 10.0)

    def test_shuffled_responses_keep_id_correlation(self):
        # 1,000 concurrent requests answered out of order; every reply must
        # land on the request that produced it
        from concurrent.futures import ThreadPoolExecutor

        rng = np.random.default_rng(23)
        sentences = []
        for i in range(1000):
            n = int(rng.integers(1, 8))
            toks = [("P" if rng.random() < 0.3 else "f") + str(int(rng.integers(100))) for _ in range(n)]
            sentences.append(toks)

        def expected(tokens):
            out = []
            for tok in tokens:
                out.append("B-PER" if tok.startswith("P") else "O")
            return tuple(out)

        with ExternalScorer(remote_config("shuffle", timeout=60.0)) as scorer:
            with ThreadPoolExecutor(max_workers=16) as pool:
                results = list(pool.map(scorer.tag, sentences))
        for toks, got in zip(sentences, results):
            assert got == expected(toks)


class LineTagServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            record = json.loads(line)
            reply = {"id": record["id"], "labels": ["O"] * len(record["tokens"])}
            self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
            self.wfile.flush()


class TestExternalScorerSocket:
    def test_tcp_transport(self):
        server = LineTagServer(("127.0.0.1", 0), _Handler)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            config = ExternalScorerConfig(address=server.server_address, timeout=10.0)
            with ExternalScorer(config) as scorer:
                assert scorer.tag(["x", "y"]) == ("O", "O")
        finally:
            server.shutdown()
            server.server_close()

    def test_unreachable_address(self):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()  # nothing listens here now
        with pytest.raises(ScorerTransportError, match="connect"):
            ExternalScorer(ExternalScorerConfig(address=("127.0.0.1", port), timeout=0.5))


class TestConfigValidation:
    def test_exactly_one_endpoint(self):
        with pytest.raises(ValueError, match="exactly one"):
            ExternalScorerConfig()
        with pytest.raises(ValueError, match="exactly one"):
            ExternalScorerConfig(command=("x",), address=("h", 1))

    def test_positive_timeout(self):
        with pytest.raises(ValueError, match="timeout"):
            ExternalScorerConfig(command=("x",), timeout=0)
