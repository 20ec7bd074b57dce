"""Entry point: pick a backend, then serve stdio or a TCP socket."""

from __future__ import annotations

import argparse
import logging
import sys

from .backends import AllOBackend, Backend, LexiconBackend, TransformersBackend, load_lexicon
from .config import DEFAULT_MAX_SEQ_LEN, SidecarConfig
from .server import SidecarServer, serve

logger = logging.getLogger(__name__)


def _build_backend(args: argparse.Namespace, config: SidecarConfig) -> Backend:
    if args.backend == "all-o":
        return AllOBackend()
    if args.backend == "lexicon":
        if not args.lexicon:
            raise ValueError("the lexicon backend needs --lexicon FILE")
        with open(args.lexicon, encoding="utf-8") as handle:
            return LexiconBackend(load_lexicon(handle))
    if not config.model:
        raise ValueError("the transformers backend needs --model IDENTIFIER")
    return TransformersBackend(config)  # pulls in torch/transformers on construction


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="scorer-sidecar",
        description="Token-classification server speaking the scorer wire protocol "
        "(newline JSON: {id, tokens} -> {id, labels}, plus the "
        "{id, tokens, span, candidate} -> {id, similarity} extension).",
    )
    parser.add_argument(
        "--backend",
        choices=("transformers", "lexicon", "all-o"),
        default="transformers",
        help="all-o and lexicon run without a model and exist for testing",
    )
    parser.add_argument("--model", default="", help="checkpoint for the transformers backend")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--max-seq-len", type=int, default=DEFAULT_MAX_SEQ_LEN,
                        help="tokens past this are labeled O and the response is flagged truncated")
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument("--lexicon", help="surface<TAB>type file for the lexicon backend")
    parser.add_argument("--listen", metavar="HOST:PORT", help="serve TCP instead of stdio")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    try:
        config = SidecarConfig(
            model=args.model,
            device=args.device,
            max_seq_len=args.max_seq_len,
            batch_size=args.batch_size,
        )
        backend = _build_backend(args, config)
    except Exception as exc:
        print(f"scorer-sidecar: cannot start: {exc}", file=sys.stderr)
        return 1

    if args.listen:
        host, _, port_text = args.listen.rpartition(":")
        try:
            port = int(port_text)
        except ValueError:
            print(f"scorer-sidecar: bad --listen value {args.listen!r}", file=sys.stderr)
            return 1
        with SidecarServer((host or "127.0.0.1", port), config, backend) as server:
            bound = server.server_address
            print(f"listening on {bound[0]}:{bound[1]}", file=sys.stderr, flush=True)
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
        return 0

    serve(config, backend, sys.stdin.buffer, sys.stdout.buffer)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
