"""Command-line front end for the corpus, clustering, and augmentation pipelines.

Data goes to files (or stdout with ``--output -``), logs go to stderr.
Exit status: 0 success, 1 input or validation error, 2 transport error
(unreachable scorer or LLM endpoint, timeout, remote contract violation).
Every file is written atomically via a temp file and rename.

Options resolve as flags > config file > built-in defaults. The config
file is plain text, one ``key=value`` per line with ``#`` comments; keys
are long option names without the leading dashes (``seed=7``,
``subset-size=10``).
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import shlex
import sys
import tempfile
from typing import Callable, Sequence

from .augment import (
    AllCorrect,
    AugConfig,
    DEFAULT_SEED,
    ExternalSimilarityProvider,
    StaticSimilarityProvider,
    TopK,
    augment_corpus,
    eda_rr,
    write_provenance,
)
from .clustering import (
    ArtifactSchemaError,
    ClusterSpec,
    build_cluster_dictionaries,
    load_cluster_artifacts,
    save_cluster_artifacts,
)
from .corpus import (
    CorpusFormatError,
    build_type_inventories,
    corpus_stats,
    io_to_bio,
    map_missing_annotations,
    overlap_analysis,
    parse_corpus,
    serialize_corpus,
)
from .embeddings import (
    EmbeddingFormatError,
    default_titles,
    load_embeddings,
    load_titles,
)
from .evaluation import entity_prf, token_accuracy
from .llm import (
    DEFAULT_CREDENTIAL_ENV,
    LlmConfig,
    LlmError,
    LlmParseError,
    ReplayLog,
    fewshot_tag,
    generative_augment,
)
from .scorer import (
    ExternalScorer,
    ExternalScorerConfig,
    ScorerError,
    gazetteer_tagger,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TRANSPORT = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors, which collides with the transport
    # exit code; remap usage problems to the input-error status
    def error(self, message: str):  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fp:
            fp.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fp:
        return fp.read()


def _read_corpus(path: str, scheme: str, lenient: bool):
    return parse_corpus(_read_text(path), scheme, "lenient" if lenient else "strict")


def _parse_selection(text: str):
    if text == "top1":
        return TopK(1)
    if text == "top2":
        return TopK(2)
    if text == "all-correct":
        return AllCorrect()
    if text.lower().startswith("topk="):
        try:
            return TopK(int(text[5:]))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad selection {text!r}") from exc
    raise argparse.ArgumentTypeError(
        f"selection must be top1, top2, topK=N, or all-correct, not {text!r}"
    )


def _parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not host:
        raise argparse.ArgumentTypeError(f"address must be host:port, not {text!r}")
    try:
        return host, int(port)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad port in {text!r}") from exc


def _load_config(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected key=value, got {line!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def _apply_config(subparser: argparse.ArgumentParser, config: dict[str, str]) -> None:
    """Install config values as parser defaults so explicit flags still win."""
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in config.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"unknown config key {key.replace('_', '-')!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            defaults[key] = action.type(raw)
        else:
            defaults[key] = raw
    subparser.set_defaults(**defaults)


# -- subcommands -------------------------------------------------------------


def _cmd_stats(args) -> int:
    corpus = _read_corpus(args.input, args.scheme, args.lenient)
    stats = corpus_stats(corpus)
    text = json.dumps(stats.to_dict(), indent=1) + "\n" if args.json else stats.to_text()
    _write_text(args.output, text)
    return EXIT_OK


def _cmd_convert_io_bio(args) -> int:
    corpus = _read_corpus(args.input, "IO", args.lenient)
    _write_text(args.output, serialize_corpus(io_to_bio(corpus)))
    return EXIT_OK


def _cmd_map_annotations(args) -> int:
    corpus = _read_corpus(args.input, "BIO", args.lenient)
    inventories = build_type_inventories(corpus)
    mapped, report = map_missing_annotations(corpus, inventories)
    _write_text(args.output, serialize_corpus(mapped))
    text = json.dumps(report.to_dict(), indent=1) + "\n" if args.json else report.to_text()
    _write_text(args.report, text)
    return EXIT_OK


def _cmd_overlap(args) -> int:
    train = _read_corpus(args.train, "BIO", args.lenient)
    test = _read_corpus(args.test, "BIO", args.lenient)
    report = overlap_analysis(train, test)
    text = json.dumps(report.to_dict(), indent=1) + "\n" if args.json else report.to_text()
    _write_text(args.output, text)
    return EXIT_OK


def _load_embedding_inputs(args):
    if not args.embeddings:
        raise ValueError("--embeddings is required here")
    with open(args.embeddings, encoding="utf-8") as fp:
        table = load_embeddings(fp)
    titles = load_titles(args.titles) if args.titles else default_titles()
    return table, titles


def _cmd_build_clusters(args) -> int:
    corpus = _read_corpus(args.input, "BIO", args.lenient)
    table, titles = _load_embedding_inputs(args)
    spec = ClusterSpec(
        k={"PER": args.k_per, "LOC": args.k_loc, "ORG": args.k_org},
        repetitions=args.repetitions,
        max_iters=args.max_iters,
        seed=args.seed,
    )
    models, _ = build_cluster_dictionaries(corpus, table, titles, spec, threads=args.threads)
    buf = io.StringIO()
    save_cluster_artifacts(buf, models)
    _write_text(args.output, buf.getvalue())
    logger.info("wrote cluster artifacts for %d types to %s", len(models), args.output)
    return EXIT_OK


def _cmd_augment(args) -> int:
    corpus = _read_corpus(args.input, "BIO", args.lenient)

    if args.method == "eda-rr":
        inventories = build_type_inventories(corpus)
        augmented, records = eda_rr(corpus, inventories, seed=args.seed)
    elif args.method == "generative":
        if not args.llm_endpoint or not args.llm_model:
            raise ValueError("--llm-endpoint and --llm-model are required for generative")
        cfg = LlmConfig(
            endpoint=args.llm_endpoint,
            model=args.llm_model,
            temperature=args.temperature,
            credential_env=args.credential_env,
            timeout=args.llm_timeout,
        )
        replay = ReplayLog(args.replay, args.replay_mode) if args.replay else None
        augmented, records = generative_augment(
            corpus, cfg, args.language, replay=replay, in_flight=args.in_flight
        )
    else:
        if not args.clusters:
            raise ValueError("--clusters is required for the cluster method")
        with open(args.clusters, encoding="utf-8") as fp:
            models, dictionary = load_cluster_artifacts(fp)
        table, titles = _load_embedding_inputs(args)

        client = None
        try:
            if args.scorer == "external" or args.similarity == "external":
                if args.scorer_command:
                    endpoint = ExternalScorerConfig(
                        command=tuple(shlex.split(args.scorer_command)),
                        timeout=args.scorer_timeout,
                        lenient=args.lenient,
                    )
                elif args.scorer_address:
                    endpoint = ExternalScorerConfig(
                        address=args.scorer_address,
                        timeout=args.scorer_timeout,
                        lenient=args.lenient,
                    )
                else:
                    raise ValueError(
                        "external scorer/similarity needs --scorer-command or --scorer-address"
                    )
                client = ExternalScorer(endpoint)

            if args.scorer == "external":
                assert client is not None
                scorer = client
            else:
                # validator inventories come from the split being augmented
                logger.info("compiling gazetteer from the input corpus")
                scorer = gazetteer_tagger(corpus)
            if args.similarity == "external":
                assert client is not None
                provider = ExternalSimilarityProvider(client)
            else:
                provider = StaticSimilarityProvider(table, titles)

            cfg = AugConfig(
                candidates_per_sentence=args.candidates,
                subset_size=args.subset_size,
                selection=args.select,
                iterations=args.iterations,
                seed=args.seed,
                degrade_to_zero=args.degrade_to_zero,
            )
            augmented, records = augment_corpus(
                corpus,
                models,
                dictionary,
                table,
                titles,
                provider,
                scorer,
                cfg,
                threads=args.threads,
            )
        finally:
            if client is not None:
                client.close()

    _write_text(args.output, serialize_corpus(augmented))
    if args.provenance:
        buf = io.StringIO()
        write_provenance(buf, records)
        _write_text(args.provenance, buf.getvalue())
    logger.info("wrote %d augmented sentences", len(augmented))
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    gold = _read_corpus(args.gold, "BIO", args.lenient)
    pred = _read_corpus(args.pred, "BIO", args.lenient)
    report = entity_prf(gold, pred)
    accuracy = token_accuracy(gold, pred)
    if args.json:
        doc = report.to_dict()
        doc["token_accuracy"] = accuracy
        text = json.dumps(doc, indent=1) + "\n"
    else:
        text = report.to_text() + f"token accuracy: {accuracy:.4f}\n"
    _write_text(args.output, text)
    return EXIT_OK


def _cmd_fewshot_ner(args) -> int:
    corpus = _read_corpus(args.input, "BIO", args.lenient)
    cfg = LlmConfig(
        endpoint=args.llm_endpoint,
        model=args.llm_model,
        temperature=args.temperature,
        credential_env=args.credential_env,
        timeout=args.llm_timeout,
    )
    replay = ReplayLog(args.replay, args.replay_mode) if args.replay else None
    kwargs = {}
    if args.examples:
        from .llm import NerExample

        shots = _read_corpus(args.examples, "BIO", args.lenient)
        kwargs["examples"] = tuple(NerExample(s.tokens, s.labels) for s in shots)
    tagged = fewshot_tag(
        corpus, cfg, args.language, replay=replay, in_flight=args.in_flight, **kwargs
    )
    _write_text(args.output, serialize_corpus(tagged))
    return EXIT_OK


# -- wiring ------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, seed: bool = False, threads: bool = False) -> None:
    sub.add_argument("--config", help="key=value config file (flags override it)")
    sub.add_argument("--lenient", action="store_true",
                     help="repair illegal I-X openings instead of rejecting them")
    if seed:
        sub.add_argument("--seed", type=int, default=DEFAULT_SEED,
                         help="random seed (fixed default for reproducibility)")
    if threads:
        sub.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                         help="worker threads; results do not depend on this")


def _add_llm_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--llm-endpoint", help="chat-completions URL")
    sub.add_argument("--llm-model", help="model identifier sent to the endpoint")
    sub.add_argument("--language", default="Urdu", help="language named in the prompt")
    sub.add_argument("--temperature", type=float, default=0.0)
    sub.add_argument("--credential-env", default=DEFAULT_CREDENTIAL_ENV,
                     help="environment variable holding the API key")
    sub.add_argument("--llm-timeout", type=float, default=60.0)
    sub.add_argument("--replay", help="replay log path (see --replay-mode)")
    sub.add_argument("--replay-mode", choices=("record", "replay"), default="record",
                     help="record live responses, or serve them offline")
    sub.add_argument("--in-flight", type=int, default=1,
                     help="concurrent endpoint requests")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neraug", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="-v for info, -vv for debug (logs go to stderr)")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub = commands.add_parser("stats", help="mention counts per entity type")
    sub.add_argument("input")
    sub.add_argument("--scheme", choices=("BIO", "IO"), default="BIO")
    sub.add_argument("--output", default="-")
    sub.add_argument("--json", action="store_true")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_stats)

    sub = commands.add_parser("convert-io-bio", help="convert an IO corpus to BIO")
    sub.add_argument("input")
    sub.add_argument("--output", required=True)
    _add_common(sub)
    sub.set_defaults(handler=_cmd_convert_io_bio)

    sub = commands.add_parser(
        "map-annotations",
        help="label known entity surfaces that sit unlabeled inside O runs",
    )
    sub.add_argument("input")
    sub.add_argument("--output", required=True, help="corpus with recovered labels")
    sub.add_argument("--report", default="-", help="growth report destination")
    sub.add_argument("--json", action="store_true")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_map_annotations)

    sub = commands.add_parser("overlap", help="train/test entity surface overlap")
    sub.add_argument("train")
    sub.add_argument("test")
    sub.add_argument("--output", default="-")
    sub.add_argument("--json", action="store_true")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_overlap)

    sub = commands.add_parser("build-clusters", help="cluster entity surfaces by type")
    sub.add_argument("input")
    sub.add_argument("--embeddings", required=True, help="word2vec-style text vectors")
    sub.add_argument("--titles", help="person-title list (one token per line)")
    sub.add_argument("--output", required=True, help="cluster artifact path")
    sub.add_argument("--k-per", type=int, default=2)
    sub.add_argument("--k-loc", type=int, default=2)
    sub.add_argument("--k-org", type=int, default=10)
    sub.add_argument("--repetitions", type=int, default=25)
    sub.add_argument("--max-iters", type=int, default=100)
    _add_common(sub, seed=True, threads=True)
    sub.set_defaults(handler=_cmd_build_clusters)

    sub = commands.add_parser("augment", help="generate an augmented corpus")
    sub.add_argument("input")
    sub.add_argument("--method", choices=("cluster", "eda-rr", "generative"),
                     default="cluster")
    sub.add_argument("--output", required=True)
    sub.add_argument("--provenance", help="line-delimited JSON audit log")
    sub.add_argument("--clusters", help="artifact from build-clusters")
    sub.add_argument("--embeddings", help="word2vec-style text vectors")
    sub.add_argument("--titles", help="person-title list")
    sub.add_argument("--select", type=_parse_selection, default=TopK(1),
                     help="top1, top2, topK=N, or all-correct")
    sub.add_argument("--candidates", type=int, default=5,
                     help="candidates generated per sentence")
    sub.add_argument("--subset-size", type=int, default=20,
                     help="random pool subset ranked per mention")
    sub.add_argument("--iterations", type=int, default=1)
    sub.add_argument("--scorer", choices=("gazetteer", "external"), default="gazetteer")
    sub.add_argument("--scorer-command", help="argv of a wire-protocol scorer subprocess")
    sub.add_argument("--scorer-address", type=_parse_address, help="host:port of a scorer")
    sub.add_argument("--scorer-timeout", type=float, default=30.0)
    sub.add_argument("--similarity", choices=("static", "external"), default="static")
    sub.add_argument("--degrade-to-zero", action="store_true",
                     help="score failed candidates 0.0 instead of aborting")
    _add_llm_flags(sub)
    _add_common(sub, seed=True, threads=True)
    sub.set_defaults(handler=_cmd_augment)

    sub = commands.add_parser("evaluate", help="entity-level P/R/F1 of pred vs gold")
    sub.add_argument("gold")
    sub.add_argument("pred")
    sub.add_argument("--output", default="-")
    sub.add_argument("--json", action="store_true")
    _add_common(sub)
    sub.set_defaults(handler=_cmd_evaluate)

    sub = commands.add_parser("fewshot-ner", help="tag a corpus via few-shot prompting")
    sub.add_argument("input", help="corpus whose tokens are tagged (labels ignored)")
    sub.add_argument("--output", required=True)
    sub.add_argument("--examples", help="corpus file providing the worked examples")
    _add_llm_flags(sub)
    _add_common(sub)
    sub.set_defaults(handler=_cmd_fewshot_ner)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            config = _load_config(args.config)
            # find the chosen subparser and re-parse with config-backed defaults
            subactions = next(
                a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
            )
            _apply_config(subactions.choices[args.command], config)
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    except (ValueError, OSError, argparse.ArgumentTypeError) as exc:
        sys.stderr.write(f"neraug: error: {exc}\n")
        return EXIT_INPUT

    logging.basicConfig(
        stream=sys.stderr,
        level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
        format="%(levelname)s %(name)s: %(message)s",
    )

    handler: Callable = args.handler
    try:
        return handler(args)
    except (ScorerError,) as exc:
        logger.error("scorer failure: %s", exc)
        return EXIT_TRANSPORT
    except LlmParseError as exc:
        logger.error("unparseable model output: %s", exc)
        return EXIT_INPUT
    except LlmError as exc:
        logger.error("endpoint failure: %s", exc)
        return EXIT_TRANSPORT
    except (CorpusFormatError, EmbeddingFormatError, ArtifactSchemaError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
