"""Command-line entry point.

Subcommands cover the whole engine: ingest documents into the index, query
it, serve the HTTP API, train a policy on preference pairs, and aggregate
judge files. Every subcommand is deterministic given its flags, inputs, and
seed when the hash embedder and stub generator are active.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import DEFAULT_ADDR, DEFAULT_INDEX_PATH, ServiceConfig, build_embedder, build_generator
from .errors import AvllmError
from .evaluation import (
    expert_score_aggregate,
    load_judgments,
    load_scores,
    pairwise_tally,
    render_score_table,
    render_tally_table,
    sample_judgments,
    sample_score_items,
)
from .pipeline import PromptTemplate, answer_question
from .preference import CategoricalPolicy, DpoConfig, load_preference_dataset, train
from .preference.trainer import OBJECTIVES
from .vectorstore import DEFAULT_CHUNK_SIZE, DEFAULT_OVERLAP, VectorIndex

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

_ENV_HELP = """\
environment variables (flags take precedence):
  AVLLM_EMBEDDER     hash | remote                  (default: hash)
  AVLLM_EMBED_URL    remote embedding endpoint URL
  AVLLM_EMBED_MODEL  remote embedding model name
  AVLLM_EMBED_DIM    embedding dimension            (default: 256)
  AVLLM_GEN          stub | remote                  (default: stub)
  AVLLM_GEN_URL      chat-completions endpoint URL
  AVLLM_GEN_MODEL    generation model name
  AVLLM_GEN_KEY      bearer token for generation
  AVLLM_TOPK         default retrieval k            (default: 4)
  AVLLM_MIN_SCORE    minimum cosine score cutoff    (default: none)
  AVLLM_INDEX_PATH   index file                     (default: avllm.index.jsonl)
  AVLLM_ADDR         serve bind address             (default: 127.0.0.1:8080)
  AVLLM_CORS_ORIGIN  comma-separated CORS origins for the web UI
  AVLLM_AUTH_TOKEN   static bearer token required by the service
  AVLLM_TIMEOUT      remote request timeout seconds (default: 30)
"""


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="avllm",
        description="Retrieval-augmented aviation-training QA engine.",
        epilog=_ENV_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"avllm {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")

    p_ingest = sub.add_parser("ingest", help="chunk, embed, and index text files")
    p_ingest.add_argument("paths", nargs="+", metavar="PATH", help="UTF-8 text files")
    p_ingest.add_argument("--index", help="index file (env AVLLM_INDEX_PATH)")
    p_ingest.add_argument("--chunk-size", type=_positive_int, default=DEFAULT_CHUNK_SIZE)
    p_ingest.add_argument("--overlap", type=int, default=DEFAULT_OVERLAP)

    p_query = sub.add_parser("query", help="answer a question from the index")
    p_query.add_argument("question")
    p_query.add_argument("--index", help="index file (env AVLLM_INDEX_PATH)")
    p_query.add_argument("--k", type=_positive_int, default=None, help="passages to retrieve")
    p_query.add_argument("--min-score", type=float, default=None)
    p_query.add_argument("--json", action="store_true", help="emit the /v1/query JSON schema")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--addr", help=f"bind address (env AVLLM_ADDR, default {DEFAULT_ADDR})")
    p_serve.add_argument("--index", help="index file (env AVLLM_INDEX_PATH)")

    p_train = sub.add_parser("dpo-train", help="train a categorical policy on preference pairs")
    p_train.add_argument("--dataset", required=True, help="JSONL preference pairs")
    p_train.add_argument("--objective", choices=OBJECTIVES, default="dpo")
    p_train.add_argument("--beta", type=_positive_float, default=1.0)
    p_train.add_argument("--lr", type=_positive_float, default=0.1)
    p_train.add_argument("--steps", type=_positive_int, default=500)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--tol", type=float, default=1e-9, help="convergence tolerance on loss delta")
    p_train.add_argument("--report", help="write the training report JSON here")
    p_train.add_argument(
        "--plot", action="store_true", help="render a loss-curve PNG next to --report"
    )

    p_pair = sub.add_parser("eval-pairwise", help="tally win/lose/tie judgments")
    p_pair.add_argument("--judgments", required=True, help="JSONL judgment records")
    p_pair.add_argument("--sample", type=_positive_int, default=None, help="sample N judgments")
    p_pair.add_argument("--seed", type=int, default=0, help="sampling seed")
    p_pair.add_argument("--report", help="write the tally JSON here")
    p_pair.add_argument("--plot", action="store_true", help="render a PNG next to --report")

    p_scores = sub.add_parser("eval-scores", help="aggregate expert score records")
    p_scores.add_argument("--scores", required=True, help="JSONL score records")
    p_scores.add_argument("--sample", type=_positive_int, default=None, help="sample N items")
    p_scores.add_argument("--seed", type=int, default=0, help="sampling seed")
    p_scores.add_argument("--report", help="write the aggregate JSON here")
    p_scores.add_argument("--plot", action="store_true", help="render a PNG next to --report")

    return parser


def _resolve_config(args: argparse.Namespace) -> ServiceConfig:
    overrides = {}
    if getattr(args, "index", None):
        overrides["index_path"] = Path(args.index)
    if getattr(args, "addr", None):
        overrides["bind_address"] = args.addr
    if getattr(args, "k", None):
        overrides["default_k"] = args.k
    if getattr(args, "min_score", None) is not None:
        overrides["min_score"] = args.min_score
    return ServiceConfig.from_env(**overrides)


def _cmd_ingest(args) -> int:
    config = _resolve_config(args)
    if args.overlap < 0 or args.overlap >= args.chunk_size:
        raise UsageError(f"--overlap must satisfy 0 <= overlap < chunk size {args.chunk_size}")
    embedder = build_embedder(config)
    if config.index_path.exists():
        index = VectorIndex.load(config.index_path)
    else:
        index = VectorIndex(embedder.dimension)

    failures = 0
    for path_text in args.paths:
        path = Path(path_text)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot read {path_text}: {exc}", file=sys.stderr)
            failures += 1
            continue
        summary = index.upsert(
            path_text, text, embedder, size=args.chunk_size, overlap=args.overlap
        )
        print(
            f"{path_text}: {summary.chunks_added} chunks added, "
            f"{summary.chunks_skipped} skipped"
        )
    index.persist(config.index_path)
    print(f"index persisted: {config.index_path} ({len(index)} records)")
    return EXIT_RUNTIME if failures else EXIT_OK


def _cmd_query(args) -> int:
    if not args.question.strip():
        raise UsageError("question must be non-empty")
    config = _resolve_config(args)
    if not config.index_path.exists():
        raise AvllmError(f"index file not found: {config.index_path} (run `avllm ingest` first)")
    index = VectorIndex.load(config.index_path)
    answer = answer_question(
        args.question.strip(),
        config.default_k,
        index,
        build_embedder(config),
        PromptTemplate.default(),
        build_generator(config),
        min_score=config.min_score,
    )
    if args.json:
        print(json.dumps(answer.to_dict(), ensure_ascii=False))
        return EXIT_OK
    print(answer.text)
    if answer.citations:
        print("\nCitations:")
        for i, c in enumerate(answer.citations, start=1):
            print(f"  [{i}] {c.doc_id} (chunk {c.chunk_id}, score {c.score:.4f}): {c.snippet}")
    else:
        print("\n(ungrounded: no passages retrieved)")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _resolve_config(args)
    host, port = config.host_port
    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(config), host=host, port=port)
    return EXIT_OK


def _cmd_train(args) -> int:
    dataset = load_preference_dataset(args.dataset)
    reference = CategoricalPolicy.uniform(dataset.candidate_sets)
    config = DpoConfig(
        beta=args.beta,
        learning_rate=args.lr,
        max_steps=args.steps,
        seed=args.seed,
        convergence_tol=args.tol,
    )
    _, report = train(dataset, reference, config, objective=args.objective)
    print(f"objective: {args.objective}  pairs: {len(dataset)}  steps: {report.steps_taken}")
    print(f"initial loss: {report.initial_loss:.6f}")
    print(f"final loss:   {report.final_loss:.6f}")
    print(f"final mean preference probability: {report.final_mean_preference_probability:.6f}")
    print(f"stopped: {report.stopped_reason}")
    if args.report:
        from .reporting import figure_path_for, plot_loss_curve, write_json_report

        payload = {
            "objective": args.objective,
            "dataset": args.dataset,
            "pairs": len(dataset),
            "config": {
                "beta": config.beta,
                "learning_rate": config.learning_rate,
                "max_steps": config.max_steps,
                "seed": config.seed,
                "convergence_tol": config.convergence_tol,
            },
            "report": report.to_dict(),
        }
        write_json_report(payload, args.report)
        print(f"report written: {args.report}")
        if args.plot:
            figure = plot_loss_curve(report, figure_path_for(args.report))
            print(f"figure written: {figure}")
    elif args.plot:
        raise UsageError("--plot requires --report")
    return EXIT_OK


def _cmd_eval_pairwise(args) -> int:
    judgments = load_judgments(args.judgments)
    if args.sample is not None:
        judgments = sample_judgments(judgments, args.sample, args.seed)
    tally = pairwise_tally(judgments)
    print(render_tally_table(tally))
    if args.report:
        from .reporting import figure_path_for, plot_tally, write_json_report

        write_json_report(tally.to_dict(), args.report)
        print(f"report written: {args.report}")
        if args.plot:
            figure = plot_tally(tally, figure_path_for(args.report))
            print(f"figure written: {figure}")
    elif args.plot:
        raise UsageError("--plot requires --report")
    return EXIT_OK


def _cmd_eval_scores(args) -> int:
    records = load_scores(args.scores)
    if args.sample is not None:
        records = sample_score_items(records, args.sample, args.seed)
    summaries = expert_score_aggregate(records)
    print(render_score_table(summaries))
    if args.report:
        from .reporting import figure_path_for, plot_score_bars, write_json_report

        write_json_report({tag: s.to_dict() for tag, s in summaries.items()}, args.report)
        print(f"report written: {args.report}")
        if args.plot:
            figure = plot_score_bars(summaries, figure_path_for(args.report))
            print(f"figure written: {figure}")
    elif args.plot:
        raise UsageError("--plot requires --report")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "query": _cmd_query,
    "serve": _cmd_serve,
    "dpo-train": _cmd_train,
    "eval-pairwise": _cmd_eval_pairwise,
    "eval-scores": _cmd_eval_scores,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors and --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.subcommand](args)
    except UsageError as exc:
        print(f"avllm {args.subcommand}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AvllmError, OSError, ValueError) as exc:
        print(f"avllm {args.subcommand}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
