"""Command-line entry points.

Subcommands: serve (HTTP suggestion server), eval (proof-search pass rate
over a corpus), bench (suggestion latency against a live server), render
(reports to tables), corpus (generate a simulated corpus), sim-stdio (serve a
corpus over the line protocol for external adapters).

Every serve flag can also be set through the environment with an LLMSTEP_
prefix (LLMSTEP_BIND, LLMSTEP_BACKEND, LLMSTEP_MODEL_ID, LLMSTEP_N,
LLMSTEP_CHECK, LLMSTEP_TIMEOUT_S); explicit flags win.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import adapter, harness, server
from .generation import MockGenerator, MockRuleTable, RemoteBackendConfig, RemoteGenerator
from .proofenv import TableEdgeGenerator
from .search import SearchBudget

ENV_PREFIX = "LLMSTEP_"


def _env(name: str, fallback):
    return os.environ.get(ENV_PREFIX + name, fallback)


def _add_serve(sub: argparse._SubParsersAction) -> None:
    p = sub.add_parser("serve", help="run the HTTP suggestion server")
    p.add_argument("--bind", default=_env("BIND", server.DEFAULT_BIND), help="host:port")
    p.add_argument(
        "--backend",
        default=_env("BACKEND", ""),
        help="mock:<rules.json> or remote:<url>",
    )
    p.add_argument("--model-id", default=_env("MODEL_ID", None))
    p.add_argument("--n", type=int, default=int(_env("N", 5)), help="default suggestion count")
    p.add_argument(
        "--check",
        default=_env("CHECK", ""),
        help="sim:<table.json> to classify suggestions server-side; empty for unchecked",
    )
    p.add_argument("--timeout-s", type=float, default=float(_env("TIMEOUT_S", 30.0)))
    p.add_argument("--pool-size", type=int, default=8, help="max concurrent backend calls")
    p.set_defaults(func=_cmd_serve)


def _cmd_serve(args) -> int:
    config = server.ServerConfig(
        bind=args.bind,
        backend=args.backend,
        model_id=args.model_id,
        default_n=args.n,
        check=args.check,
        request_timeout_s=args.timeout_s,
        pool_size=args.pool_size,
    )
    server.serve(config)
    return 0


def _make_generator(spec: str, corpus: harness.Corpus | None, timeout_s: float):
    kind, _, arg = spec.partition(":")
    if kind == "mock":
        return MockGenerator(MockRuleTable.load(arg))
    if kind == "remote":
        return RemoteGenerator(
            RemoteBackendConfig(endpoint_url=arg, model_id="remote", request_timeout_s=timeout_s)
        )
    if kind == "edges":
        if corpus is None:
            raise ValueError("edges backend needs a corpus")
        return TableEdgeGenerator(corpus.table)
    raise ValueError(f"unknown backend {spec!r}; use mock:<path>, remote:<url>, or edges")


def _add_eval(sub) -> None:
    p = sub.add_parser("eval", help="proof-search pass rate over a corpus")
    p.add_argument("--corpus", required=True, help="corpus JSON path")
    p.add_argument(
        "--backend",
        default="edges",
        help="edges (enumerate table edges), mock:<rules.json>, or remote:<url>",
    )
    p.add_argument("--attempts", type=int, default=1)
    p.add_argument("--expansion", type=int, default=32)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--timeout-s", type=float, default=600.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="tie-break salt base for attempts")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_eval)


def _cmd_eval(args) -> int:
    try:
        corpus = harness.Corpus.load(args.corpus)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot load corpus: {exc}", file=sys.stderr)
        return 2
    generator = _make_generator(args.backend, corpus, args.timeout_s)
    budget = SearchBudget(
        attempts=args.attempts,
        expansion_size=args.expansion,
        max_iterations=args.max_iters,
        timeout_s=args.timeout_s,
    )
    report = harness.run_eval(
        corpus, generator, budget, workers=args.workers, salt_base=args.seed
    )
    if args.out:
        report.save(args.out)
    print(f"{'Model':<22} {'Search':<8} {'Split':<34} {'Pass rate':<18}")
    print(
        f"{report.model_id:<22} {report.search_label:<8} {report.corpus_id:<34} "
        f"{harness.format_pass_rate(report.solved, report.total):<18}"
    )
    if report.infra_failures:
        print(f"infra-failures: {report.infra_failures}")
    return 0


def _add_bench(sub) -> None:
    p = sub.add_parser("bench", help="suggestion latency against a live server")
    p.add_argument("--endpoint", required=True, help="server base URL, e.g. http://127.0.0.1:6550")
    p.add_argument("--examples", required=True, help="examples JSON path")
    p.add_argument("--n", type=int, default=5, help="suggestions per request")
    p.add_argument("--repeats", type=int, default=3, help="timed repeats per example")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_bench)


def _cmd_bench(args) -> int:
    examples = harness.load_bench_examples(args.examples)
    try:
        report = harness.run_latency_bench(args.endpoint, examples, n=args.n, repeats=args.repeats)
    except ConnectionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out:
        report.save(args.out)
    print(
        f"backend={report.backend_id} n={report.n} examples={len(report.per_example_s)} "
        f"mean={report.mean_s:.4f}s p50={report.p50_s:.4f}s p90={report.p90_s:.4f}s"
        + (f" missing={report.missing}" if report.missing else "")
    )
    return 0


def _add_render(sub) -> None:
    p = sub.add_parser("render", help="render saved reports as tables")
    p.add_argument("reports", nargs="+", help="report JSON paths")
    p.set_defaults(func=_cmd_render)


def _cmd_render(args) -> int:
    try:
        sys.stdout.write(harness.render_reports(args.reports))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def _add_corpus(sub) -> None:
    p = sub.add_parser("corpus", help="generate a simulated proof corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--branching", type=int, default=3)
    p.add_argument("--distractors", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_corpus)


def _cmd_corpus(args) -> int:
    corpus = harness.Corpus.generate(
        args.seed, args.count, args.max_depth, args.branching, args.distractors
    )
    corpus.save(args.out)
    print(f"wrote {args.out}: {len(corpus.theorems)} theorems, "
          f"{len(corpus.table.entries)} transitions")
    return 0


def _add_sim_stdio(sub) -> None:
    p = sub.add_parser("sim-stdio", help="serve a corpus over the stdio line protocol")
    p.add_argument("--table", required=True, help="corpus or transition-table JSON path")
    p.add_argument(
        "--delay-s", type=float, default=0.0,
        help="sleep before every apply response (timeout testing)",
    )
    p.set_defaults(func=_cmd_sim_stdio)


def _cmd_sim_stdio(args) -> int:
    import json as _json

    from .proofenv import SimProverTable

    obj = _json.loads(Path(args.table).read_text(encoding="utf-8"))
    if isinstance(obj, dict) and obj.get("kind") == "corpus":
        corpus = harness.Corpus.from_obj(obj)
        adapter.serve_table_stdio(corpus.table, corpus.theorems, apply_delay_s=args.delay_s)
    else:
        adapter.serve_table_stdio(SimProverTable.from_obj(obj), apply_delay_s=args.delay_s)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tacstep",
        description="Tactic suggestions for interactive theorem proving: server, search, harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_serve(sub)
    _add_eval(sub)
    _add_bench(sub)
    _add_render(sub)
    _add_corpus(sub)
    _add_sim_stdio(sub)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
