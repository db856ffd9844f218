"""Command-line front end: gen, summarize, query, verify, bench."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .bench import (BenchConfig, GeneratorSpec, SpecInvalid, clusters_from_tsv, clusters_to_tsv,
                    generate_synthetic_graph, run_benchmark)
from .embedding import EmbeddingConfig, EmbeddingError, TrainConfig, planted_similarity_sets, read_vectors
from .gbs import gbs_answer, gbs_rewrite, gbs_summarize
from .qbs import QUERY_OBJECTS, WITNESS, qbs_run, verify_lossless
from .rdf import IRI, RDFError, load_ntriples, serialize_ntriples, strip_literals
from .reasoner import FixpointBudgetExceeded, RuleConfig
from .sparql import (QueryError, evaluate, extract_predicates, read_query, serialize_query,
                     solutions_to_json, solutions_to_tsv)

log = logging.getLogger("graph_squash")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
THRESHOLD_ENV = "GRAPH_SQUASH_THRESHOLD"

DATA_ERRORS = (RDFError, QueryError, EmbeddingError, SpecInvalid, FixpointBudgetExceeded,
               OSError, json.JSONDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _threshold(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError("threshold must be in (0, 1)")
    return value


def _common(p: argparse.ArgumentParser, embedding=True, inference=True, literals=True):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    if literals:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--reject-literals", dest="literals", action="store_const", const="reject",
                       help="fail while parsing if the input has a literal")
        g.add_argument("--keep-literals", dest="literals", action="store_const", const="keep",
                       help="summarize graphs containing literals anyway")
        g.add_argument("--strip-literals", dest="literals", action="store_const", const="strip",
                       help="drop literal-object triples before summarizing")
        p.set_defaults(literals="error")
    if inference:
        g = p.add_mutually_exclusive_group()
        g.add_argument("--infer", dest="infer", action="store_true", default=None,
                       help="close the graph under the transitive rules first")
        g.add_argument("--no-infer", dest="infer", action="store_false",
                       help="skip inference (GBS infers by default, QBS does not)")
        p.add_argument("--transitive-pred", action="append", default=None, metavar="IRI",
                       help="transitive predicate (repeatable; default rdfs:subClassOf)")
        p.add_argument("--no-type-prop", action="store_true",
                       help="do not propagate rdf:type along subClassOf")
        p.add_argument("--fixpoint-budget", type=float, default=10.0,
                       help="max closure size as a multiple of the input (0 = unlimited)")
    if embedding:
        default = os.environ.get(THRESHOLD_ENV, "0.5")
        p.add_argument("--threshold", type=_threshold, default=None,
                       help=f"similarity threshold (default {default}, env {THRESHOLD_ENV})")
        p.add_argument("--embedding", choices=("rdf2vec", "word-vectors", "oracle"), default="rdf2vec")
        p.add_argument("--vectors", help="word-vector text file (word-vectors mode)")
        p.add_argument("--clusters", help="synonym clusters TSV (oracle mode)")
        p.add_argument("--walk-length", type=int, default=4)
        p.add_argument("--walks-per-entity", type=int, default=10)
        defaults = TrainConfig()
        p.add_argument("--dims", type=int, default=defaults.dims)
        p.add_argument("--window", type=int, default=defaults.window)
        p.add_argument("--negatives", type=int, default=defaults.negatives)
        p.add_argument("--epochs", type=int, default=defaults.epochs)
        p.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
        p.add_argument("--keep-singletons", action="store_true",
                       help="GBS: keep (predicate, object) groups with one subject")
        p.add_argument("--pairing", choices=(WITNESS, QUERY_OBJECTS), default=WITNESS,
                       help="QBS new-triple pairing; query-objects is unsound")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graph-squash", description="Query-aware RDF graph summarization.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic graph with planted synonym clusters")
    p.add_argument("--spec", help="generator spec as a JSON file")
    p.add_argument("--out", required=True, help="output N-Triples path")
    p.add_argument("--clusters-out", help="clusters TSV path (default: <out>.clusters.tsv)")
    _common(p, embedding=False, inference=False, literals=False)
    p.set_defaults(seed=None)

    p = sub.add_parser("summarize", help="build a GBS or QBS summary")
    p.add_argument("--method", choices=("gbs", "qbs"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--query")
    p.add_argument("--out", required=True, help="output directory")
    _common(p)

    p = sub.add_parser("query", help="answer a query with one engine")
    p.add_argument("--engine", choices=("direct", "gbs", "qbs"), default="direct")
    p.add_argument("--input", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--out", help="results path (default stdout)")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    _common(p)

    p = sub.add_parser("verify", help="run QBS and check its answers against direct evaluation")
    p.add_argument("--input", required=True)
    p.add_argument("--query", required=True)
    _common(p)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("--config", required=True, help="benchmark config JSON")
    p.add_argument("--out", required=True, help="report prefix; writes <out>.jsonl and <out>.txt")
    p.add_argument("--no-timings", action="store_true", help="omit timing fields from the report")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


# --- helpers ---------------------------------------------------------------------

def _threshold_value(args) -> float:
    if args.threshold is not None:
        return args.threshold
    raw = os.environ.get(THRESHOLD_ENV)
    if raw is None:
        return 0.5
    try:
        return _threshold(raw)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"{THRESHOLD_ENV}: {exc}") from None


def _require_file(path: str, flag: str):
    if not os.path.isfile(path):
        raise UsageError(f"{flag}: no such file: {path}")


def _load_input(args):
    _require_file(args.input, "--input")
    graph = load_ntriples(args.input, reject_literals=args.literals == "reject")
    if args.literals == "strip":
        graph = strip_literals(graph)
    return graph


def _rules(args, default_on: bool) -> Optional[RuleConfig]:
    on = default_on if args.infer is None else args.infer
    if not on:
        return None
    kwargs = {"type_propagation": not args.no_type_prop,
              "budget_factor": args.fixpoint_budget or None}
    if args.transitive_pred:
        kwargs["transitive_predicates"] = frozenset(IRI(t) for t in args.transitive_pred)
    return RuleConfig(**kwargs)


def _embedding(args) -> EmbeddingConfig:
    if args.embedding == "oracle":
        if not args.clusters:
            raise UsageError("--embedding oracle needs --clusters")
        _require_file(args.clusters, "--clusters")
        with open(args.clusters, encoding="utf-8") as fh:
            return EmbeddingConfig("oracle", clusters=clusters_from_tsv(fh.read()))
    if args.embedding == "word-vectors":
        if not args.vectors:
            raise UsageError("--embedding word-vectors needs --vectors")
        _require_file(args.vectors, "--vectors")
        return EmbeddingConfig("word-vectors", vectors=read_vectors(args.vectors))
    try:
        train = TrainConfig(dims=args.dims, window=args.window, negatives=args.negatives,
                            epochs=args.epochs, learning_rate=args.learning_rate, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.walk_length < 1 or args.walks_per_entity < 1:
        raise UsageError("--walk-length and --walks-per-entity must be >= 1")
    return EmbeddingConfig("rdf2vec", walk_length=args.walk_length,
                           walks_per_entity=args.walks_per_entity, train=train)


def _read_query(args):
    _require_file(args.query, "--query")
    return read_query(args.query)


def _write(path: str, data) -> None:
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
        fh.write(data)


def _gbs_pipeline(graph, q, args):
    keep = args.literals in ("keep", "strip")
    summary = gbs_summarize(graph, _rules(args, default_on=True), args.keep_singletons, keep)
    emb = _embedding(args)
    threshold = _threshold_value(args)
    cands = [p.value for p in summary.graph.predicates()]
    if emb.source == "oracle":
        preds = [p.value for p in extract_predicates(q)]
        sets = planted_similarity_sets(emb.clusters, preds, set(cands) | set(preds), threshold)
        q2, _ = gbs_rewrite(q, sets=sets)
    else:
        store = emb.store_for(summary.graph)
        q2 = q if store is None else gbs_rewrite(q, store, threshold, cands)[0]
    return summary, q2, gbs_answer(summary, q2)


def _qbs(graph, q, args):
    return qbs_run(graph, q, _embedding(args), _threshold_value(args),
                   rules=_rules(args, default_on=False),
                   keep_literals=args.literals in ("keep", "strip"), pairing=args.pairing)


# --- commands --------------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.spec:
        _require_file(args.spec, "--spec")
        with open(args.spec, encoding="utf-8") as fh:
            d = json.load(fh)
    else:
        d = {}
    if args.seed is not None:
        d["seed"] = args.seed
    graph, clusters = generate_synthetic_graph(GeneratorSpec.from_dict(d))
    _write(args.out, serialize_ntriples(graph))
    _write(args.clusters_out or args.out + ".clusters.tsv", clusters_to_tsv(clusters))
    log.info("wrote %d triples, %d clusters", len(graph), len(clusters))
    return EXIT_OK


def cmd_summarize(args) -> int:
    if args.method == "qbs" and not args.query:
        raise UsageError("summarize --method qbs requires --query")
    if args.method == "gbs" and args.query:
        raise UsageError("summarize --method gbs takes no --query (GBS is built offline)")
    graph = _load_input(args)
    os.makedirs(args.out, exist_ok=True)
    if args.method == "gbs":
        summary = gbs_summarize(graph, _rules(args, default_on=True), args.keep_singletons,
                                args.literals in ("keep", "strip"))
        _write(os.path.join(args.out, "summary.nt"), serialize_ntriples(summary.graph))
        _write(os.path.join(args.out, "membership.tsv"), summary.membership_tsv())
        return EXIT_OK
    res = _qbs(graph, _read_query(args), args)
    b = res.bundle
    _write(os.path.join(args.out, "g.nt"), serialize_ntriples(b.subgraph))
    _write(os.path.join(args.out, "summary.nt"), serialize_ntriples(b.summary))
    _write(os.path.join(args.out, "query.rq"), serialize_query(b.query))
    _write(os.path.join(args.out, "similarity.tsv"), b.similarity_tsv())
    _write(os.path.join(args.out, "report.json"),
           json.dumps(res.row.to_dict(), indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_query(args) -> int:
    graph = _load_input(args)
    q = _read_query(args)
    if args.engine == "direct":
        sols = evaluate(graph, q)
    elif args.engine == "gbs":
        sols = _gbs_pipeline(graph, q, args)[2]
    else:
        sols = _qbs(graph, q, args).solutions
    render = solutions_to_tsv if args.format == "tsv" else solutions_to_json
    text = render(sols, q.variables)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    graph = _load_input(args)
    q = _read_query(args)
    res = _qbs(graph, q, args)
    report = verify_lossless(graph, q, res.bundle, res.solutions)
    print(report.describe())
    return EXIT_OK if report.equal else EXIT_VERIFY


def cmd_bench(args) -> int:
    _require_file(args.config, "--config")
    try:
        cfg = BenchConfig.load(args.config)
    except (TypeError, KeyError, ValueError) as exc:
        raise SpecInvalid(f"bad config: {exc}") from None
    if args.seed is not None:
        cfg.seed = args.seed
    report = run_benchmark(cfg)
    timings = not args.no_timings
    _write(args.out + ".jsonl", report.to_jsonl(timings))
    _write(args.out + ".txt", report.to_table(timings))
    sys.stdout.write(report.to_table(timings))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "summarize": cmd_summarize, "query": cmd_query,
            "verify": cmd_verify, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
