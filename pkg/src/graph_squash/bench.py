"""Synthetic graphs with planted synonym predicates, random synonym-closed
queries, and the benchmark runner behind the ``bench`` command."""

from __future__ import annotations

import json
import logging
import os
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .embedding import EmbeddingConfig, TrainConfig, planted_similarity_sets, read_vectors
from .gbs import gbs_answer, gbs_rewrite, gbs_summarize
from .metrics import BenchRow, summarization_ratio
from .qbs import qbs_run
from .rdf import IRI, Graph, Triple, load_ntriples
from .reasoner import RuleConfig
from .sparql import (BGP, Join, OptionalPattern, Query, TriplePattern, UnionPattern, Variable,
                     answer_set, body_variables, evaluate, extract_predicates, parse_query,
                     read_query)

log = logging.getLogger(__name__)

ENTITY_NS = "http://example.org/entity/"
PREDICATE_NS = "http://example.org/property/"


class SpecInvalid(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    entity_count: int = 200
    predicate_count: int = 12
    cluster_sizes: tuple = (3, 2)
    triples_per_predicate: int = 60
    object_pool_size: int = 12
    seed: int = 0
    subject_pool_size: Optional[int] = None   # defaults to 2 * object_pool_size

    def __post_init__(self):
        object.__setattr__(self, "cluster_sizes", tuple(self.cluster_sizes))
        for name in ("entity_count", "predicate_count", "triples_per_predicate", "object_pool_size"):
            if getattr(self, name) <= 0:
                raise SpecInvalid(f"{name} must be positive")
        if any(c < 1 for c in self.cluster_sizes):
            raise SpecInvalid("cluster sizes must be >= 1")
        if sum(self.cluster_sizes) > self.predicate_count:
            raise SpecInvalid("cluster sizes exceed predicate_count")
        if self.object_pool_size > self.entity_count:
            raise SpecInvalid("object_pool_size exceeds entity_count")
        if self.subject_pool_size is not None and not 0 < self.subject_pool_size <= self.entity_count:
            raise SpecInvalid("subject_pool_size must be in [1, entity_count]")

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise SpecInvalid(f"unknown generator fields: {sorted(unknown)}")
        try:
            return cls(**known)
        except TypeError as exc:
            raise SpecInvalid(str(exc)) from None


def entity(i: int):
    return IRI(f"{ENTITY_NS}e{i}")


def predicate(i: int):
    return IRI(f"{PREDICATE_NS}p{i:03d}")


def generate_synthetic_graph(spec: GeneratorSpec):
    """Graph plus its planted predicate clusters (tuples of IRI strings, singletons included).

    Each cluster owns a subject pool and an object pool; every predicate of the
    cluster draws its triples from that pool product, so synonyms share
    neighbourhoods and unrelated predicates mostly do not.
    """
    rng = np.random.default_rng(spec.seed)
    sizes = list(spec.cluster_sizes) + [1] * (spec.predicate_count - sum(spec.cluster_sizes))
    n = spec.entity_count
    sub_pool = spec.subject_pool_size or min(n, 2 * spec.object_pool_size)
    triples = []
    clusters = []
    pid = 0
    for size in sizes:
        subjects = np.sort(rng.choice(n, size=sub_pool, replace=False))
        objects = np.sort(rng.choice(n, size=spec.object_pool_size, replace=False))
        members = []
        capacity = len(subjects) * len(objects)
        k = min(spec.triples_per_predicate, capacity)
        for _ in range(size):
            p = predicate(pid)
            members.append(p.value)
            pid += 1
            cells = rng.choice(capacity, size=k, replace=False)
            for c in np.sort(cells):
                s = int(subjects[c // len(objects)])
                o = int(objects[c % len(objects)])
                triples.append(Triple(entity(s), p, entity(o)))
        clusters.append(tuple(members))
    return Graph(triples), tuple(clusters)


def object_overlap(graph: Graph, predicates) -> float:
    """Jaccard overlap of the object sets of ``predicates``."""
    sets = [{t.object for t in graph.match(None, IRI(p), None)} for p in predicates]
    union = set().union(*sets)
    if not union:
        return 1.0
    return len(set.intersection(*sets)) / len(union)


def clusters_to_tsv(clusters) -> str:
    return "".join("\t".join(c) + "\n" for c in clusters)


def clusters_from_tsv(text: str) -> tuple:
    return tuple(tuple(line.split("\t")) for line in text.splitlines() if line.strip())


# --- random synonym-closed queries ----------------------------------------------

VARS = ("a", "b", "c", "d")


def _block(cluster, subj, obj):
    """One pattern per cluster member over shared endpoints, as a UNION chain."""
    node = None
    for p in cluster:
        leaf = BGP((TriplePattern(subj, IRI(p), obj),))
        node = leaf if node is None else UnionPattern(node, leaf)
    return node


def random_query(graph: Graph, clusters, rng: np.random.Generator, max_patterns: int = 4,
                 operators=("join", "union", "optional")) -> Query:
    """A query of 1..max_patterns triple patterns where every constant predicate of a
    planted cluster appears together with all of its synonyms in one UNION block
    over the same subject and object.

    Queries of this shape ask for the merged relation, which is the premise under
    which rewriting onto a representative is answer-preserving.
    """
    present = {p.value for p in graph.predicates()}
    usable = [c for c in clusters if len(c) <= max_patterns and any(p in present for p in c)]
    if not usable:
        raise SpecInvalid("no cluster fits the pattern budget")
    budget = max_patterns
    used_vars = ["a"]
    node = None
    fresh = iter(VARS[1:])
    n_blocks = int(rng.integers(1, 4))
    for _ in range(n_blocks):
        fitting = [c for c in usable if len(c) <= budget]
        if not fitting:
            break
        cluster = fitting[int(rng.integers(len(fitting)))]
        budget -= len(cluster)
        subj = Variable(used_vars[int(rng.integers(len(used_vars)))])
        obj_var = next(fresh, None)
        if obj_var is None or rng.random() < 0.3:
            rows = [t for p in cluster for t in graph.match(None, IRI(p), None)]
            if rows:
                obj = rows[int(rng.integers(len(rows)))].object
            else:
                obj = Variable(used_vars[-1])
        else:
            obj = Variable(obj_var)
            used_vars.append(obj_var)
        if rng.random() < 0.2 and isinstance(obj, Variable) and len(used_vars) > 1:
            # chain: the new block starts where an earlier one ended
            subj, obj = Variable(used_vars[-2]), obj
        block = _block(cluster, subj, obj)
        if node is None:
            node = block
            continue
        op = operators[int(rng.integers(len(operators)))]
        if op == "join":
            if isinstance(node, BGP) and isinstance(block, BGP):
                node = BGP(node.patterns + block.patterns)
            else:
                node = Join(node, block)
        elif op == "union":
            node = UnionPattern(node, block)
        else:
            node = OptionalPattern(node, block)
    if node is None:
        raise SpecInvalid("could not build a query")
    distinct = bool(rng.random() < 0.5)
    names = body_variables(node)
    if rng.random() < 0.4:
        projection = None
    else:
        k = int(rng.integers(1, len(names) + 1))
        idx = sorted(rng.choice(len(names), size=k, replace=False))
        projection = tuple(names[i] for i in idx)
    return Query(projection, distinct, node)


# --- property suite ----------------------------------------------------------------

# Skip-gram settings under which walk embeddings over a query subgraph recover the
# planted clusters of suite graphs at threshold 0.5 (see scripts/tune_embedding.py).
SUITE_TRAIN = TrainConfig(dims=32, window=1, epochs=20)


def suite_case(index: int, queries: int = 10):
    """Graph ``index`` of the randomized property suite with its clusters and queries.

    Pools are kept dense (few objects, many triples per predicate) so that synonyms
    share most of their neighbourhood. Graphs stay under 5,000 triples.
    """
    rng = np.random.default_rng(index)
    spec = GeneratorSpec(
        entity_count=int(rng.integers(100, 400)),
        predicate_count=int(rng.integers(8, 16)),
        cluster_sizes=(3, 2, 2),
        triples_per_predicate=int(rng.integers(40, 200)),
        object_pool_size=int(rng.integers(4, 10)),
        seed=index,
    )
    graph, clusters = generate_synthetic_graph(spec)
    return graph, clusters, [random_query(graph, clusters, rng) for _ in range(queries)]


# --- benchmark runner ------------------------------------------------------------

@dataclass
class GraphEntry:
    id: str
    path: Optional[str] = None
    generator: Optional[dict] = None
    clusters_path: Optional[str] = None
    queries: list = field(default_factory=list)


@dataclass
class BenchConfig:
    graphs: list
    queries: list = field(default_factory=list)   # [{"id", "path"|"text"}] or [{"random": n, "seed": s}]
    engines: tuple = ("direct", "gbs", "qbs")
    threshold: float = 0.5
    similarity: str = "oracle"                       # oracle | rdf2vec | word-vectors
    vectors: Optional[str] = None
    repetitions: int = 3
    keep_singletons: bool = False
    infer: bool = True                               # GBS inference step
    seed: int = 0
    walk_length: int = 4
    walks_per_entity: int = 10
    train: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "BenchConfig":
        d = dict(d)
        graphs = []
        for g in d.pop("graphs"):
            g = dict(g)
            for key in ("path", "clusters_path"):
                if g.get(key):
                    g[key] = os.path.join(base_dir, g[key])
            graphs.append(GraphEntry(**g))
        queries = []
        for q in d.pop("queries", []):
            q = dict(q)
            if q.get("path"):
                q["path"] = os.path.join(base_dir, q["path"])
            queries.append(q)
        if d.get("vectors"):
            d["vectors"] = os.path.join(base_dir, d["vectors"])
        if "engines" in d:
            d["engines"] = tuple(d["engines"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(graphs=graphs, queries=queries, **d)
        bad = set(cfg.engines) - {"direct", "gbs", "qbs"}
        if bad:
            raise ValueError(f"unknown engines: {sorted(bad)}")
        if not 0 < cfg.threshold < 1:
            raise ValueError("threshold must be in (0, 1)")
        if cfg.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        return cfg

    @classmethod
    def load(cls, path) -> "BenchConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), os.path.dirname(os.path.abspath(path)))


@dataclass
class BenchReport:
    rows: list

    def to_jsonl(self, timings: bool = True) -> str:
        return "".join(json.dumps(r.to_dict(timings), sort_keys=True) + "\n" for r in self.rows)

    def mean_st(self, engine: str) -> Optional[float]:
        vals = [r.st_seconds for r in self.rows if r.engine == engine and not r.error]
        return statistics.fmean(vals) if vals else None

    def to_table(self, timings: bool = True) -> str:
        """Plain-text tables: compactness, answer counts, and execution time."""
        out = []
        by_graph: dict = {}
        for r in self.rows:
            by_graph.setdefault(r.graph_id, []).append(r)

        out.append("Summarization ratio (SR) and summarization time (ST)")
        out.append(f"{'graph':<16}{'triples':>10}{'GBS SR':>10}{'GBS ST':>10}{'QBS SR':>10}{'QBS ST':>10}")
        for gid, rows in by_graph.items():
            def agg(engine, attr):
                vals = [getattr(r, attr) for r in rows if r.engine == engine and not r.error]
                return statistics.fmean(vals) if vals else None
            n = rows[0].original_triples
            cells = []
            for engine in ("gbs", "qbs"):
                sr, st = agg(engine, "sr_percent"), agg(engine, "st_seconds")
                cells.append(f"{sr:>9.1f}%" if sr is not None else f"{'-':>10}")
                if timings:
                    cells.append(f"{st:>9.3f}s" if st is not None else f"{'-':>10}")
                else:
                    cells.append(f"{'*':>10}")
            out.append(f"{gid:<16}{n:>10}" + "".join(cells))
        out.append("")
        out.append("Number of distinct answers (bag in parentheses)")
        out.append(f"{'graph':<16}{'query':<10}{'direct':>14}{'gbs':>14}{'qbs':>14}")
        for gid, rows in by_graph.items():
            qids = list(dict.fromkeys(r.query_id for r in rows))
            for qid in qids:
                cells = []
                for engine in ("direct", "gbs", "qbs"):
                    r = next((x for x in rows if x.query_id == qid and x.engine == engine), None)
                    if r is None:
                        cells.append(f"{'-':>14}")
                    elif r.error:
                        cells.append(f"{'error':>14}")
                    else:
                        cells.append(f"{f'{r.distinct_answers} ({r.bag_answers})':>14}")
                out.append(f"{gid:<16}{qid:<10}" + "".join(cells))
        if timings:
            out.append("")
            out.append("Execution time (seconds)")
            out.append(f"{'graph':<16}{'query':<10}{'direct':>10}{'gbs SUM':>10}{'gbs QA':>10}"
                       f"{'qbs SUM':>10}{'qbs QA':>10}")
            for gid, rows in by_graph.items():
                for qid in dict.fromkeys(r.query_id for r in rows):
                    cells = []
                    for engine, attr in (("direct", "qa_seconds"), ("gbs", "st_seconds"),
                                         ("gbs", "qa_seconds"), ("qbs", "st_seconds"),
                                         ("qbs", "qa_seconds")):
                        r = next((x for x in rows if x.query_id == qid and x.engine == engine), None)
                        cells.append(f"{getattr(r, attr):>10.4f}" if r and not r.error else f"{'-':>10}")
                    out.append(f"{gid:<16}{qid:<10}" + "".join(cells))
            for engine in ("gbs", "qbs"):
                m = self.mean_st(engine)
                if m is not None:
                    out.append(f"mean {engine} ST over all queries: {m:.4f}s")
        return "\n".join(out) + "\n"


def _load_graph(entry: GraphEntry):
    if entry.generator is not None:
        return generate_synthetic_graph(GeneratorSpec.from_dict(entry.generator))
    graph = load_ntriples(entry.path)
    if entry.clusters_path:
        with open(entry.clusters_path, encoding="utf-8") as fh:
            clusters = clusters_from_tsv(fh.read())
    else:
        clusters = tuple((p.value,) for p in sorted(graph.predicates()))
    return graph, clusters


def _queries_for(entry: GraphEntry, cfg: BenchConfig, graph: Graph, clusters) -> list:
    specs = entry.queries or cfg.queries
    out = []
    for spec in specs:
        if "random" in spec:
            rng = np.random.default_rng(spec.get("seed", cfg.seed))
            for i in range(int(spec["random"])):
                q = random_query(graph, clusters, rng, spec.get("max_patterns", 4))
                out.append((f"r{i}", q))
        elif "path" in spec:
            out.append((spec.get("id") or os.path.basename(spec["path"]), read_query(spec["path"])))
        else:
            out.append((spec["id"], parse_query(spec["text"])))
    return out


def embedding_config(cfg: BenchConfig, clusters) -> EmbeddingConfig:
    train = TrainConfig(**{"seed": cfg.seed, **cfg.train})
    if cfg.similarity == "oracle":
        return EmbeddingConfig("oracle", clusters=tuple(clusters))
    if cfg.similarity == "word-vectors":
        return EmbeddingConfig("word-vectors", vectors=read_vectors(cfg.vectors))
    return EmbeddingConfig("rdf2vec", walk_length=cfg.walk_length,
                           walks_per_entity=cfg.walks_per_entity, train=train)


def _timed(fn, repetitions: int):
    """Run ``fn`` ``repetitions`` times; return (last result, mean seconds)."""
    times = []
    result = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, statistics.fmean(times)


def _error_row(gid, qid, engine, n, exc) -> BenchRow:
    return BenchRow(qid, engine, n, 0, 0.0, 0.0, 0.0, 0.0, 0, 0,
                    None if engine == "direct" else False, gid, f"{type(exc).__name__}: {exc}")


def run_benchmark(cfg: BenchConfig) -> BenchReport:
    rows = []
    rules = RuleConfig(budget_factor=None) if cfg.infer else None
    for entry in cfg.graphs:
        graph, clusters = _load_graph(entry)
        n = len(graph)
        emb = embedding_config(cfg, clusters)
        queries = _queries_for(entry, cfg, graph, clusters)

        direct = {}
        for qid, q in queries:
            sols, qa = _timed(lambda: evaluate(graph, q), cfg.repetitions)
            direct[qid] = answer_set(sols)
            if "direct" in cfg.engines:
                rows.append(BenchRow(qid, "direct", n, n, 0.0, 1.0 if n else 0.0, 0.0, qa,
                                     len(direct[qid]), len(sols), None, entry.id))

        if "gbs" in cfg.engines:
            try:
                summary, st = _timed(lambda: gbs_summarize(graph, rules, cfg.keep_singletons),
                                     cfg.repetitions)
                gbs_store = None if cfg.similarity == "oracle" else emb.store_for(summary.graph)
            except Exception as exc:  # recorded, not fatal
                log.exception("gbs summarization failed on %s", entry.id)
                rows.extend(_error_row(entry.id, qid, "gbs", n, exc) for qid, _ in queries)
                summary = None
            if summary is not None:
                m = len(summary.graph)
                cands = [p.value for p in summary.graph.predicates()]
                for qid, q in queries:
                    try:
                        def online():
                            if cfg.similarity == "oracle":
                                preds = [p.value for p in extract_predicates(q)]
                                sets = planted_similarity_sets(clusters, preds, set(cands) | set(preds),
                                                               cfg.threshold)
                                q2, _ = gbs_rewrite(q, sets=sets)
                            elif gbs_store is None:
                                q2 = q
                            else:
                                q2, _ = gbs_rewrite(q, gbs_store, cfg.threshold, cands)
                            return gbs_answer(summary, q2)
                        sols, qa = _timed(online, cfg.repetitions)
                        got = answer_set(sols)
                        rows.append(BenchRow(
                            qid, "gbs", n, m, summarization_ratio(n, m) if n else 0.0,
                            m / n if n else 0.0, st, qa, len(got), len(sols),
                            got == direct[qid], entry.id,
                            extra={"subset": got <= direct[qid],
                                   "dropped_singletons": summary.dropped_singletons}))
                    except Exception as exc:
                        log.exception("gbs query %s failed", qid)
                        rows.append(_error_row(entry.id, qid, "gbs", n, exc))

        if "qbs" in cfg.engines:
            for qid, q in queries:
                try:
                    results = []
                    for _ in range(cfg.repetitions):
                        results.append(qbs_run(graph, q, emb, cfg.threshold, query_id=qid))
                    res = results[-1]
                    row = res.row
                    row.st_seconds = statistics.fmean(r.row.st_seconds for r in results)
                    row.qa_seconds = statistics.fmean(r.row.qa_seconds for r in results)
                    row.graph_id = entry.id
                    row.lossless = answer_set(res.solutions) == direct[qid]
                    rows.append(row)
                except Exception as exc:
                    log.exception("qbs query %s failed", qid)
                    rows.append(_error_row(entry.id, qid, "qbs", n, exc))
    return BenchReport(rows)
