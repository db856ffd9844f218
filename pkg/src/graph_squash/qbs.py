"""Query-based summarization.

Only the part of the graph the query can touch is kept: triples carrying a
query predicate or a query object. Triples of predicates similar to a query
predicate are copied under the cluster representative (keeping the witness
triple's subject and object), and the query is rewritten onto the
representatives.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Union

from .embedding import EmbeddingConfig, SimilaritySet
from .gbs import mutual_clusters
from .metrics import BenchRow, summarization_ratio
from .rdf import IRI, Graph, Term, Triple, require_no_literals
from .reasoner import RuleConfig, transitive_closure
from .sparql import (Query, answer_set, evaluate, extract_objects, extract_predicates,
                     parse_query, rewrite)

log = logging.getLogger(__name__)

WITNESS = "witness"
QUERY_OBJECTS = "query-objects"  # literal Super-Subject x Super-Object pairing; unsound


@dataclass(frozen=True)
class QbsBundle:
    subgraph: Graph
    summary: Graph
    query: Query
    similarity: Mapping[str, SimilaritySet]
    substitution: Mapping[str, str]
    new_triples: int

    def similarity_tsv(self) -> str:
        lines = []
        for anchor in sorted(self.similarity):
            for member, score in sorted(self.similarity[anchor].members.items()):
                lines.append(f"{anchor}\t{member}\t{score!r}")
        return "".join(line + "\n" for line in lines)


def qbs_extract_subgraph(graph: Graph, q: Query) -> Graph:
    preds = [graph.id_of(p) for p in extract_predicates(q)]
    objs = [graph.id_of(o) for o in extract_objects(q)]
    if not preds and not objs:
        log.warning("query has no constant predicates or objects; subgraph is empty")
    rows = set()
    for p in preds:
        if p is not None:
            rows.update(graph.match_ids(p=p))
    for o in objs:
        if o is not None:
            rows.update(graph.match_ids(o=o))
    return Graph.from_ids(graph.terms, rows)


def choose_representatives(query_predicates, sets: Mapping[str, SimilaritySet]) -> dict:
    """Query predicate -> representative; a lone query predicate represents itself."""
    substitution = {}
    for cluster in mutual_clusters(query_predicates, sets):
        rep = cluster[0]  # clusters are sorted, so this is also the lexicographic minimum
        for p in cluster:
            substitution[p] = rep
    return substitution


def qbs_augment(graph: Graph, g: Graph, q: Query, embedding: Optional[EmbeddingConfig] = None,
                threshold: float = 0.5, sets: Optional[Mapping[str, SimilaritySet]] = None,
                candidate_scope: str = "subgraph", pairing: str = WITNESS) -> QbsBundle:
    """Compute similarity sets, rewrite ``q``, and add canonicalized witness triples to ``g``.

    ``sets`` overrides the embedding (precomputed or known clusters).
    ``candidate_scope="graph"`` searches the whole graph's predicates instead of ``g``'s.
    """
    query_preds = sorted(p.value for p in extract_predicates(q))
    if sets is None:
        if embedding is None:
            raise ValueError("need an embedding config or precomputed similarity sets")
        scope = g if candidate_scope == "subgraph" else graph
        candidates = [p.value for p in scope.predicates()]
        sets = embedding.similarity_sets(g, query_preds, candidates, threshold)
    substitution = choose_representatives(query_preds, sets)
    rewritten = rewrite(q, substitution)

    witnesses: dict = {}
    for p in query_preds:
        rep = substitution[p]
        members = sets[p].names() if p in sets else {p}
        witnesses.setdefault(rep, set()).update(members)

    terms = graph.terms
    query_objects = sorted(o for o in extract_objects(q))
    buffer: set = set()
    for rep in sorted(witnesses):
        rep_term = IRI(rep)
        for member in sorted(witnesses[rep]):
            pid = graph.id_of(IRI(member))
            if pid is None:
                continue
            rows = graph.match_ids(p=pid)
            if pairing == WITNESS:
                buffer.update(Triple(terms[s], rep_term, terms[o]) for s, _, o in rows)
            elif pairing == QUERY_OBJECTS:
                subjects = {terms[s] for s, _, _ in rows}
                buffer.update(Triple(s, rep_term, o) for s in subjects for o in query_objects)
            else:
                raise ValueError(f"unknown pairing {pairing!r}")

    g_set = g.triple_set()
    added = [t for t in buffer if t not in g_set]
    summary = Graph(list(g_set) + added)
    return QbsBundle(g, summary, rewritten, dict(sets), substitution, len(added))


@dataclass
class QbsResult:
    bundle: QbsBundle
    solutions: list
    row: BenchRow
    timings: dict = field(default_factory=dict)


def qbs_run(graph: Graph, query: Union[str, Query], embedding: EmbeddingConfig = EmbeddingConfig(),
            threshold: float = 0.5, sets: Optional[Mapping[str, SimilaritySet]] = None,
            rules: Optional[RuleConfig] = None, keep_literals: bool = False,
            candidate_scope: str = "subgraph", pairing: str = WITNESS,
            query_id: str = "q") -> QbsResult:
    """Parse, extract, embed, augment, then evaluate the rewritten query over the summary.

    Inference is off by default; pass ``rules`` to close the graph first.
    """
    require_no_literals(graph, keep_literals)
    q = parse_query(query) if isinstance(query, str) else query
    t0 = time.perf_counter()
    source = transitive_closure(graph, rules) if rules is not None else graph
    g = qbs_extract_subgraph(source, q)
    bundle = qbs_augment(source, g, q, embedding, threshold, sets=sets,
                         candidate_scope=candidate_scope, pairing=pairing)
    t1 = time.perf_counter()
    solutions = evaluate(bundle.summary, bundle.query)
    t2 = time.perf_counter()

    n, m = len(graph), len(bundle.summary)
    row = BenchRow(
        query_id=query_id, engine="qbs", original_triples=n, summary_triples=m,
        sr_percent=summarization_ratio(n, m) if n else 0.0,
        raw_ratio=m / n if n else 0.0,
        st_seconds=t1 - t0, qa_seconds=t2 - t1,
        distinct_answers=len(answer_set(solutions)), bag_answers=len(solutions),
        extra={"subgraph_triples": len(g), "new_triples": bundle.new_triples},
    )
    return QbsResult(bundle, solutions, row, {"st": t1 - t0, "qa": t2 - t1})


@dataclass(frozen=True)
class LosslessReport:
    equal: bool
    original_count: int
    summary_count: int
    missing: tuple   # answers of Q over G absent from Q'' over G''
    extra: tuple     # answers of Q'' over G'' absent from Q over G

    def describe(self) -> str:
        head = (f"lossless={self.equal} original={self.original_count} "
                f"summary={self.summary_count}")
        parts = [head]
        for label, sols in (("missing", self.missing), ("extra", self.extra)):
            for s in sols:
                parts.append(f"  {label}: " + " ".join(f"?{k}={v.n3()}" for k, v in sorted(s.items())))
        return "\n".join(parts)


def verify_lossless(graph: Graph, query: Union[str, Query], bundle: Optional[QbsBundle] = None,
                    solutions: Optional[list] = None) -> LosslessReport:
    """Compare distinct answers of the original query over the original graph against
    ``solutions`` (or, if omitted, the bundle's rewritten query over its summary)."""
    q = parse_query(query) if isinstance(query, str) else query
    if solutions is None:
        if bundle is None:
            raise ValueError("need solutions or a bundle")
        solutions = evaluate(bundle.summary, bundle.query)
    direct = answer_set(evaluate(graph, replace(q, distinct=True)))
    got = answer_set(solutions)
    missing = tuple(sorted((dict(s) for s in direct - got), key=_sort_key))
    extra = tuple(sorted((dict(s) for s in got - direct), key=_sort_key))
    return LosslessReport(direct == got, len(direct), len(got), missing, extra)


def _sort_key(sol):
    return tuple(sorted((k, v) for k, v in sol.items()))
