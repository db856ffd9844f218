"""Grouping-based summarization.

Offline, subjects sharing a (predicate, object) pair in the inferred graph
collapse into one super-node. Online, the query's similar predicates are
merged onto a representative and the rewritten query runs over the summary,
with super-nodes expanded back into their members.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .embedding import SimilaritySet, VectorStore, store_similarity_sets
from .rdf import IRI, Graph, Term, Triple, require_no_literals
from .reasoner import RuleConfig, transitive_closure
from .sparql import Query, distinct, evaluate, extract_predicates, rewrite, solution_key

log = logging.getLogger(__name__)

SUPER_NODE_PREFIX = "urn:sn:"


def super_node_id(members: Iterable[Term]) -> Term:
    digest = hashlib.sha1("\n".join(sorted(m.n3() for m in members)).encode("utf-8"))
    return IRI(SUPER_NODE_PREFIX + digest.hexdigest()[:16])


@dataclass(frozen=True)
class SuperNode:
    id: Term
    members: tuple
    key: tuple  # (predicate, object)


@dataclass(frozen=True)
class GbsSummary:
    graph: Graph
    membership: Mapping[Term, tuple]
    dropped_singletons: int
    inferred_triples: int
    super_nodes: tuple = ()

    def is_super_node(self, term: Term) -> bool:
        return term in self.membership

    def membership_tsv(self) -> str:
        lines = []
        for sn in sorted(self.membership):
            lines.append(sn.value + "\t" + ",".join(m.value if m.is_iri else m.n3()
                                                    for m in self.membership[sn]))
        return "".join(line + "\n" for line in lines)


def parse_membership_tsv(text: str) -> dict:
    from .rdf import BNode
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        sn, _, members = line.partition("\t")
        terms = []
        for m in members.split(","):
            terms.append(BNode(m[2:]) if m.startswith("_:") else IRI(m))
        out[IRI(sn)] = tuple(sorted(terms))
    return out


def gbs_summarize(graph: Graph, rules: Optional[RuleConfig] = RuleConfig(),
                  keep_singletons: bool = False, keep_literals: bool = False) -> GbsSummary:
    """Build the grouping-based summary; ``rules=None`` skips inference."""
    require_no_literals(graph, keep_literals)
    inferred = transitive_closure(graph, rules) if rules is not None else graph
    terms = inferred.terms

    groups: dict = defaultdict(list)
    for s, p, o in inferred.rows():
        groups[(p, o)].append(s)

    membership: dict = {}
    nodes = []
    buffer: set = set()
    dropped = 0
    for (p, o) in sorted(groups):
        subjects = groups[(p, o)]
        if len(subjects) >= 2:
            members = tuple(terms[s] for s in sorted(subjects))
            sn = super_node_id(members)
            membership[sn] = members
            nodes.append(SuperNode(sn, members, (terms[p], terms[o])))
            buffer.add(Triple(sn, terms[p], terms[o]))
        elif keep_singletons:
            buffer.add(Triple(terms[subjects[0]], terms[p], terms[o]))
        else:
            dropped += 1
    return GbsSummary(Graph(buffer), membership, dropped, len(inferred), tuple(nodes))


def mutual_clusters(predicates: Iterable[str], sets: Mapping[str, SimilaritySet]) -> list:
    """Partition ``predicates``: p and q share a cluster when each is in the other's set."""
    preds = sorted(set(predicates))
    parent = {p: p for p in preds}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for p, q in itertools.combinations(preds, 2):
        sp, sq = sets.get(p), sets.get(q)
        if sp is not None and sq is not None and q in sp and p in sq:
            ra, rb = find(p), find(q)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    clusters = defaultdict(list)
    for p in preds:
        clusters[find(p)].append(p)
    return sorted((tuple(c) for c in clusters.values()), key=lambda c: c[0])


def gbs_rewrite(q: Query, store: Optional[VectorStore] = None, threshold: float = 0.5,
                candidates: Optional[Iterable] = None,
                sets: Optional[Mapping[str, SimilaritySet]] = None):
    """Merge mutually similar query predicates onto their lexicographically smallest IRI.

    Returns ``(rewritten query, similarity sets)``. Pass ``sets`` to bypass the
    vector store (e.g. known clusters).
    """
    preds = sorted(p.value for p in extract_predicates(q))
    if sets is None:
        if store is None:
            raise ValueError("need a vector store or precomputed similarity sets")
        pool = set(preds) | {c.value if isinstance(c, Term) else c for c in (candidates or ())}
        sets = store_similarity_sets(store, preds, pool, threshold)
    substitution = {}
    for cluster in mutual_clusters(preds, sets):
        rep = cluster[0]
        for p in cluster:
            substitution[p] = rep
    return rewrite(q, substitution), dict(sets)


def expand_solutions(solutions: Iterable[Mapping], membership: Mapping[Term, tuple]) -> list:
    out = []
    for sol in solutions:
        names = sorted(sol)
        choices = [membership.get(sol[n], (sol[n],)) for n in names]
        for combo in itertools.product(*choices):
            out.append(dict(zip(names, combo)))
    return out


def gbs_answer(summary: GbsSummary, q: Query) -> list:
    """Evaluate an already rewritten query over the summary and expand super-nodes."""
    raw = evaluate(summary.graph, q)
    out = expand_solutions(raw, summary.membership)
    if q.distinct:
        out = distinct(out)
    names = [v.name for v in q.variables]
    out.sort(key=lambda s: solution_key(s, names))
    return out
