"""Transitive-closure inference with rdf:type propagation through subClassOf."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .rdf import IRI, RDF_TYPE, RDFS_SUBCLASSOF, Graph, Term, Triple


class FixpointBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class RuleConfig:
    transitive_predicates: frozenset = frozenset({IRI(RDFS_SUBCLASSOF)})
    type_predicate: Term = IRI(RDF_TYPE)
    subclass_predicate: Term = IRI(RDFS_SUBCLASSOF)
    type_propagation: bool = True
    # cap on derived triples as a multiple of the input size; None disables it
    budget_factor: Optional[float] = 10.0

    def __post_init__(self):
        if not self.transitive_predicates:
            raise ValueError("transitive_predicates must be non-empty")
        object.__setattr__(self, "transitive_predicates", frozenset(self.transitive_predicates))


def _compose(left: dict, right: dict, known: set) -> set:
    """Pairs (x, z) with x->y in ``left`` and y->z in ``right`` that are not yet known."""
    out = set()
    for x, ys in left.items():
        for y in ys:
            for z in right.get(y, ()):
                if (x, z) not in known:
                    out.add((x, z))
    return out


def _adjacency(pairs) -> dict:
    adj = defaultdict(set)
    for a, b in pairs:
        adj[a].add(b)
    return adj


def transitive_closure(graph: Graph, rules: RuleConfig = RuleConfig()) -> Graph:
    """Least fixpoint of the transitivity and type-propagation rules over ``graph``.

    Semi-naive: each round only joins the previous round's delta against the
    full relation, in both directions.
    """
    terms = graph.terms
    transitive = [graph.id_of(t) for t in sorted(rules.transitive_predicates)]
    transitive = [t for t in transitive if t is not None]
    type_id = graph.id_of(rules.type_predicate)
    sub_id = graph.id_of(rules.subclass_predicate)

    # relation name -> set of (a, b); type facts use the pseudo-key "type"
    full: dict = {}
    for t in transitive:
        full[t] = {(s, o) for s, _, o in graph.match_ids(p=t)}
    propagate = rules.type_propagation and type_id is not None and sub_id is not None
    if propagate:
        full["type"] = {(s, o) for s, _, o in graph.match_ids(p=type_id)}
        full.setdefault(sub_id, {(s, o) for s, _, o in graph.match_ids(p=sub_id)})

    limit = None
    if rules.budget_factor is not None:
        limit = int(rules.budget_factor * len(graph))
    derived = 0
    delta = {k: set(v) for k, v in full.items()}

    while any(delta.values()):
        new: dict = {}
        for t in transitive:
            if not delta.get(t):
                continue
            all_adj = _adjacency(full[t])
            d_adj = _adjacency(delta[t])
            found = _compose(d_adj, all_adj, full[t]) | _compose(all_adj, d_adj, full[t])
            new[t] = found
        if propagate:
            sub_adj = _adjacency(full[sub_id])
            found = set()
            if delta.get("type"):
                found |= _compose(_adjacency(delta["type"]), sub_adj, full["type"])
            if delta.get(sub_id):
                found |= _compose(_adjacency(full["type"]), _adjacency(delta[sub_id]), full["type"])
            new["type"] = found
        for key, found in new.items():
            full[key] |= found
            derived += len(found)
        if limit is not None and derived > limit:
            raise FixpointBudgetExceeded(
                f"derived {derived} triples, cap is {limit} for {len(graph)} input triples")
        delta = new

    if derived == 0:
        return graph
    rows = set(graph.rows())
    for key, pairs in full.items():
        pred = type_id if key == "type" else key
        rows.update((a, pred, b) for a, b in pairs)
    return Graph.from_ids(terms, rows)
