import numpy as np
import pytest

from graph_squash.rdf import IRI, RDF_TYPE, RDFS_SUBCLASSOF, Graph, Triple
from graph_squash.reasoner import FixpointBudgetExceeded, RuleConfig, transitive_closure

from conftest import ex

SUB = IRI(RDFS_SUBCLASSOF)
TYPE = IRI(RDF_TYPE)


def test_germany_is_a_country(desk):
    closed = transitive_closure(desk)
    added = closed.triple_set() - desk.triple_set()
    assert added == {Triple(ex("Germany"), TYPE, ex("Country"))}


def test_chain():
    g = Graph([Triple(ex("A"), SUB, ex("B")), Triple(ex("B"), SUB, ex("C")),
               Triple(ex("C"), SUB, ex("D"))])
    added = transitive_closure(g).triple_set() - g.triple_set()
    assert added == {Triple(ex("A"), SUB, ex("C")), Triple(ex("A"), SUB, ex("D")),
                     Triple(ex("B"), SUB, ex("D"))}


def test_no_rule_fires():
    g = Graph([Triple(ex("a"), ex("p"), ex("b"))])
    assert transitive_closure(g) == g


def test_extra_transitive_predicate_and_no_type_prop(desk):
    rules = RuleConfig(transitive_predicates={SUB, ex("partOf")}, type_propagation=False)
    g = desk.union([Triple(ex("x"), ex("partOf"), ex("y")), Triple(ex("y"), ex("partOf"), ex("z"))])
    added = transitive_closure(g, rules).triple_set() - g.triple_set()
    assert added == {Triple(ex("x"), ex("partOf"), ex("z"))}


def test_empty_rule_set_rejected():
    with pytest.raises(ValueError):
        RuleConfig(transitive_predicates=set())


def test_budget():
    n = 40
    chain = Graph(Triple(ex(f"c{i}"), SUB, ex(f"c{i + 1}")) for i in range(n))
    with pytest.raises(FixpointBudgetExceeded):
        transitive_closure(chain, RuleConfig(budget_factor=2.0))
    full = transitive_closure(chain, RuleConfig(budget_factor=None))
    assert len(full) == n * (n + 1) // 2


def _reachability(adj: np.ndarray) -> np.ndarray:
    """Boolean matrix closure by repeated squaring."""
    reach = adj.copy()
    while True:
        nxt = reach | ((reach.astype(np.int64) @ reach.astype(np.int64)) > 0)
        if (nxt == reach).all():
            return reach
        reach = nxt


def test_random_dags_match_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 201))
        density = float(rng.uniform(0.2, 3.0)) / n
        adj = np.triu(rng.random((n, n)) < density, k=1)
        perm = rng.permutation(n)  # hide the topological order from the ids
        nodes = [ex(f"n{int(i)}") for i in perm]
        g = Graph(Triple(nodes[i], SUB, nodes[j]) for i, j in zip(*np.nonzero(adj)))
        closed = transitive_closure(g, RuleConfig(budget_factor=None))
        reach = _reachability(adj)
        expected = {Triple(nodes[i], SUB, nodes[j]) for i, j in zip(*np.nonzero(reach))}
        assert closed.triple_set() == expected


def test_type_propagation_matches_reachability():
    rng = np.random.default_rng(3)
    n = 30
    adj = np.triu(rng.random((n, n)) < 0.1, k=1)
    classes = [ex(f"C{i}") for i in range(n)]
    triples = [Triple(classes[i], SUB, classes[j]) for i, j in zip(*np.nonzero(adj))]
    typed = {f"x{k}": int(rng.integers(n)) for k in range(10)}
    triples += [Triple(ex(x), TYPE, classes[c]) for x, c in typed.items()]
    closed = transitive_closure(Graph(triples), RuleConfig(budget_factor=None))
    reach = _reachability(adj)
    for x, c in typed.items():
        got = {t.object for t in closed.match(ex(x), TYPE)}
        assert got == {classes[c]} | {classes[j] for j in np.nonzero(reach[c])[0]}


def test_monotone_and_idempotent(desk):
    once = transitive_closure(desk)
    assert desk.triple_set() <= once.triple_set()
    assert transitive_closure(once) == once
