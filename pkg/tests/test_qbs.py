from dataclasses import replace

import numpy as np

from graph_squash.bench import generate_synthetic_graph, GeneratorSpec, random_query
from graph_squash.embedding import EmbeddingConfig, planted_similarity_sets
from graph_squash.qbs import (QUERY_OBJECTS, qbs_augment, qbs_extract_subgraph, qbs_run,
                              verify_lossless)
from graph_squash.rdf import IRI, Graph, Triple
from graph_squash.reasoner import RuleConfig
from graph_squash.sparql import BGP, TriplePattern, Variable, answer_set, evaluate, parse_query

from conftest import DESK_CLUSTER, Q_DESK, ex

ORACLE = EmbeddingConfig("oracle", clusters=(DESK_CLUSTER,))


def test_desk_subgraph(desk):
    g = qbs_extract_subgraph(desk, parse_query(Q_DESK))
    assert len(g) == 4
    assert {t.predicate for t in g} == {ex("birthPlace"), ex("nationality"), ex("country")}


def test_constant_free_and_absent_queries(desk):
    assert len(qbs_extract_subgraph(desk, parse_query("SELECT * WHERE { ?s ?p ?o }"))) == 0
    assert len(qbs_extract_subgraph(desk, parse_query("SELECT * WHERE { ?s <urn:x> <urn:y> }"))) == 0


def test_desk_augment(desk):
    q = parse_query(Q_DESK)
    g = qbs_extract_subgraph(desk, q)
    b = qbs_augment(desk, g, q, ORACLE)
    new = b.summary.triple_set() - g.triple_set()
    assert new == {Triple(ex("Anna"), ex("birthPlace"), ex("Germany")),
                   Triple(ex("Markus"), ex("birthPlace"), ex("Germany"))}
    assert b.new_triples == 2
    assert b.query.body == BGP((TriplePattern(Variable("p"), ex("birthPlace"), ex("Germany")),))


def test_desk_run_is_lossless(desk):
    res = qbs_run(desk, Q_DESK, ORACLE)
    assert {s["p"] for s in res.solutions} == {ex("Anna"), ex("Markus"), ex("Gertrud"), ex("Lena")}
    report = verify_lossless(desk, Q_DESK, res.bundle, res.solutions)
    assert report.equal and report.original_count == 4 == report.summary_count
    assert res.row.summary_triples == 6 and res.row.engine == "qbs"


def test_no_synonyms_is_identity(desk):
    q = parse_query(f"SELECT ?s WHERE {{ ?s <{ex('deathPlace').value}> ?o }}")
    res = qbs_run(desk, q, EmbeddingConfig("oracle", clusters=()))
    assert res.bundle.query == q and res.bundle.new_triples == 0
    assert verify_lossless(desk, q, res.bundle).equal


def test_empty_graph():
    res = qbs_run(Graph(), Q_DESK, ORACLE)
    assert res.solutions == [] and res.bundle.new_triples == 0


def test_mutation_is_detected(desk):
    res = qbs_run(desk, Q_DESK, ORACLE)
    b = res.bundle
    dropped = Triple(ex("Anna"), ex("birthPlace"), ex("Germany"))
    broken = replace(b, summary=Graph(t for t in b.summary if t != dropped))
    report = verify_lossless(desk, Q_DESK, broken)
    assert not report.equal
    assert report.missing == ({"p": ex("Anna")},)
    assert "missing: ?p=<http://example.org/Anna>" in report.describe()


def test_variable_object_keeps_witness_objects():
    g = Graph([Triple(ex("a"), ex("p"), ex("x")), Triple(ex("b"), ex("q"), ex("y")),
               Triple(ex("c"), ex("q"), ex("z"))])
    q = parse_query(f"SELECT * WHERE {{ {{ ?s <{ex('p').value}> ?o }} UNION {{ ?s <{ex('q').value}> ?o }} }}")
    res = qbs_run(g, q, EmbeddingConfig("oracle", clusters=((ex("p").value, ex("q").value),)))
    assert {(s["s"], s["o"]) for s in res.solutions} == {(ex("a"), ex("x")), (ex("b"), ex("y")),
                                                         (ex("c"), ex("z"))}


def test_query_objects_pairing_is_unsound(desk):
    desk2 = desk.union([Triple(ex("Paul"), ex("country"), ex("France"))])
    q = parse_query(Q_DESK)
    res = qbs_run(desk2, q, ORACLE, pairing=QUERY_OBJECTS, candidate_scope="graph")
    assert not verify_lossless(desk2, q, res.bundle).equal


def test_inference_does_not_change_answers(desk):
    plain = qbs_run(desk, Q_DESK, ORACLE)
    inferred = qbs_run(desk, Q_DESK, ORACLE, rules=RuleConfig())
    assert answer_set(plain.solutions) == answer_set(inferred.solutions)


def test_witness_property_and_size_bounds():
    rng = np.random.default_rng(8)
    for seed in range(15):
        graph, clusters = generate_synthetic_graph(GeneratorSpec(entity_count=80, predicate_count=8,
                                                                 cluster_sizes=(3, 2), seed=seed))
        oracle = EmbeddingConfig("oracle", clusters=clusters)
        for _ in range(5):
            q = random_query(graph, clusters, rng)
            b = qbs_run(graph, q, oracle).bundle
            g = b.subgraph
            assert len(g) <= len(graph)
            assert g.triple_set() <= b.summary.triple_set()
            assert len(b.summary) <= len(g) + b.new_triples
            for t in b.summary.triple_set() - g.triple_set():
                rep = t.predicate.value
                members = set().union(*(b.similarity[a].names() for a, r in b.substitution.items() if r == rep))
                assert any(Triple(t.subject, IRI(m), t.object) in graph for m in members)
